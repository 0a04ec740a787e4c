#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "rmt/random.hpp"
#include "rmt/spectra.hpp"

namespace rmt {

struct Cumulants {
  double variance = 1.0;
  double k3 = 0.0;
  double k4 = 0.0;
};

/// Law of a matrix entry before the 1/sqrt(N) scaling. Every law in the
/// catalog is centered and has closed-form cumulants.
struct EntryLaw {
  std::string name;
  std::function<double(Rng&)> sampler;
  Cumulants cumulants;

  double operator()(Rng& rng) const { return sampler(rng); }
};

/// gaussian, rademacher, uniform, skewed_two_point (variance 1) and the
/// variance-2 diagonal variants gaussian2, rademacher2.
const std::vector<EntryLaw>& entry_law_catalog();

/// Catalog lookup; throws ConfigError for unknown names.
const EntryLaw& entry_law(std::string_view name);

/// Wigner ensemble: sqrt(N) H_ij ~ offdiag for i < j, sqrt(N) H_ii ~ diag.
struct WignerSpec {
  std::size_t n = 0;
  EntryLaw offdiag;
  EntryLaw diag;

  /// Cumulants of the off-diagonal law, k = 2, 3, 4 (s_2 = 1).
  double s(int k) const;
  /// Diagonal cumulant minus off-diagonal cumulant, k = 2, 3, 4. GOE has a_2 = 1.
  double a(int k) const;
};

/// GOE: Gaussian entries, diagonal variance 2.
WignerSpec goe_spec(std::size_t n);

/// Rademacher off-diagonal entries with Gaussian variance-2 diagonal
/// (s_4 = -2, a_2 = 1).
WignerSpec rademacher_spec(std::size_t n);

/// Throws DomainError for n < 2 and ConfigError unless the off-diagonal law
/// has unit variance.
SymmetricMatrix sample_wigner(const WignerSpec& spec, Rng rng);

struct GaussianDivisibleSpec {
  WignerSpec base;
  double t0 = 0.0;
};

/// exp(-t0/2) X' + sqrt(1 - exp(-t0)) W with X' ~ base and W ~ GOE drawn from
/// independent child streams.
SymmetricMatrix sample_gaussian_divisible(const GaussianDivisibleSpec& spec, Rng rng);

struct BetaHermiteSpec {
  std::size_t n = 0;
  double beta = 1.0;
};

/// Tridiagonal model of the Gaussian beta-ensemble with equilibrium support
/// [-2, 2]: diagonal N(0, 2/(beta n)), off-diagonal chi_{beta(n-k)}/sqrt(beta n).
TridiagonalMatrix sample_beta_hermite(const BetaHermiteSpec& spec, Rng rng);

/// Polynomial potential V(x) = sum_k c_k x^k.
class Potential {
 public:
  Potential(std::string name, std::vector<double> coefficients);

  /// V(x) = x^2 / 2; equilibrium measure is the semicircle on [-2, 2].
  static Potential hermite();

  const std::string& name() const noexcept { return name_; }
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }

  double value(double x) const noexcept;
  double derivative(double x) const noexcept;

  /// Even degree >= 2 with positive leading coefficient, so V(x) outgrows
  /// 2 log|x| in both directions.
  bool confining() const noexcept;

 private:
  std::string name_;
  std::vector<double> coefficients_;
};

/// One approximate draw from the beta-ensemble with weight
/// exp(-beta N [sum V(l_i) / 2 - (1/N) sum_{i<j} log(l_j - l_i)]).
///
/// Single-site Metropolis sweeps; the proposal scale for particle i depends
/// only on its neighbours, and moves that would reorder particles are
/// rejected. `sweeps` must be at least the burn-in of 10 n sweeps.
/// Throws ConfigError for a non-confining potential.
std::vector<double> sample_beta_gibbs_mcmc(const Potential& potential, double beta, std::size_t n,
                                           Rng rng, std::size_t sweeps);

}  // namespace rmt
