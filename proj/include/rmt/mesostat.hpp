#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rmt/spectra.hpp"

namespace rmt {

/// L1 norms of f, f' and f'' over the spectral window [-2, 2].
struct Norms {
  double f = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Closed interval.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// A C^2 (mostly C^3) observable with its derivative and the metadata the
/// quadrature routines need: points where a derivative jumps or a feature is
/// sharp, and the interval outside which f' vanishes.
class TestFunction {
 public:
  using Fn = std::function<double(double)>;

  TestFunction() = default;
  TestFunction(std::string name, Fn value, Fn derivative, Interval support,
               std::vector<double> breakpoints = {});

  double operator()(double x) const { return value_(x); }
  double derivative(double x) const { return derivative_(x); }

  const std::string& name() const noexcept { return name_; }
  /// f' vanishes outside this interval.
  Interval support() const noexcept { return support_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }

  /// Largest kappa with f' supported in [-2 + kappa, 2 - kappa]; negative when
  /// the support pokes out of the spectrum.
  double kappa() const noexcept;

  /// Numerical norms on [-2, 2]; ||f''||_1 is the total variation of f'.
  const Norms& norms() const;

  /// ||f''||_1 <= N^(1-c) and ||f'||_1 + ||f||_1 <= bound.
  bool satisfies_norm_assumptions(std::size_t n, double c, double bound) const;

  /// x -> f(x - c).
  TestFunction shifted(double c) const;
  /// x -> f(x / scale).
  TestFunction dilated(double scale) const;
  /// x -> f(x) for x <= u, 0 otherwise (breakpoint at u).
  TestFunction truncated(double u) const;
  /// x -> f(x) (1 - S((x - u) / width)): equals f for x <= u and vanishes for
  /// x >= u + width.
  TestFunction smoothly_truncated(double u, double width) const;

 private:
  std::string name_;
  Fn value_;
  Fn derivative_;
  Interval support_{};
  std::vector<double> breakpoints_;
  mutable bool norms_ready_ = false;
  mutable Norms norms_{};
};

/// Septic smoothstep 35t^4 - 84t^5 + 70t^6 - 20t^7, clamped to [0, 1]; C^3.
double smoothstep(double t) noexcept;
double smoothstep_derivative(double t) noexcept;

/// Smooth indicator: 1 for |y| <= 1, 0 for |y| >= 2.
double cutoff(double y) noexcept;
double cutoff_derivative(double y) noexcept;

/// exp(-((x - center) / width)^2).
TestFunction gaussian_bump(double center = 0.0, double width = 0.5);
/// 1 on [lo, hi], 0 outside [lo - ramp, hi + ramp], smoothstep in between.
TestFunction smoothstep_indicator(double lo, double hi, double ramp);
/// Cubic B-spline bump of half-width 2 * width around center, minus its value
/// at `anchor`, so the result vanishes at the anchor.
TestFunction cubic_spline(double center, double width, double anchor);
/// (atan((x - c + L) / s) - atan((x - c - L) / s)) / pi: a box of half-width L
/// smoothed by a Cauchy kernel of width s.
TestFunction arctan_box(double half_width, double smoothing, double center = 0.0);
TestFunction identity_function();
TestFunction constant_function(double value);
TestFunction monomial(int degree);

/// Catalog lookup by name with named parameters; throws ConfigError for
/// unknown names or parameters.
TestFunction make_test_function(std::string_view name, const std::map<std::string, double>& params);
std::vector<std::string> test_function_names();

/// Phi(y) = K int_{-2}^{y} cutoff((x - g) / w) (1/rho) eta / ((x - g)^2 + eta^2) dx
/// with g = gamma_i, rho = rho_sc(g), eta = t1 rho and w = t1 N^eps1. K is
/// chosen so that the total mass is 1/rho.
struct HomogenizationObservable {
  TestFunction phi;
  double center = 0.0;
  double t1 = 0.0;
  double eps1 = 0.0;
  std::size_t n = 0;
  double density = 0.0;
  double eta = 0.0;
  double window = 0.0;
  double normalization = 1.0;

  double operator()(double x) const { return phi(x); }
};

/// Throws DomainError unless 0 < eps1 <= 0.1, t1 > 0, t1 N^eps1 < 1 and the
/// cutoff window lies inside (-2, 2).
HomogenizationObservable build_homogenization_observable(double gamma_i, double t1, double eps1,
                                                         std::size_t n);

/// Kernel of Phi before the cutoff and normalization:
/// (1/rho) (t1 rho) / ((x - g)^2 + (t1 rho)^2).
double poisson_kernel(double gamma_i, double x, double t1);

/// #{i : lambda_i <= e}.
std::size_t counting_function(const Spectrum& s, double e);

/// N (lambda_i - gamma_i) / sqrt(log N / (1 - gamma_i^2 / 4)), i 1-based.
/// Throws DomainError unless kappa N <= i <= (1 - kappa) N.
double eigenvalue_z_score(const Spectrum& s, std::size_t i, double kappa = 0.05);

/// (N(E) - N F(E)) pi / sqrt(log N). Throws DomainError unless |E| < 2 - kappa.
double counting_z_score(const Spectrum& s, double e, double kappa = 0.05);

/// sum_j f(lambda_j), compensated.
double linear_statistic(const Spectrum& s, const TestFunction& f);

/// sum_j f(N^alpha (lambda_j - E)). Throws DomainError unless 0 < alpha < 1
/// and |E| < 2.
double mesoscopic_statistic(const Spectrum& s, const TestFunction& f, double e, double alpha);

/// sum_j Phi(lambda_j) - sum_j Phi(gamma_j).
double zeta_statistic(const Spectrum& s, const HomogenizationObservable& phi);
/// Same with precomputed sum_j Phi(gamma_j).
double zeta_statistic(const std::vector<double>& values, const HomogenizationObservable& phi,
                      double classical_sum);
/// sum_j Phi(gamma_j) over the classical locations for phi.n.
double classical_phi_sum(const HomogenizationObservable& phi);

/// sum_i f(lambda_i) 1{lambda_i <= u}.
double partial_linear_statistic(const Spectrum& s, const TestFunction& f, double u);

/// sum_{i <= k} f(lambda_i). Throws DomainError unless kappa N <= k <= (1 - kappa) N.
double ranked_partial_statistic(const Spectrum& s, const TestFunction& f, std::size_t k,
                                double kappa = 0.05);

}  // namespace rmt
