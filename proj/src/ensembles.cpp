#include "rmt/ensembles.hpp"

#include <algorithm>
#include <cmath>

#include "rmt/errors.hpp"
#include "rmt/semicircle.hpp"

namespace rmt {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt2 = 1.4142135623730951;

// Two-point law taking sqrt((1-p)/p) with probability p and -sqrt(p/(1-p))
// otherwise; p = 1/4 gives kappa_3 = 2/sqrt(3), kappa_4 = -2/3.
constexpr double kTwoPointP = 0.25;

std::vector<EntryLaw> build_catalog() {
  const double p = kTwoPointP;
  const double up = std::sqrt((1.0 - p) / p);
  const double down = -std::sqrt(p / (1.0 - p));
  const double pq = p * (1.0 - p);
  return {
      {"gaussian", [](Rng& r) { return r.normal(); }, {1.0, 0.0, 0.0}},
      {"rademacher", [](Rng& r) { return (r.next_u32() & 1U) ? 1.0 : -1.0; }, {1.0, 0.0, -2.0}},
      {"uniform", [](Rng& r) { return kSqrt3 * (2.0 * r.uniform() - 1.0); }, {1.0, 0.0, -1.2}},
      {"skewed_two_point",
       [=](Rng& r) { return r.uniform() < p ? up : down; },
       {1.0, (1.0 - 2.0 * p) / std::sqrt(pq), (1.0 - 6.0 * pq) / pq}},
      {"gaussian2", [](Rng& r) { return kSqrt2 * r.normal(); }, {2.0, 0.0, 0.0}},
      {"rademacher2", [](Rng& r) { return (r.next_u32() & 1U) ? kSqrt2 : -kSqrt2; }, {2.0, 0.0, -8.0}},
  };
}

void check_dimension(std::size_t n) {
  if (n < 2) throw DomainError("ensemble dimension must be at least 2");
}

}  // namespace

const std::vector<EntryLaw>& entry_law_catalog() {
  static const std::vector<EntryLaw> catalog = build_catalog();
  return catalog;
}

const EntryLaw& entry_law(std::string_view name) {
  for (const EntryLaw& law : entry_law_catalog()) {
    if (law.name == name) return law;
  }
  throw ConfigError("unknown entry law '" + std::string(name) + "'");
}

double WignerSpec::s(int k) const {
  switch (k) {
    case 2: return offdiag.cumulants.variance;
    case 3: return offdiag.cumulants.k3;
    case 4: return offdiag.cumulants.k4;
    default: throw DomainError("WignerSpec::s: k must be 2, 3 or 4");
  }
}

double WignerSpec::a(int k) const {
  switch (k) {
    case 2: return diag.cumulants.variance - offdiag.cumulants.variance;
    case 3: return diag.cumulants.k3 - offdiag.cumulants.k3;
    case 4: return diag.cumulants.k4 - offdiag.cumulants.k4;
    default: throw DomainError("WignerSpec::a: k must be 2, 3 or 4");
  }
}

WignerSpec goe_spec(std::size_t n) { return {n, entry_law("gaussian"), entry_law("gaussian2")}; }

WignerSpec rademacher_spec(std::size_t n) { return {n, entry_law("rademacher"), entry_law("gaussian2")}; }

SymmetricMatrix sample_wigner(const WignerSpec& spec, Rng rng) {
  check_dimension(spec.n);
  if (spec.offdiag.cumulants.variance != 1.0) {
    throw ConfigError("off-diagonal entry law must have unit variance");
  }
  if (!spec.offdiag.sampler || !spec.diag.sampler) throw ConfigError("entry law without a sampler");
  const std::size_t n = spec.n;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  SymmetricMatrix h(n);
  for (std::size_t i = 0; i < n; ++i) {
    h.set(i, i, scale * spec.diag(rng));
    for (std::size_t j = i + 1; j < n; ++j) h.set(i, j, scale * spec.offdiag(rng));
  }
  return h;
}

SymmetricMatrix sample_gaussian_divisible(const GaussianDivisibleSpec& spec, Rng rng) {
  if (!(spec.t0 > 0.0 && spec.t0 < 1.0)) throw DomainError("Gaussian component size must lie in (0, 1)");
  const SymmetricMatrix base = sample_wigner(spec.base, rng.split(1));
  const SymmetricMatrix goe = sample_wigner(goe_spec(spec.base.n), rng.split(2));
  return base.scaled(std::exp(-0.5 * spec.t0)).axpy(std::sqrt(-std::expm1(-spec.t0)), goe);
}

TridiagonalMatrix sample_beta_hermite(const BetaHermiteSpec& spec, Rng rng) {
  check_dimension(spec.n);
  if (!(spec.beta >= 1.0)) throw DomainError("beta must be at least 1");
  const std::size_t n = spec.n;
  const double bn = spec.beta * static_cast<double>(n);
  const double diag_scale = std::sqrt(2.0 / bn);
  const double off_scale = 1.0 / std::sqrt(bn);
  TridiagonalMatrix t;
  t.diag.resize(n);
  t.offdiag.resize(n - 1);
  for (std::size_t k = 0; k < n; ++k) t.diag[k] = diag_scale * rng.normal();
  for (std::size_t k = 1; k < n; ++k) {
    t.offdiag[k - 1] = off_scale * rng.chi(spec.beta * static_cast<double>(n - k));
  }
  return t;
}

Potential::Potential(std::string name, std::vector<double> coefficients)
    : name_(std::move(name)), coefficients_(std::move(coefficients)) {
  while (!coefficients_.empty() && coefficients_.back() == 0.0) coefficients_.pop_back();
}

Potential Potential::hermite() { return Potential("hermite", {0.0, 0.0, 0.5}); }

double Potential::value(double x) const noexcept {
  double v = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) v = v * x + *it;
  return v;
}

double Potential::derivative(double x) const noexcept {
  double v = 0.0;
  for (std::size_t k = coefficients_.size(); k-- > 1;) v = v * x + static_cast<double>(k) * coefficients_[k];
  return v;
}

bool Potential::confining() const noexcept {
  const std::size_t size = coefficients_.size();
  return size >= 3 && (size - 1) % 2 == 0 && coefficients_.back() > 0.0;
}

std::vector<double> sample_beta_gibbs_mcmc(const Potential& potential, double beta, std::size_t n, Rng rng,
                                           std::size_t sweeps) {
  if (!potential.confining()) throw ConfigError("potential '" + potential.name() + "' is not confining");
  if (!(beta >= 1.0)) throw DomainError("beta must be at least 1");
  if (n < 1) throw DomainError("need at least one particle");
  const std::size_t burn_in = 10 * n;
  if (sweeps < burn_in) throw DomainError("sweeps must cover the burn-in of 10 n sweeps");

  const double nd = static_cast<double>(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = semicircle::quantile((static_cast<double>(i) + 0.5) / nd);

  const double confinement = 0.5 * beta * nd;
  auto site_energy = [&](std::size_t i, double xi) {
    // -log density restricted to terms involving particle i.
    double e = confinement * potential.value(xi);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) e -= beta * std::log(std::abs(xi - x[j]));
    }
    return e;
  };

  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      // Scale from the neighbours of i only; edge particles use the next gap inward.
      double spacing;
      if (n < 3) {
        spacing = 1.0 / nd;
      } else if (i == 0) {
        spacing = x[2] - x[1];
      } else if (i + 1 == n) {
        spacing = x[n - 2] - x[n - 3];
      } else {
        spacing = 0.5 * (x[i + 1] - x[i - 1]);
      }
      const double proposal = x[i] + spacing * rng.normal();
      const bool ordered = (i == 0 || proposal > x[i - 1]) && (i + 1 == n || proposal < x[i + 1]);
      const double u = rng.uniform();
      if (!ordered) continue;
      const double delta = site_energy(i, proposal) - site_energy(i, x[i]);
      if (delta <= 0.0 || u < std::exp(-delta)) x[i] = proposal;
    }
  }
  return x;
}

}  // namespace rmt
