#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"
#include "rmt/random.hpp"
#include "rmt/spectra.hpp"
#include "rmt/statistics.hpp"

using namespace rmt;

namespace {

// Sample cumulants k2, k3, k4 from raw central moments.
struct SampleCumulants {
  double k2, k3, k4;
  double se2, se3, se4;
};

SampleCumulants sample_cumulants(const EntryLaw& law, std::size_t m, Rng rng) {
  std::vector<double> x(m);
  double mean = 0.0;
  for (auto& v : x) {
    v = law(rng);
    mean += v;
  }
  mean /= static_cast<double>(m);
  double m2 = 0, m3 = 0, m4 = 0, m6 = 0, m8 = 0;
  for (double v : x) {
    const double d = v - mean, d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
    m6 += d2 * d2 * d2;
    m8 += d2 * d2 * d2 * d2;
  }
  const double md = static_cast<double>(m);
  m2 /= md, m3 /= md, m4 /= md, m6 /= md, m8 /= md;
  // Crude standard errors from the variance of the summands.
  const double se2 = std::sqrt(std::max(m4 - m2 * m2, 1e-30) / md);
  const double se3 = std::sqrt(std::max(m6, 1e-30) / md);
  const double se4 = std::sqrt(std::max(m8 - m4 * m4, 1e-30) / md) + 6.0 * m2 * se2;
  return {m2, m3, m4 - 3.0 * m2 * m2, se2, se3, se4};
}

std::vector<double> pooled(const std::vector<Spectrum>& spectra) {
  std::vector<double> out;
  for (const auto& s : spectra) out.insert(out.end(), s.values.begin(), s.values.end());
  return out;
}

}  // namespace

TEST_CASE("catalog cumulants") {
  CHECK(entry_law("rademacher").cumulants.k4 == -2.0);
  CHECK(entry_law("gaussian").cumulants.k3 == 0.0);
  CHECK(entry_law("gaussian").cumulants.k4 == 0.0);
  CHECK(entry_law("uniform").cumulants.k4 == doctest::Approx(-1.2).epsilon(1e-15));
  CHECK(entry_law("skewed_two_point").cumulants.k3 != 0.0);
  CHECK(entry_law("gaussian2").cumulants.variance == 2.0);
  CHECK_THROWS_AS(entry_law("cauchy"), ConfigError);

  CHECK(goe_spec(10).a(2) == 1.0);
  CHECK(goe_spec(10).s(4) == 0.0);
  CHECK(rademacher_spec(10).s(4) == -2.0);
  const WignerSpec unit_diag{10, entry_law("gaussian"), entry_law("gaussian")};
  CHECK(unit_diag.a(2) == 0.0);
}

TEST_CASE("empirical cumulants match the catalog") {
  Rng root(2024);
  std::uint64_t tag = 0;
  for (const EntryLaw& law : entry_law_catalog()) {
    CAPTURE(law.name);
    const auto c = sample_cumulants(law, 1'000'000, root.split(tag++));
    CHECK(std::abs(c.k2 - law.cumulants.variance) <= 5.0 * c.se2);
    CHECK(std::abs(c.k3 - law.cumulants.k3) <= 5.0 * c.se3);
    CHECK(std::abs(c.k4 - law.cumulants.k4) <= 5.0 * c.se4);
  }
}

TEST_CASE("sample_wigner structure") {
  CHECK_THROWS_AS(sample_wigner(goe_spec(1), Rng(1)), DomainError);

  const auto h = sample_wigner(goe_spec(30), Rng(5));
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 30; ++j) CHECK(h(i, j) == h(j, i));

  const auto r = sample_wigner(rademacher_spec(16), Rng(6));
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = i + 1; j < 16; ++j) CHECK(std::abs(r(i, j)) == 0.25);

  const auto a = sample_wigner(goe_spec(12), Rng(7));
  const auto b = sample_wigner(goe_spec(12), Rng(7));
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) CHECK(a(i, j) == b(i, j));
}

TEST_CASE("GOE n = 2 off-diagonal variance is 1/n") {
  const std::size_t m = 100'000;
  std::vector<double> off(m), diag(m);
  const Rng root(99);
  for (std::size_t k = 0; k < m; ++k) {
    const auto h = sample_wigner(goe_spec(2), root.substream(k));
    off[k] = h(0, 1);
    diag[k] = h(0, 0);
  }
  const auto o = estimate_mean_var(off);
  const auto d = estimate_mean_var(diag);
  CHECK(std::abs(o.variance - 0.5) <= 4.0 * o.variance_se);
  CHECK(std::abs(d.variance - 1.0) <= 4.0 * d.variance_se);
}

TEST_CASE("Gaussian divisible ensemble") {
  CHECK_THROWS_AS(sample_gaussian_divisible({goe_spec(4), 0.0}, Rng(1)), DomainError);
  CHECK_THROWS_AS(sample_gaussian_divisible({goe_spec(4), 1.0}, Rng(1)), DomainError);

  // Small t0: the base draw (same child stream) is recovered to within sqrt(t0).
  const std::size_t n = 40;
  const double t0 = 1e-8;
  const Rng rng(31);
  const auto x = sample_gaussian_divisible({rademacher_spec(n), t0}, rng);
  const auto base = sample_wigner(rademacher_spec(n), rng.split(1));
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) ss += (x(i, j) - base(i, j)) * (x(i, j) - base(i, j));
  CHECK(std::sqrt(ss / static_cast<double>(n * n)) <= std::sqrt(t0));

  // Entry variance stays 1/n.
  std::vector<double> off;
  const Rng root(32);
  for (std::size_t k = 0; k < 20'000; ++k) {
    off.push_back(sample_gaussian_divisible({rademacher_spec(4), 0.3}, root.substream(k))(0, 1));
  }
  const auto mv = estimate_mean_var(off);
  CHECK(std::abs(mv.variance - 0.25) <= 4.0 * mv.variance_se);
}

TEST_CASE("Gaussian divisible with GOE base stays GOE") {
  const std::size_t n = 200, m = 500;
  std::vector<Spectrum> a, b;
  const Rng root(41);
  for (std::size_t k = 0; k < m; ++k) {
    a.push_back(eigen_symmetric(sample_gaussian_divisible({goe_spec(n), 0.4}, root.substream(k).split(1))));
    b.push_back(eigen_symmetric(sample_wigner(goe_spec(n), root.substream(k).split(2))));
  }
  CHECK(ks_two_sample(pooled(a), pooled(b)).distance <= 0.05);
}

TEST_CASE("beta-Hermite tridiagonal model") {
  CHECK_THROWS_AS(sample_beta_hermite({10, 0.5}, Rng(1)), DomainError);
  CHECK_THROWS_AS(sample_beta_hermite({1, 1.0}, Rng(1)), DomainError);

  const auto t = sample_beta_hermite({50, 2.0}, Rng(3));
  for (double e : t.offdiag) CHECK(e > 0.0);

  // beta = 1 matches the dense GOE sampler.
  const std::size_t n = 200, m = 500;
  std::vector<Spectrum> tri, dense;
  const Rng root(77);
  double below = 0.0;
  std::vector<double> fractions;
  for (std::size_t k = 0; k < m; ++k) {
    tri.push_back(eigen_tridiagonal(sample_beta_hermite({n, 1.0}, root.substream(k).split(1))));
    dense.push_back(eigen_symmetric(sample_wigner(goe_spec(n), root.substream(k).split(2))));
    const auto c = static_cast<double>(std::count_if(tri.back().values.begin(), tri.back().values.end(),
                                                     [](double v) { return v <= 0.0; }));
    fractions.push_back(c / static_cast<double>(n));
    below += c;
  }
  CHECK(ks_two_sample(pooled(tri), pooled(dense)).distance <= 0.05);

  const auto mv = estimate_mean_var(fractions);
  CHECK(std::abs(mv.mean - 0.5) <= 3.0 * mv.mean_se);
}

TEST_CASE("Potential") {
  const Potential v = Potential::hermite();
  CHECK(v.value(2.0) == doctest::Approx(2.0));
  CHECK(v.derivative(3.0) == doctest::Approx(3.0));
  CHECK(v.confining());
  CHECK_FALSE(Potential("cubic", {0, 0, 0, 1}).confining());
  CHECK_FALSE(Potential("flat", {1}).confining());
  CHECK_FALSE(Potential("inverted", {0, 0, -1}).confining());
}

TEST_CASE("Metropolis sampler for beta-ensembles") {
  CHECK_THROWS_AS(sample_beta_gibbs_mcmc(Potential("cubic", {0, 0, 0, 1}), 1.0, 10, Rng(1), 200), ConfigError);

  const std::size_t n = 50;
  const Rng root(555);

  std::vector<double> fractions;
  for (std::size_t c = 0; c < 200; ++c) {
    const auto x = sample_beta_gibbs_mcmc(Potential::hermite(), 2.0, n, root.substream(c), 10 * n);
    CHECK(std::adjacent_find(x.begin(), x.end(), std::greater_equal<double>()) == x.end());
    fractions.push_back(static_cast<double>(std::count_if(x.begin(), x.end(), [](double v) { return v <= 0.0; })) /
                        static_cast<double>(n));
  }
  const auto mv = estimate_mean_var(fractions);
  CHECK(std::abs(mv.mean - 0.5) <= 3.0 * mv.mean_se);

  std::vector<double> mcmc, tri;
  for (std::size_t c = 0; c < 200; ++c) {
    const auto x = sample_beta_gibbs_mcmc(Potential::hermite(), 1.0, n, root.split(1).substream(c), 10 * n);
    mcmc.insert(mcmc.end(), x.begin(), x.end());
    const auto s = eigen_tridiagonal(sample_beta_hermite({n, 1.0}, root.split(2).substream(c)));
    tri.insert(tri.end(), s.values.begin(), s.values.end());
  }
  CHECK(ks_two_sample(mcmc, tri).distance <= 0.08);
}
