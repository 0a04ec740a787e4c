#include <doctest.h>

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "rmt/errors.hpp"
#include "rmt/random.hpp"
#include "rmt/statistics.hpp"

using namespace rmt;

namespace {

// Theta-function form of the Kolmogorov survival, which converges fast for
// small arguments.
double kolmogorov_theta(double x) {
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double j = 2.0 * k - 1.0;
    s += std::exp(-j * j * std::numbers::pi * std::numbers::pi / (8.0 * x * x));
  }
  return 1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s;
}

std::vector<double> normals(std::size_t m, Rng rng) {
  std::vector<double> x(m);
  for (auto& v : x) v = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("Kolmogorov survival") {
  for (double x : {0.3, 0.5, 0.8, 1.0, 1.36, 1.63, 2.0, 3.0}) {
    CAPTURE(x);
    CHECK(kolmogorov_survival(x) == doctest::Approx(kolmogorov_theta(x)).epsilon(1e-10));
  }
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(0.1) == 1.0);
  CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.05).epsilon(0.02));
}

TEST_CASE("one-sample KS against the normal") {
  CHECK_THROWS_AS(ks_normal(std::vector<double>(49, 0.0)), DomainError);

  // Samples at the mid-quantiles are as close to the CDF as possible.
  const boost::math::normal_distribution<double> gauss;
  const std::size_t m = 400;
  std::vector<double> q(m);
  for (std::size_t k = 0; k < m; ++k) q[k] = quantile(gauss, (k + 0.5) / static_cast<double>(m));
  CHECK(ks_normal(q).distance <= 0.5 / m + 1e-6);
  CHECK(ks_normal(q).p_value == doctest::Approx(1.0));

  CHECK(ks_normal(std::vector<double>(100, 0.0)).distance == doctest::Approx(0.5));

  // Under the null the 5% critical value is exceeded about 5% of the time.
  const std::size_t reps = 100, size = 10'000;
  std::size_t below = 0;
  const Rng root(13);
  for (std::size_t r = 0; r < reps; ++r) {
    if (ks_normal(normals(size, root.substream(r))).distance < 1.36 / std::sqrt(static_cast<double>(size))) ++below;
  }
  CHECK(below >= 90);

  std::vector<double> shifted = normals(5000, Rng(14));
  for (double& v : shifted) v += 0.2;
  CHECK(ks_normal(shifted).p_value < 1e-6);
}

TEST_CASE("two-sample KS") {
  CHECK_THROWS_AS(ks_two_sample({}, {1.0}), DomainError);
  CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}).distance == 0.0);
  CHECK(ks_two_sample({1, 2}, {3, 4}).distance == 1.0);
  CHECK(ks_two_sample({1, 2, 3, 4}, {2.5}).distance == doctest::Approx(0.5));
  // Ties across samples are stepped together.
  CHECK(ks_two_sample({0, 0, 1, 1}, {0, 1}).distance == 0.0);
  const auto a = normals(5000, Rng(1)), b = normals(7000, Rng(2));
  CHECK(ks_two_sample(a, b).p_value > 0.001);
}

TEST_CASE("mean and variance estimates") {
  CHECK_THROWS_AS(estimate_mean_var({1.0}), DomainError);
  const auto two = estimate_mean_var({0.0, 2.0});
  CHECK(two.mean == 1.0);
  CHECK(two.variance == 2.0);
  CHECK(two.count == 2);

  const auto flat = estimate_mean_var(std::vector<double>(10, 3.5));
  CHECK(flat.variance == 0.0);
  CHECK(flat.mean_se == 0.0);
  CHECK(flat.variance_se == 0.0);

  const std::size_t m = 100'000;
  std::vector<double> u(m);
  Rng rng(21);
  for (double& v : u) v = rng.uniform();
  const auto mv = estimate_mean_var(u);
  CHECK(std::abs(mv.mean - 0.5) <= 3.0 * mv.mean_se);
  CHECK(std::abs(mv.variance - 1.0 / 12.0) <= 3.0 * mv.variance_se);
  // Delta-method standard error of the sample variance: sqrt((mu4 - sigma^4) / m).
  const double se = std::sqrt((1.0 / 80.0 - 1.0 / 144.0) / static_cast<double>(m));
  CHECK(mv.variance_se == doctest::Approx(se).epsilon(0.05));
  CHECK(mv.mean_se == doctest::Approx(std::sqrt(1.0 / 12.0 / m)).epsilon(0.02));
}

TEST_CASE("jackknife") {
  CHECK(jackknife_se({1.0}) == 0.0);
  // Leave-one-out means of x reproduce sd(x) / sqrt(n).
  const std::vector<double> x{1, 4, 2, 8, 5, 7};
  const double n = static_cast<double>(x.size());
  double total = 0.0;
  for (double v : x) total += v;
  std::vector<double> loo;
  for (double v : x) loo.push_back((total - v) / (n - 1.0));
  CHECK(jackknife_se(loo) == doctest::Approx(estimate_mean_var(x).mean_se).epsilon(1e-12));
}

TEST_CASE("correlation") {
  CHECK_THROWS_AS(correlation({1, 2}, {1, 2}), DomainError);
  CHECK_THROWS_AS(correlation({1, 2, 3}, {1, 2}), DomainError);
  const auto line = correlation({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(line.value == doctest::Approx(1.0));
  CHECK(line.se == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(correlation({1, 2, 3, 4}, {4, 3, 2, 1}).value == doctest::Approx(-1.0));
  CHECK(correlation({1, 2, 3}, {5, 5, 5}).value == 0.0);

  const std::size_t m = 20'000;
  const double rho = 0.6;
  Rng rng(31);
  std::vector<double> a(m), b(m);
  for (std::size_t k = 0; k < m; ++k) {
    a[k] = rng.normal();
    b[k] = rho * a[k] + std::sqrt(1.0 - rho * rho) * rng.normal();
  }
  const auto c = correlation(a, b);
  CHECK(std::abs(c.value - rho) <= 4.0 * c.se);
  // Normal-theory standard error (1 - rho^2) / sqrt(m).
  CHECK(c.se == doctest::Approx((1.0 - rho * rho) / std::sqrt(static_cast<double>(m))).epsilon(0.1));
}

TEST_CASE("number formatting and CSV") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.0 + 1e-15, 2.2250738585072014e-308}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");

  std::ostringstream out;
  write_csv(out, {"a", "b"}, {{1.0, 0.1}, {2.0, -3.0}});
  CHECK(out.str() == "a,b\n1,0.10000000000000001\n2,-3\n");
  std::ostringstream bad;
  CHECK_THROWS_AS(write_csv(bad, {"a", "b"}, {{1.0}}), DomainError);
}
