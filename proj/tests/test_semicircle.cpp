#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "oracles.hpp"
#include "rmt/errors.hpp"
#include "rmt/semicircle.hpp"

using namespace rmt;
using std::numbers::pi;

namespace {
double rho_oracle(double x) { return std::abs(x) < 2.0 ? std::sqrt(4.0 - x * x) / (2.0 * pi) : 0.0; }
}  // namespace

TEST_CASE("semicircle density values") {
  CHECK(semicircle::density(0.0) == doctest::Approx(1.0 / pi).epsilon(1e-15));
  CHECK(semicircle::density(2.0) == 0.0);
  CHECK(semicircle::density(-2.5) == 0.0);
  CHECK(semicircle::density(1.0) == doctest::Approx(std::sqrt(3.0) / (2.0 * pi)).epsilon(1e-15));
  CHECK(semicircle::density(1.0) == doctest::Approx(0.27566).epsilon(1e-4));
}

TEST_CASE("density integrates to one") {
  CHECK(std::abs(oracle::tanh_sinh(semicircle::density, -2.0, 2.0) - 1.0) <= 1e-10);
}

TEST_CASE("cdf against quadrature") {
  CHECK(semicircle::cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(semicircle::cdf(-2.0) == 0.0);
  CHECK(semicircle::cdf(2.0) == 1.0);
  CHECK(semicircle::cdf(-7.0) == 0.0);
  CHECK(semicircle::cdf(9.0) == 1.0);
  for (double x : {-1.9, -1.0, -0.3, 0.4, 1.0, 1.7, 1.999}) {
    CHECK(std::abs(semicircle::cdf(x) - oracle::tanh_sinh(rho_oracle, -2.0, x)) <= 1e-12);
  }
}

TEST_CASE("cdf is monotone") {
  double prev = -1.0;
  for (int k = -2100; k <= 2100; ++k) {
    const double c = semicircle::cdf(k / 1000.0);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("quantile") {
  CHECK(semicircle::quantile(0.5) == 0.0);
  const double q = semicircle::quantile(0.25);
  const double ref = oracle::bisect([](double x) { return oracle::tanh_sinh(rho_oracle, -2.0, x) - 0.25; },
                                    -2.0, 2.0);
  CHECK(std::abs(q - ref) <= 1e-12);
  CHECK(std::abs(semicircle::cdf(q) - 0.25) <= 1e-12);
  for (double u : {1e-9, 1e-4, 0.01, 0.1, 0.37, 0.49}) {
    CHECK(std::abs(semicircle::quantile(u) + semicircle::quantile(1.0 - u)) <= 1e-12);
    CHECK(std::abs(semicircle::cdf(semicircle::quantile(u)) - u) <= 1e-12);
  }
  CHECK_THROWS_AS(semicircle::quantile(0.0), DomainError);
  CHECK_THROWS_AS(semicircle::quantile(1.0), DomainError);
  CHECK_THROWS_AS(semicircle::quantile(-0.2), DomainError);
  CHECK_THROWS_AS(semicircle::quantile(std::nan("")), DomainError);
}

TEST_CASE("classical location table") {
  for (std::size_t n : {1u, 2u, 7u, 250u, 1000u}) {
    const semicircle::ClassicalLocationTable table(n);
    REQUIRE(table.size() == n);
    CHECK(table(n) == 2.0);
    for (std::size_t i = 1; i < n; ++i) {
      CHECK(std::abs(semicircle::cdf(table(i)) - static_cast<double>(i) / n) <= 1e-12);
      CHECK(table(i) < table(i + 1));
      CHECK(std::abs(table(i) + table(n - i)) <= 1e-12);
      CHECK(table(i) == semicircle::classical_location(i, n));
    }
  }
  const semicircle::ClassicalLocationTable again(1000);
  CHECK(again.values() == semicircle::ClassicalLocationTable(1000).values());
  CHECK_THROWS_AS(semicircle::classical_location(0, 10), DomainError);
  CHECK_THROWS_AS(semicircle::classical_location(11, 10), DomainError);
}

TEST_CASE("stieltjes transform") {
  using cd = std::complex<double>;
  const cd m = semicircle::stieltjes(cd(0.0, 1.0));
  CHECK(std::abs(m - cd(0.0, (std::sqrt(5.0) - 1.0) / 2.0)) <= 1e-15);

  for (int a = -5; a <= 4; ++a) {
    for (int b = -5; b <= 4; ++b) {
      if (b == 0) continue;
      const cd z(0.7 * a, 0.45 * b + (b > 0 ? 0.01 : -0.01));
      const cd mz = semicircle::stieltjes(z);
      CHECK(std::abs(mz * mz + z * mz + 1.0) <= 1e-12);
      CHECK(mz.imag() * z.imag() > 0.0);
      CHECK(std::abs(semicircle::stieltjes(std::conj(z)) - std::conj(mz)) <= 1e-15);
    }
  }

  const cd big(6e5, 8e5);
  const cd mb = semicircle::stieltjes(big);
  CHECK(std::abs(mb + 1.0 / big) <= 2.0 / std::norm(big) * 1.01);

  for (double x : {-1.5, 0.0, 0.3, 1.9}) {
    const cd mx = semicircle::stieltjes(cd(x, 1e-9));
    CHECK(std::abs(mx.imag() - pi * semicircle::density(x)) <= 1e-8);
  }
  // Brute-force definition at a point off the axis.
  const cd z(0.4, 0.6);
  const double re = oracle::tanh_sinh([&](double x) { return (rho_oracle(x) / (x - z)).real(); }, -2.0, 2.0);
  const double im = oracle::tanh_sinh([&](double x) { return (rho_oracle(x) / (x - z)).imag(); }, -2.0, 2.0);
  CHECK(std::abs(semicircle::stieltjes(z) - cd(re, im)) <= 1e-12);
  CHECK_THROWS_AS(semicircle::stieltjes(cd(0.5, 0.0)), DomainError);
}

TEST_CASE("stieltjes derivative") {
  using cd = std::complex<double>;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  const cd mi(0.0, g);
  CHECK(std::abs(semicircle::stieltjes_derivative(cd(0.0, 1.0)) - mi * mi / (1.0 - mi * mi)) <= 1e-15);

  const cd z(0.3, 0.7);
  const double h = 1e-5;
  const cd fd = (semicircle::stieltjes(z + h) - semicircle::stieltjes(z - h)) / (2.0 * h);
  CHECK(std::abs(semicircle::stieltjes_derivative(z) - fd) <= 1e-6);
  CHECK(std::abs(semicircle::stieltjes_derivative(std::conj(z)) - std::conj(semicircle::stieltjes_derivative(z))) <=
        1e-15);
  CHECK_THROWS_AS(semicircle::stieltjes_derivative(cd(2.0, 1e-300)), NumericError);
}
