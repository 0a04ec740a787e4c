#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "rmt/errors.hpp"
#include "rmt/random.hpp"
#include "rmt/semicircle.hpp"
#include "rmt/spectra.hpp"

using namespace rmt;

namespace {

SymmetricMatrix random_symmetric(std::size_t n, Rng& rng) {
  SymmetricMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m.set(i, j, rng.normal() / std::sqrt(static_cast<double>(n)));
  return m;
}

TridiagonalMatrix random_tridiagonal(std::size_t n, Rng& rng) {
  TridiagonalMatrix t;
  for (std::size_t i = 0; i < n; ++i) t.diag.push_back(rng.normal());
  for (std::size_t i = 0; i + 1 < n; ++i) t.offdiag.push_back(rng.normal());
  return t;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("householder on already tridiagonal input") {
  SymmetricMatrix d(4);
  for (std::size_t i = 0; i < 4; ++i) d.set(i, i, 1.0 + static_cast<double>(i));
  const auto t = householder_tridiagonalize(d);
  CHECK(t.diag == std::vector<double>{1, 2, 3, 4});
  for (double e : t.offdiag) CHECK(e == 0.0);

  SymmetricMatrix s(2);
  s.set(0, 1, 1.0);
  const auto t2 = householder_tridiagonalize(s);
  CHECK(t2.diag == std::vector<double>{0, 0});
  CHECK(std::abs(t2.offdiag[0]) == 1.0);
}

TEST_CASE("householder preserves invariants and spectrum") {
  Rng rng(11);
  for (std::size_t n : {3u, 20u, 57u}) {
    const auto m = random_symmetric(n, rng);
    const auto t = householder_tridiagonalize(m);
    CHECK(std::abs(t.trace() - m.trace()) <= 1e-10 * n);
    CHECK(std::abs(t.frobenius_norm() - m.frobenius_norm()) <= 1e-9 * n);
    if (n == 20) {
      const auto ref = oracle::dense_bisection_eigenvalues(m);
      CHECK(max_abs_diff(oracle::bisection_eigenvalues(t), ref) <= 1e-10);
    }
  }
}

TEST_CASE("eigen_tridiagonal small cases") {
  TridiagonalMatrix t{{1, 2, 3}, {0, 0}};
  CHECK(eigen_tridiagonal(t).values == std::vector<double>{1, 2, 3});
  TridiagonalMatrix s{{0, 0}, {1}};
  const auto v = eigen_tridiagonal(s).values;
  CHECK(v[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eigen_tridiagonal(TridiagonalMatrix{{5.0}, {}}).values == std::vector<double>{5.0});
  CHECK(eigen_tridiagonal(TridiagonalMatrix{}).values.empty());
  CHECK_THROWS_AS(eigen_tridiagonal(TridiagonalMatrix{{1, 2}, {}}), DomainError);
  CHECK_THROWS_AS(eigen_tridiagonal(TridiagonalMatrix{{1, std::nan("")}, {1}}), DomainError);
}

TEST_CASE("eigen_tridiagonal against Sturm oracles") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const auto t = random_tridiagonal(60, rng);
    const auto s = eigen_tridiagonal(t);
    CHECK(std::is_sorted(s.values.begin(), s.values.end()));
    CHECK(max_abs_diff(s.values, oracle::bisection_eigenvalues(t)) <= 1e-9);
    CHECK(max_abs_diff(s.values, sturm_bisection_eigenvalues(t)) <= 1e-9);
    const auto [lo, hi] = gershgorin_bounds(t);
    CHECK(s.values.front() >= lo);
    CHECK(s.values.back() <= hi);
  }
}

TEST_CASE("graded and clustered tridiagonal matrices") {
  // Wilkinson W21+: nearly degenerate pairs.
  TridiagonalMatrix w;
  for (int k = -10; k <= 10; ++k) w.diag.push_back(std::abs(k));
  w.offdiag.assign(20, 1.0);
  CHECK(max_abs_diff(eigen_tridiagonal(w).values, oracle::bisection_eigenvalues(w)) <= 1e-12 * 11);
  // Strongly graded diagonal.
  TridiagonalMatrix g;
  for (int k = 0; k < 30; ++k) g.diag.push_back(std::pow(10.0, -k / 3.0));
  for (int k = 0; k < 29; ++k) g.offdiag.push_back(std::pow(10.0, -k / 3.0) * 0.1);
  CHECK(max_abs_diff(eigen_tridiagonal(g).values, oracle::bisection_eigenvalues(g)) <= 1e-13);
}

TEST_CASE("eigen_symmetric") {
  const auto id = eigen_symmetric(SymmetricMatrix::identity(9));
  for (double v : id.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

  Rng rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const auto m = random_symmetric(40, rng);
    const auto s = eigen_symmetric(m);
    double sum = 0.0;
    for (double v : s.values) sum += v;
    CHECK(std::abs(sum - m.trace()) <= 1e-8 * 40);
    const double eps = 0.37;
    const auto shifted = eigen_symmetric(m.shifted(eps));
    CHECK(max_abs_diff(shifted.values, [&] {
            auto v = s.values;
            for (double& x : v) x += eps;
            return v;
          }()) <= 1e-12);
  }
  const auto m = random_symmetric(50, rng);
  CHECK(max_abs_diff(eigen_symmetric(m).values, oracle::dense_bisection_eigenvalues(m)) <= 1e-9);
}

TEST_CASE("sturm_count") {
  TridiagonalMatrix t{{1, 2, 3}, {0, 0}};
  CHECK(sturm_count(t, 2.5) == 2);
  CHECK(sturm_count(t, -10.0) == 0);
  CHECK(sturm_count(t, 10.0) == 3);
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const auto r = random_tridiagonal(25, rng);
    const auto s = eigen_tridiagonal(r);
    const double x = 3.0 * rng.normal();
    const auto below = static_cast<std::size_t>(std::lower_bound(s.values.begin(), s.values.end(), x) -
                                                s.values.begin());
    CHECK(sturm_count(r, x) == below);
  }
}

TEST_CASE("empirical stieltjes") {
  using cd = std::complex<double>;
  Spectrum s{{-1.0, 1.0}, {}};
  CHECK(std::abs(empirical_stieltjes(s, cd(0, 1)) - cd(0, 0.5)) <= 1e-15);
  const cd z(0.2, -0.4);
  CHECK(std::abs(empirical_stieltjes(s, std::conj(z)) - std::conj(empirical_stieltjes(s, z))) <= 1e-15);
  CHECK_THROWS_AS(empirical_stieltjes(s, cd(0.3, 0.0)), DomainError);
}

TEST_CASE("rigidity residual") {
  const std::size_t n = 100;
  Spectrum s;
  s.values = semicircle::ClassicalLocationTable(n).values();
  CHECK(rigidity_residual(s) == 0.0);
  const std::size_t i = 40;
  const double delta = 1e-3;
  s.values[i - 1] += delta;
  const double expected = delta * std::cbrt(double(n * n)) * std::cbrt(double(std::min(i, n + 1 - i)));
  CHECK(rigidity_residual(s) == doctest::Approx(expected).epsilon(1e-12));
}
