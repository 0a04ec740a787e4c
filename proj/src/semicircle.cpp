#include "rmt/semicircle.hpp"

#include <cmath>
#include <numbers>

#include "rmt/errors.hpp"

namespace rmt::semicircle {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxQuantileIterations = 50;
constexpr double kBracketWidth = 1e-14;

// Newton on the closed-form CDF, falling back to bisection whenever the
// Newton iterate leaves the current bracket. u <= 1/2 only.
double lower_half_quantile(double u) {
  double lo = -2.0;
  double hi = 0.0;
  double x = -2.0 + 2.0 * std::cbrt(u);  // rough inverse of the edge behaviour
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  for (int it = 0; it < kMaxQuantileIterations; ++it) {
    const double r = cdf(x) - u;
    if (r == 0.0) return x;
    if (r > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    if (hi - lo <= kBracketWidth) break;
    const double rho = density(x);
    double next = rho > 0.0 ? x - r / rho : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 0.25 * kBracketWidth) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

}  // namespace

double density(double x) noexcept {
  const double s = 4.0 - x * x;
  return s > 0.0 ? std::sqrt(s) / (2.0 * kPi) : 0.0;
}

double cdf(double x) noexcept {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * kPi) + std::asin(0.5 * x) / kPi;
}

double quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("semicircle::quantile: u must lie in (0, 1)");
  if (u == 0.5) return 0.0;
  if (u < 0.5) return lower_half_quantile(u);
  return -lower_half_quantile(1.0 - u);
}

std::complex<double> stieltjes(std::complex<double> z) {
  if (z.imag() == 0.0) throw DomainError("semicircle::stieltjes: z must be non-real");
  // sqrt(z-2) sqrt(z+2) has its cut on [-2, 2] and behaves like z at infinity,
  // which selects the root with Im m * Im z > 0. The product form of the
  // second root avoids cancellation for large |z|.
  const std::complex<double> s = std::sqrt(z - 2.0) * std::sqrt(z + 2.0);
  return -2.0 / (z + s);
}

std::complex<double> stieltjes_derivative(std::complex<double> z) {
  const std::complex<double> m = stieltjes(z);
  const std::complex<double> m2 = m * m;
  const std::complex<double> denom = 1.0 - m2;
  if (std::abs(denom) < 1e-14) {
    throw NumericError("semicircle::stieltjes_derivative: singular at the spectral edge");
  }
  return m2 / denom;
}

ClassicalLocationTable::ClassicalLocationTable(std::size_t n) {
  if (n < 1) throw DomainError("ClassicalLocationTable: n must be positive");
  gamma_.assign(n, 0.0);
  const double nd = static_cast<double>(n);
  for (std::size_t i = 1; 2 * i < n; ++i) {
    const double g = lower_half_quantile(static_cast<double>(i) / nd);
    gamma_[i - 1] = g;
    gamma_[n - i - 1] = -g;
  }
  if (n % 2 == 0) gamma_[n / 2 - 1] = 0.0;
  gamma_[n - 1] = 2.0;
}

double classical_location(std::size_t i, std::size_t n) {
  if (n < 1 || i < 1 || i > n) throw DomainError("classical_location: index out of range");
  if (i == n) return 2.0;
  if (2 * i == n) return 0.0;
  if (2 * i < n) return lower_half_quantile(static_cast<double>(i) / static_cast<double>(n));
  return -lower_half_quantile(static_cast<double>(n - i) / static_cast<double>(n));
}

}  // namespace rmt::semicircle
