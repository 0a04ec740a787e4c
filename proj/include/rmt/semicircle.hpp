#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace rmt::semicircle {

/// rho_sc(x) = sqrt((4 - x^2)_+) / (2 pi).
double density(double x) noexcept;

/// Integral of rho_sc over (-inf, x], from the closed-form antiderivative.
double cdf(double x) noexcept;

/// Inverse of cdf on (0, 1). Throws DomainError outside the open interval.
double quantile(double u);

/// Stieltjes transform m(z) = int rho_sc(x) / (x - z) dx, Im z != 0.
std::complex<double> stieltjes(std::complex<double> z);

/// m'(z) = m^2 / (1 - m^2). Throws NumericError where m^2 = 1.
std::complex<double> stieltjes_derivative(std::complex<double> z);

/// Classical locations gamma_i = quantile(i / N), i = 1..N (gamma_N = 2).
///
/// Computed once per N; entries with 2i > N are reflections of entries with
/// 2i < N so the table is exactly antisymmetric.
class ClassicalLocationTable {
 public:
  explicit ClassicalLocationTable(std::size_t n);

  std::size_t size() const noexcept { return gamma_.size(); }

  /// 1-based, matching the eigenvalue labelling lambda_1 <= ... <= lambda_N.
  double operator()(std::size_t i) const { return gamma_.at(i - 1); }

  const std::vector<double>& values() const noexcept { return gamma_; }

 private:
  std::vector<double> gamma_;
};

/// Classical location of index i (1-based) for dimension n.
double classical_location(std::size_t i, std::size_t n);

}  // namespace rmt::semicircle
