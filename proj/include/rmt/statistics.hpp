#pragma once

#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace rmt {

struct KsResult {
  double distance = 0.0;
  double p_value = 1.0;  // asymptotic Kolmogorov approximation
};

/// Kolmogorov survival function Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_survival(double x);

/// One-sample KS test against the standard normal. Throws DomainError for
/// fewer than 50 samples.
KsResult ks_normal(const std::vector<double>& samples);

/// Two-sample KS test. Throws DomainError if either sample is empty.
KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b);

struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double mean_se = 0.0;   // delete-1 jackknife
  double variance_se = 0.0;
  std::size_t count = 0;
};

/// Throws DomainError for fewer than 2 samples.
MeanVariance estimate_mean_var(const std::vector<double>& samples);

/// Delete-1 jackknife standard error of a statistic, given its value with
/// each sample left out in turn.
double jackknife_se(const std::vector<double>& leave_one_out);

/// Sample correlation of paired data with its jackknife standard error.
struct Correlation {
  double value = 0.0;
  double se = 0.0;
};
Correlation correlation(const std::vector<double>& x, const std::vector<double>& y);

/// Writes a CSV table: header row, then one line per row with every value at
/// 17 significant digits.
void write_csv(std::ostream& out, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

}  // namespace rmt
