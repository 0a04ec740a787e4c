#include "rmt/statistics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "rmt/errors.hpp"

namespace rmt {

double kolmogorov_survival(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 0.2) return 1.0;  // the alternating series is inaccurate here and Q is 1 to 1e-20
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

KsResult ks_normal(const std::vector<double>& samples) {
  if (samples.size() < 50) throw DomainError("ks_normal: at least 50 samples required");
  std::vector<double> s = samples;
  std::sort(s.begin(), s.end());
  const double m = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double f = normal_cdf(s[k]);
    d = std::max({d, static_cast<double>(k + 1) / m - f, f - static_cast<double>(k) / m});
  }
  const double sq = std::sqrt(m);
  return {d, kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)};
}

KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::vector<double> x = a, y = b;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

double jackknife_se(const std::vector<double>& leave_one_out) {
  const std::size_t n = leave_one_out.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : leave_one_out) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : leave_one_out) ss += (v - mean) * (v - mean);
  return std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n) * ss);
}

MeanVariance estimate_mean_var(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw DomainError("estimate_mean_var: at least 2 samples required");
  const double nd = static_cast<double>(n);
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= nd;
  double s2 = 0.0;
  for (double v : samples) s2 += (v - mean) * (v - mean);

  MeanVariance r;
  r.count = n;
  r.mean = mean;
  r.variance = s2 / (nd - 1.0);
  // For the mean the jackknife reduces to sqrt(variance / n).
  r.mean_se = std::sqrt(r.variance / nd);
  if (n >= 3) {
    std::vector<double> loo(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double d = samples[k] - mean;
      // Removing x_k: the centred sum of squares drops by d^2 n / (n - 1).
      loo[k] = (s2 - d * d * nd / (nd - 1.0)) / (nd - 2.0);
    }
    r.variance_se = jackknife_se(loo);
  }
  return r;
}

Correlation correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 3) throw DomainError("correlation: need at least 3 paired samples");
  const double nd = static_cast<double>(n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nd;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / nd;
  double sxx = 0.0, syy = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = x[k] - mx, b = y[k] - my;
    sx += a;
    sy += b;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
  }
  auto corr = [](double m, double ax, double ay, double axx, double ayy, double axy) {
    const double cxx = axx - ax * ax / m, cyy = ayy - ay * ay / m, cxy = axy - ax * ay / m;
    return cxx > 0.0 && cyy > 0.0 ? cxy / std::sqrt(cxx * cyy) : 0.0;
  };
  Correlation r;
  r.value = corr(nd, sx, sy, sxx, syy, sxy);
  std::vector<double> loo(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = x[k] - mx, b = y[k] - my;
    loo[k] = corr(nd - 1.0, sx - a, sy - b, sxx - a * a, syy - b * b, sxy - a * b);
  }
  r.se = jackknife_se(loo);
  return r;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size()) throw DomainError("write_csv: row width differs from header");
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
}

}  // namespace rmt
