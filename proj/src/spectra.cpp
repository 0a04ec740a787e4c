#include "rmt/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rmt/errors.hpp"
#include "rmt/quadrature.hpp"
#include "rmt/semicircle.hpp"

namespace rmt {

SymmetricMatrix SymmetricMatrix::identity(std::size_t n) {
  SymmetricMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1.0);
  return m;
}

double SymmetricMatrix::trace() const noexcept {
  quad::CompensatedSum s;
  for (std::size_t i = 0; i < n_; ++i) s.add(data_[i * n_ + i]);
  return s.value();
}

double SymmetricMatrix::frobenius_norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

SymmetricMatrix SymmetricMatrix::axpy(double scale, const SymmetricMatrix& other) const {
  if (other.n_ != n_) throw DomainError("SymmetricMatrix::axpy: dimension mismatch");
  SymmetricMatrix out(*this);
  for (std::size_t k = 0; k < data_.size(); ++k) out.data_[k] += scale * other.data_[k];
  return out;
}

SymmetricMatrix SymmetricMatrix::scaled(double scale) const {
  SymmetricMatrix out(*this);
  for (double& v : out.data_) v *= scale;
  return out;
}

SymmetricMatrix SymmetricMatrix::shifted(double diagonal_shift) const {
  SymmetricMatrix out(*this);
  for (std::size_t i = 0; i < n_; ++i) out.data_[i * n_ + i] += diagonal_shift;
  return out;
}

double TridiagonalMatrix::trace() const noexcept {
  quad::CompensatedSum s;
  for (double v : diag) s.add(v);
  return s.value();
}

double TridiagonalMatrix::frobenius_norm() const noexcept {
  double s = 0.0;
  for (double v : diag) s += v * v;
  for (double v : offdiag) s += 2.0 * v * v;
  return std::sqrt(s);
}

// Eigenvalue-only variant of the classical tred2 sweep: rows are reduced from
// the bottom up and only the lower triangle is updated, so every inner loop
// walks a contiguous row.
TridiagonalMatrix householder_tridiagonalize(const SymmetricMatrix& m) {
  const std::size_t n = m.size();
  TridiagonalMatrix t;
  t.diag.assign(n, 0.0);
  t.offdiag.assign(n > 0 ? n - 1 : 0, 0.0);
  if (n == 0) return t;

  std::vector<double> a(m.data());
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  std::vector<double> e(n, 0.0);
  std::vector<double> p(n, 0.0);

  for (std::size_t i = n - 1; i >= 1; --i) {
    const std::size_t l = i - 1;
    double* row = &a[i * n];
    if (l > 0) {
      double scale = 0.0;
      for (std::size_t k = 0; k <= l; ++k) scale += std::abs(row[k]);
      if (scale == 0.0) {
        e[i] = row[l];
      } else {
        double h = 0.0;
        for (std::size_t k = 0; k <= l; ++k) {
          row[k] /= scale;
          h += row[k] * row[k];
        }
        const double f = row[l];
        const double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        row[l] = f - g;

        // p = A u / h using the lower triangle only.
        std::fill(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(l + 1), 0.0);
        for (std::size_t j = 0; j <= l; ++j) {
          const double* rj = &a[j * n];
          const double uj = row[j];
          double acc = 0.0;
          for (std::size_t k = 0; k < j; ++k) {
            acc += rj[k] * row[k];
            p[k] += rj[k] * uj;
          }
          p[j] += acc + rj[j] * uj;
        }
        double fsum = 0.0;
        for (std::size_t j = 0; j <= l; ++j) {
          p[j] /= h;
          fsum += p[j] * row[j];
        }
        const double hh = fsum / (h + h);
        for (std::size_t j = 0; j <= l; ++j) p[j] -= hh * row[j];
        for (std::size_t j = 0; j <= l; ++j) {
          double* rj = &a[j * n];
          const double fj = row[j];
          const double gj = p[j];
          for (std::size_t k = 0; k <= j; ++k) rj[k] -= fj * p[k] + gj * row[k];
        }
      }
    } else {
      e[i] = row[l];
    }
  }
  for (std::size_t i = 0; i < n; ++i) t.diag[i] = at(i, i);
  for (std::size_t i = 1; i < n; ++i) t.offdiag[i - 1] = e[i];
  return t;
}

Spectrum eigen_tridiagonal(const TridiagonalMatrix& t) {
  const std::size_t n = t.size();
  if (t.offdiag.size() + 1 != n && n != 0) {
    throw DomainError("eigen_tridiagonal: offdiag must have length n - 1");
  }
  Spectrum s;
  std::vector<double> d(t.diag);
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = t.offdiag[i];
  for (double v : d) {
    if (!std::isfinite(v)) throw DomainError("eigen_tridiagonal: non-finite entry");
  }
  for (double v : e) {
    if (!std::isfinite(v)) throw DomainError("eigen_tridiagonal: non-finite entry");
  }

  constexpr double eps = std::numeric_limits<double>::epsilon();
  const std::size_t max_iterations = 50 * std::max<std::size_t>(n, 1);
  std::size_t iterations = 0;

  for (std::size_t l = 0; l < n; ++l) {
    for (;;) {
      std::size_t m = l;
      for (; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iterations > max_iterations) {
        throw NumericError("eigen_tridiagonal: QL iteration did not converge");
      }
      // Wilkinson shift from the leading 2x2 block of the unreduced part.
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0;
      double c = 1.0;
      double p = 0.0;
      bool underflow = false;
      for (std::size_t i = m; i-- > l;) {
        double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    }
  }
  std::sort(d.begin(), d.end());
  s.values = std::move(d);
  return s;
}

Spectrum eigen_symmetric(const SymmetricMatrix& m) {
  return eigen_tridiagonal(householder_tridiagonalize(m));
}

std::size_t sturm_count(const TridiagonalMatrix& t, double x) {
  const std::size_t n = t.size();
  if (n == 0) return 0;
  double max_e2 = 1.0;
  for (double v : t.offdiag) max_e2 = std::max(max_e2, v * v);
  const double pivmin = std::numeric_limits<double>::min() * max_e2;
  std::size_t count = 0;
  double q = t.diag[0] - x;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0.0) ++count;
  for (std::size_t k = 1; k < n; ++k) {
    const double ek = t.offdiag[k - 1];
    q = t.diag[k] - x - ek * ek / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
  }
  return count;
}

std::pair<double, double> gershgorin_bounds(const TridiagonalMatrix& t) {
  const std::size_t n = t.size();
  if (n == 0) return {0.0, 0.0};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    double radius = 0.0;
    if (i > 0) radius += std::abs(t.offdiag[i - 1]);
    if (i + 1 < n) radius += std::abs(t.offdiag[i]);
    lo = std::min(lo, t.diag[i] - radius);
    hi = std::max(hi, t.diag[i] + radius);
  }
  return {lo, hi};
}

std::vector<double> sturm_bisection_eigenvalues(const TridiagonalMatrix& t, double bracket_width) {
  const std::size_t n = t.size();
  std::vector<double> out(n);
  if (n == 0) return out;
  auto [glo, ghi] = gershgorin_bounds(t);
  const double pad = 1e-12 * std::max({1.0, std::abs(glo), std::abs(ghi)});
  glo -= pad;
  ghi += pad;
  for (std::size_t k = 0; k < n; ++k) {
    double lo = k > 0 ? std::max(glo, out[k - 1] - 2.0 * bracket_width) : glo;
    double hi = ghi;
    while (hi - lo > bracket_width) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (sturm_count(t, mid) >= k + 1) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    out[k] = 0.5 * (lo + hi);
  }
  return out;
}

std::complex<double> empirical_stieltjes(const Spectrum& s, std::complex<double> z) {
  if (z.imag() == 0.0) throw DomainError("empirical_stieltjes: z must be non-real");
  if (s.values.empty()) throw DomainError("empirical_stieltjes: empty spectrum");
  quad::CompensatedSum re;
  quad::CompensatedSum im;
  for (double lambda : s.values) {
    const std::complex<double> g = 1.0 / (lambda - z);
    re.add(g.real());
    im.add(g.imag());
  }
  const double n = static_cast<double>(s.values.size());
  return {re.value() / n, im.value() / n};
}

double rigidity_residual(const Spectrum& s) {
  const std::size_t n = s.size();
  if (n == 0) return 0.0;
  const semicircle::ClassicalLocationTable gamma(n);
  const double nd = static_cast<double>(n);
  const double scale = std::cbrt(nd * nd);
  double worst = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double edge_distance = static_cast<double>(std::min(i, n + 1 - i));
    worst = std::max(worst, std::abs(s(i) - gamma(i)) * scale * std::cbrt(edge_distance));
  }
  return worst;
}

}  // namespace rmt
