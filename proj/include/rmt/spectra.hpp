#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rmt {

/// Dense real symmetric matrix, row-major. Only symmetric updates are exposed,
/// so entries(i, j) == entries(j, i) holds bit-for-bit.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  static SymmetricMatrix identity(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

  /// Sets both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double value) noexcept {
    data_[i * n_ + j] = value;
    data_[j * n_ + i] = value;
  }

  double trace() const noexcept;
  double frobenius_norm() const noexcept;

  /// this + scale * other, entrywise.
  SymmetricMatrix axpy(double scale, const SymmetricMatrix& other) const;
  SymmetricMatrix scaled(double scale) const;
  SymmetricMatrix shifted(double diagonal_shift) const;

  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct TridiagonalMatrix {
  std::vector<double> diag;     // length n
  std::vector<double> offdiag;  // length n - 1

  std::size_t size() const noexcept { return diag.size(); }
  double trace() const noexcept;
  double frobenius_norm() const noexcept;
};

/// Where a spectrum came from.
struct Provenance {
  std::string ensemble;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
};

/// Eigenvalues in nondecreasing order.
struct Spectrum {
  std::vector<double> values;
  Provenance provenance;

  std::size_t size() const noexcept { return values.size(); }
  /// 1-based access, lambda_1 <= ... <= lambda_N.
  double operator()(std::size_t i) const { return values.at(i - 1); }
};

/// Orthogonal similarity reduction to tridiagonal form (Householder).
TridiagonalMatrix householder_tridiagonalize(const SymmetricMatrix& m);

/// All eigenvalues of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson shifts. Throws NumericError after 50 n iterations without
/// convergence.
Spectrum eigen_tridiagonal(const TridiagonalMatrix& t);

/// householder_tridiagonalize followed by eigen_tridiagonal.
Spectrum eigen_symmetric(const SymmetricMatrix& m);

/// Number of eigenvalues strictly below x (Sturm sequence sign count).
std::size_t sturm_count(const TridiagonalMatrix& t, double x);

/// Gershgorin interval containing every eigenvalue.
std::pair<double, double> gershgorin_bounds(const TridiagonalMatrix& t);

/// All eigenvalues by Sturm bisection to the given bracket width. Independent
/// of the QL path; used as a test oracle.
std::vector<double> sturm_bisection_eigenvalues(const TridiagonalMatrix& t,
                                                double bracket_width = 1e-13);

/// m_N(z) = (1/N) sum_j 1 / (lambda_j - z). Throws DomainError for real z.
std::complex<double> empirical_stieltjes(const Spectrum& s, std::complex<double> z);

/// max_i |lambda_i - gamma_i| N^{2/3} min(i, N + 1 - i)^{1/3}.
double rigidity_residual(const Spectrum& s);

}  // namespace rmt
