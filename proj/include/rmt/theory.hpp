#pragma once

#include <cstddef>
#include <optional>

#include "rmt/mesostat.hpp"

namespace rmt {

/// Limiting variance of a centered linear statistic of a Wigner matrix, split
/// into the Gaussian double integral and the a_2 and s_4 corrections.
struct VarianceBreakdown {
  double double_integral_term = 0.0;
  double a2_term = 0.0;
  double s4_term = 0.0;
  double total = 0.0;
  /// Largest relative disagreement between the last two refinement levels.
  double refinement_error = 0.0;
};

/// E[tr f(H)] to order one.
struct MeanBreakdown {
  double leading = 0.0;        // N int f rho_sc
  double arcsine_term = 0.0;   // -(1/2pi) int f / sqrt(4 - x^2)
  double edge_term = 0.0;      // (f(2) + f(-2)) / 4
  double a2_term = 0.0;        // ((1 - a2)/2pi) int f (2 - x^2) / sqrt(4 - x^2)
  double s4_term = 0.0;        // (s4/2pi) int f (x^4 - 4x^2 + 2) / sqrt(4 - x^2)
  double total = 0.0;
  double refinement_error = 0.0;

  /// total - leading.
  double corrections() const noexcept { return total - leading; }
};

/// Options for the double integrals.
struct QuadratureOptions {
  double rel_tol = 1e-8;     // target agreement between refinement levels
  double accept_tol = 1e-6;  // NumericError above this
  std::size_t base_panels = 8;
  std::size_t start_nodes_per_panel = 64;  // doubled on every refinement
  std::size_t max_nodes_per_panel = 512;
};

VarianceBreakdown variance_functional(const TestFunction& f, double s4, double a2,
                                      const QuadratureOptions& options = {});

MeanBreakdown mean_expansion(const TestFunction& f, double s4, double a2, std::size_t n);

/// Weighted integrals of the indicator 1{x <= gamma}, each carrying the 1/(2pi)
/// prefactor: (x^4 - 4x^2 + 2), (2 - x^2) and x against 1/sqrt(4 - x^2).
struct IndicatorIntegrals {
  double s4 = 0.0;
  double a2_edge = 0.0;
  double x = 0.0;
};

/// Closed forms; throws DomainError for |gamma| >= 2.
IndicatorIntegrals indicator_integrals(double gamma);

/// Prediction for N E[lambda_i - gamma_i]. Throws DomainError unless |gamma| < 2 - kappa.
double single_eigenvalue_mean(double gamma_i, double s4, double a2, double kappa = 0.05);

/// E[N(E)] - N F_sc(E) to order one for the counting function N(E) = #{lambda_j <= E}:
/// the mean expansion applied to the indicator of (-inf, E]. Zero for GOE at E = 0.
double counting_mean_correction(double energy, double s4, double a2);

/// Prediction for Var_H(lambda_i) - Var_GOE(lambda_i).
double single_eigenvalue_variance_shift(double gamma_i, double s4, double a2, std::size_t n,
                                        double kappa = 0.05);

/// (c_sym / 2pi^2) times the double integral of ((f(x) - f(y)) / (x - y))^2
/// over the plane. `center` and `scale` place the compactifying map
/// x = center + scale tan(theta). Throws DomainError if f tends to different
/// limits at +-infinity (the integral diverges).
double mesoscopic_variance(const TestFunction& f, double c_sym, double center = 0.0, double scale = 1.0,
                           const QuadratureOptions& options = {});

/// Variance functional of a one-cut beta-ensemble with support [a, b].
double beta_variance_functional(const TestFunction& f, double a, double b, double beta,
                                const QuadratureOptions& options = {});

/// The a_2 and s_4 corrections of the variance functional evaluated on the
/// step (1/rho) 1{x >= gamma}, divided by N^2: ((a2 - 1) + s4 gamma^2 / 2) / N^2.
/// Reported next to single_eigenvalue_variance_shift as an alternative reading.
double indicator_variance_shift(double gamma_i, double s4, double a2, std::size_t n, double kappa = 0.05);

/// Affine map lambda -> (lambda - center) / scale that is asymptotically
/// standard normal.
struct Normalization {
  double center = 0.0;
  double scale = 1.0;
};

enum class EnsembleFamily { wigner, beta };

/// Wigner: scale sqrt(log N / (1 - gamma^2/4)) / N. beta: sqrt(log N) /
/// (sqrt(beta) N pi rho_sc(gamma)), which coincides with the Wigner scale at beta = 1.
Normalization gustavsson_scaling(double gamma_i, std::size_t n, double beta,
                                 EnsembleFamily family = EnsembleFamily::wigner);

/// The beta-ensemble scale exactly as printed in the source statement:
/// 2 sqrt(log N) / (sqrt(beta) N rho pi). Twice the Wigner scale at beta = 1.
double printed_beta_scale(double gamma_i, std::size_t n, double beta);

/// Placeholder for int_A^gamma d nu_V. The signed measure nu_V for a general
/// potential is not constructed here; always returns nullopt.
std::optional<double> nu_v_mass(double a, double gamma);

}  // namespace rmt
