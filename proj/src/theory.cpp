#include "rmt/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rmt/errors.hpp"
#include "rmt/quadrature.hpp"
#include "rmt/semicircle.hpp"

namespace rmt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;

// Below this separation the divided difference is replaced by the mean of f'
// over the segment.
constexpr double kNearDiagonal = 1e-5;

// (f(x) - f(y)) / (x - y), or the average of f' on [y, x] when x and y nearly
// coincide.
double divided_difference(const TestFunction& f, double x, double fx, double y, double fy) {
  const double d = x - y;
  if (std::abs(d) > kNearDiagonal) return (fx - fy) / d;
  const auto& gl = quad::gauss_legendre(4);
  double avg = 0.0;
  for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
    avg += gl.weights[q] * f.derivative(y + 0.5 * (gl.nodes[q] + 1.0) * d);
  }
  return 0.5 * avg;
}

struct Node {
  double x;       // spatial coordinate
  double weight;  // quadrature weight times the Jacobian part of the measure
  double aux;     // map-specific auxiliary value (sin theta for the arcsine map)
  double fx;
};

// Symmetric tensor-product sum  sum_{i,j} w_i w_j D(x_i, x_j)^2 K(i, j).
template <typename Kernel>
double symmetric_pair_sum(const TestFunction& f, const std::vector<Node>& nodes, Kernel kernel) {
  quad::CompensatedSum total;
  const std::size_t m = nodes.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Node& a = nodes[i];
    double row = 0.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      const Node& b = nodes[j];
      const double d = divided_difference(f, a.x, a.fx, b.x, b.fx);
      row += b.weight * d * d * kernel(a, b);
    }
    const double fd = f.derivative(a.x);
    total.add(a.weight * (2.0 * row + a.weight * fd * fd * kernel(a, a)));
  }
  return total.value();
}

template <typename MakeNodes, typename Kernel>
quad::Estimate refine_double_integral(const TestFunction& f, const std::vector<double>& edges,
                                      const QuadratureOptions& options, MakeNodes make_nodes, Kernel kernel) {
  std::size_t per_panel = std::max<std::size_t>(options.start_nodes_per_panel, 2);
  double previous = symmetric_pair_sum(f, make_nodes(edges, per_panel), kernel);
  double last_error = HUGE_VAL;
  while (per_panel < options.max_nodes_per_panel) {
    per_panel *= 2;
    const double current = symmetric_pair_sum(f, make_nodes(edges, per_panel), kernel);
    const double diff = std::abs(current - previous);
    const double rel = current != 0.0 ? diff / std::abs(current) : diff;
    last_error = rel;
    previous = current;
    if (rel <= options.rel_tol || diff <= 1e-14) return {current, rel, per_panel * (edges.size() - 1)};
  }
  if (last_error > options.accept_tol) {
    throw NumericError("double integral: refinement levels disagree beyond tolerance");
  }
  return {previous, last_error, per_panel * (edges.size() - 1)};
}

// Panel edges in theta for the map x = c + r sin(theta).
std::vector<double> arcsine_edges(const TestFunction& f, double c, double r, std::size_t base_panels) {
  std::vector<double> bps;
  for (double b : f.breakpoints()) {
    const double t = (b - c) / r;
    if (t > -1.0 && t < 1.0) bps.push_back(std::asin(t));
  }
  for (double b : {f.support().lo, f.support().hi}) {
    const double t = (b - c) / r;
    if (t > -1.0 && t < 1.0) bps.push_back(std::asin(t));
  }
  return quad::panel_edges(-kHalfPi, kHalfPi, base_panels, bps);
}

// int int D^2 r^2 (1 - sin t sin p) dt dp over [-pi/2, pi/2]^2, which equals
// int int D^2 (-ab - xy + (a+b)(x+y)/2) / sqrt((x-a)(b-x)(y-a)(b-y)) dx dy.
quad::Estimate arcsine_double_integral(const TestFunction& f, double c, double r, const QuadratureOptions& opt) {
  const std::vector<double> edges = arcsine_edges(f, c, r, opt.base_panels);
  auto make_nodes = [&](const std::vector<double>& e, std::size_t per_panel) {
    const quad::CompositeRule rule = quad::composite_rule(e, per_panel);
    std::vector<Node> nodes(rule.nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double s = std::sin(rule.nodes[k]);
      const double x = c + r * s;
      nodes[k] = {x, rule.weights[k], s, f(x)};
    }
    return nodes;
  };
  auto kernel = [r](const Node& a, const Node& b) { return r * r * (1.0 - a.aux * b.aux); };
  return refine_double_integral(f, edges, opt, make_nodes, kernel);
}

// int_{-2}^{2} f(x) w(x) / sqrt(4 - x^2) dx with x = 2 sin(theta).
quad::Estimate arcsine_integral(const TestFunction& f, const std::function<double(double)>& w) {
  std::vector<double> bps;
  for (double b : f.breakpoints()) {
    if (b > -2.0 && b < 2.0) bps.push_back(std::asin(0.5 * b));
  }
  for (double b : {f.support().lo, f.support().hi}) {
    if (b > -2.0 && b < 2.0) bps.push_back(std::asin(0.5 * b));
  }
  return quad::integrate(
      [&](double t) {
        const double x = 2.0 * std::sin(t);
        return f(x) * w(x);
      },
      -kHalfPi, kHalfPi, bps, 1e-13, 1e-15, 8, 2048);
}

void check_bulk(double gamma, double kappa, const char* who) {
  if (!(std::abs(gamma) < 2.0 - kappa)) throw DomainError(std::string(who) + ": gamma outside the bulk");
}

}  // namespace

VarianceBreakdown variance_functional(const TestFunction& f, double s4, double a2,
                                      const QuadratureOptions& options) {
  VarianceBreakdown v;
  const quad::Estimate dbl = arcsine_double_integral(f, 0.0, 2.0, options);
  v.double_integral_term = dbl.value / (2.0 * kPi * kPi);
  const quad::Estimate ix = arcsine_integral(f, [](double x) { return x; });
  const quad::Estimate i2 = arcsine_integral(f, [](double x) { return 2.0 - x * x; });
  v.a2_term = (a2 - 1.0) / (4.0 * kPi * kPi) * ix.value * ix.value;
  v.s4_term = s4 / (2.0 * kPi * kPi) * i2.value * i2.value;
  v.total = v.double_integral_term + v.a2_term + v.s4_term;
  v.refinement_error = dbl.refinement_error;
  return v;
}

MeanBreakdown mean_expansion(const TestFunction& f, double s4, double a2, std::size_t n) {
  MeanBreakdown m;
  const quad::Estimate lead = arcsine_integral(f, [](double x) { return (4.0 - x * x) / (2.0 * kPi); });
  const quad::Estimate arc = arcsine_integral(f, [](double) { return 1.0; });
  const quad::Estimate i2 = arcsine_integral(f, [](double x) { return 2.0 - x * x; });
  const quad::Estimate i4 = arcsine_integral(f, [](double x) { return x * x * x * x - 4.0 * x * x + 2.0; });
  m.leading = static_cast<double>(n) * lead.value;
  m.arcsine_term = -arc.value / (2.0 * kPi);
  m.edge_term = 0.25 * (f(2.0) + f(-2.0));
  m.a2_term = (1.0 - a2) / (2.0 * kPi) * i2.value;
  m.s4_term = s4 / (2.0 * kPi) * i4.value;
  m.total = m.leading + m.arcsine_term + m.edge_term + m.a2_term + m.s4_term;
  m.refinement_error =
      std::max({lead.refinement_error, arc.refinement_error, i2.refinement_error, i4.refinement_error});
  return m;
}

IndicatorIntegrals indicator_integrals(double gamma) {
  if (!(std::abs(gamma) < 2.0)) throw DomainError("indicator_integrals: |gamma| must be below 2");
  const double root = std::sqrt(4.0 - gamma * gamma);
  return {root * (2.0 * gamma - gamma * gamma * gamma) / (8.0 * kPi), root * gamma / (4.0 * kPi),
          -root / (2.0 * kPi)};
}

double single_eigenvalue_mean(double gamma_i, double s4, double a2, double kappa) {
  check_bulk(gamma_i, kappa, "single_eigenvalue_mean");
  const double rho = semicircle::density(gamma_i);
  return std::asin(0.5 * gamma_i) / (2.0 * kPi * rho) - 1.0 / (2.0 * rho) +
         0.25 * s4 * (gamma_i * gamma_i * gamma_i - 2.0 * gamma_i) + 0.5 * (a2 - 1.0) * gamma_i;
}

double counting_mean_correction(double energy, double s4, double a2) {
  const IndicatorIntegrals ii = indicator_integrals(energy);
  const double arcsine = -(std::asin(0.5 * energy) + kHalfPi) / (2.0 * kPi);
  return arcsine + 0.25 + (1.0 - a2) * ii.a2_edge + s4 * ii.s4;
}

double single_eigenvalue_variance_shift(double gamma_i, double s4, double a2, std::size_t n, double kappa) {
  check_bulk(gamma_i, kappa, "single_eigenvalue_variance_shift");
  if (n < 1) throw DomainError("single_eigenvalue_variance_shift: n must be positive");
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  return s4 * gamma_i * gamma_i / (8.0 * n2) + (a2 - 1.0) / n2;
}

double indicator_variance_shift(double gamma_i, double s4, double a2, std::size_t n, double kappa) {
  check_bulk(gamma_i, kappa, "indicator_variance_shift");
  if (n < 1) throw DomainError("indicator_variance_shift: n must be positive");
  const IndicatorIntegrals ii = indicator_integrals(gamma_i);
  const double nrho = static_cast<double>(n) * semicircle::density(gamma_i);
  // Variance functional corrections of (1/rho) 1{x >= gamma}, in units of (N rho)^2.
  return ((a2 - 1.0) * ii.x * ii.x + 2.0 * s4 * ii.a2_edge * ii.a2_edge) / (nrho * nrho);
}

double mesoscopic_variance(const TestFunction& f, double c_sym, double center, double scale,
                           const QuadratureOptions& options) {
  if (!(scale > 0.0)) throw DomainError("mesoscopic_variance: scale must be positive");
  const double far = 1e9 * scale;
  const double left = f(center - far);
  const double right = f(center + far);
  if (!std::isfinite(left) || !std::isfinite(right) ||
      std::abs(left - right) > 1e-6 * std::max({1.0, std::abs(left), std::abs(right)})) {
    throw DomainError("mesoscopic_variance: f has different limits at +-infinity; the integral diverges");
  }
  std::vector<double> bps;
  for (double b : f.breakpoints()) bps.push_back(std::atan((b - center) / scale));
  for (double b : {f.support().lo, f.support().hi}) {
    if (std::isfinite(b)) bps.push_back(std::atan((b - center) / scale));
  }
  const std::vector<double> edges = quad::panel_edges(-kHalfPi, kHalfPi, options.base_panels, bps);
  auto make_nodes = [&](const std::vector<double>& e, std::size_t per_panel) {
    const quad::CompositeRule rule = quad::composite_rule(e, per_panel);
    std::vector<Node> nodes(rule.nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double t = rule.nodes[k];
      const double c = std::cos(t);
      const double x = center + scale * std::tan(t);
      nodes[k] = {x, rule.weights[k] * scale / (c * c), 0.0, f(x)};
    }
    return nodes;
  };
  auto kernel = [](const Node&, const Node&) { return 1.0; };
  const quad::Estimate e = refine_double_integral(f, edges, options, make_nodes, kernel);
  return c_sym / (2.0 * kPi * kPi) * e.value;
}

double beta_variance_functional(const TestFunction& f, double a, double b, double beta,
                                const QuadratureOptions& options) {
  if (!(a < b)) throw DomainError("beta_variance_functional: need A < B");
  if (!(beta > 0.0)) throw DomainError("beta_variance_functional: beta must be positive");
  const quad::Estimate e = arcsine_double_integral(f, 0.5 * (a + b), 0.5 * (b - a), options);
  return e.value / (2.0 * beta * kPi * kPi);
}

Normalization gustavsson_scaling(double gamma_i, std::size_t n, double beta, EnsembleFamily family) {
  if (!(std::abs(gamma_i) < 2.0)) throw DomainError("gustavsson_scaling: gamma outside (-2, 2)");
  if (n < 2) throw DomainError("gustavsson_scaling: n must be at least 2");
  if (!(beta >= 1.0)) throw DomainError("gustavsson_scaling: beta must be at least 1");
  const double nd = static_cast<double>(n);
  const double log_n = std::log(nd);
  if (family == EnsembleFamily::wigner) {
    return {gamma_i, std::sqrt(log_n / (1.0 - 0.25 * gamma_i * gamma_i)) / nd};
  }
  return {gamma_i, std::sqrt(log_n) / (std::sqrt(beta) * nd * kPi * semicircle::density(gamma_i))};
}

double printed_beta_scale(double gamma_i, std::size_t n, double beta) {
  const double nd = static_cast<double>(n);
  return 2.0 * std::sqrt(std::log(nd)) / (std::sqrt(beta) * nd * semicircle::density(gamma_i) * kPi);
}

std::optional<double> nu_v_mass(double, double) { return std::nullopt; }

}  // namespace rmt
