#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rmt::quad {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Rule with n nodes; computed once per n and cached for the process lifetime.
const GaussLegendreRule& gauss_legendre(std::size_t n);

/// Nodes and weights of a composite rule over consecutive panels.
struct CompositeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<std::size_t> panel;  // panel index of each node
};

/// Composite Gauss-Legendre rule with `per_panel` nodes on each interval
/// [edges[k], edges[k+1]]. `edges` must be strictly increasing.
CompositeRule composite_rule(std::span<const double> edges, std::size_t per_panel);

/// Sorted, de-duplicated panel edges on [a, b]: `base_panels` equal pieces
/// plus every breakpoint strictly inside (a, b).
std::vector<double> panel_edges(double a, double b, std::size_t base_panels,
                                std::span<const double> breakpoints);

/// Value of an integral together with the disagreement between the last two
/// refinement levels.
struct Estimate {
  double value = 0.0;
  double refinement_error = 0.0;
  std::size_t nodes = 0;
};

/// Integrates g over [a, b] with a composite rule, doubling the nodes per
/// panel until two successive levels agree to rel_tol (or abs_tol).
/// Throws NumericError if max_nodes_per_panel is exhausted first.
Estimate integrate(const std::function<double(double)>& g, double a, double b,
                   std::span<const double> breakpoints = {}, double rel_tol = 1e-12,
                   double abs_tol = 1e-15, std::size_t base_panels = 8,
                   std::size_t max_nodes_per_panel = 1024);

/// Neumaier-compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace rmt::quad
