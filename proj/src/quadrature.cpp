#include "rmt/quadrature.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "rmt/errors.hpp"

namespace rmt::quad {

namespace {

GaussLegendreRule build_rule(std::size_t n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < (n + 1) / 2; ++k) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(k) + 0.75) / (nd + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t j = 2; j <= n; ++j) {
        const double jd = static_cast<double>(j);
        const double p2 = ((2.0 * jd - 1.0) * x * p1 - (jd - 1.0) * p0) / jd;
        p0 = p1;
        p1 = p2;
      }
      dp = nd * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t j = 2; j <= n; ++j) {
      const double jd = static_cast<double>(j);
      const double p2 = ((2.0 * jd - 1.0) * x * p1 - (jd - 1.0) * p0) / jd;
      p0 = p1;
      p1 = p2;
    }
    dp = nd * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[k] = -x;
    rule.nodes[n - 1 - k] = x;
    rule.weights[k] = w;
    rule.weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(std::size_t n) {
  if (n == 0) throw DomainError("gauss_legendre: need at least one node");
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussLegendreRule>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, std::make_unique<GaussLegendreRule>(build_rule(n))).first;
  }
  return *it->second;
}

CompositeRule composite_rule(std::span<const double> edges, std::size_t per_panel) {
  const GaussLegendreRule& base = gauss_legendre(per_panel);
  CompositeRule rule;
  const std::size_t panels = edges.size() < 2 ? 0 : edges.size() - 1;
  rule.nodes.reserve(panels * per_panel);
  rule.weights.reserve(panels * per_panel);
  rule.panel.reserve(panels * per_panel);
  for (std::size_t p = 0; p < panels; ++p) {
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    const double mid = 0.5 * (edges[p + 1] + edges[p]);
    for (std::size_t k = 0; k < per_panel; ++k) {
      rule.nodes.push_back(mid + half * base.nodes[k]);
      rule.weights.push_back(half * base.weights[k]);
      rule.panel.push_back(p);
    }
  }
  return rule;
}

std::vector<double> panel_edges(double a, double b, std::size_t base_panels,
                                std::span<const double> breakpoints) {
  if (!(b > a)) throw DomainError("panel_edges: empty interval");
  base_panels = std::max<std::size_t>(base_panels, 1);
  std::vector<double> edges;
  edges.reserve(base_panels + 1 + breakpoints.size());
  for (std::size_t k = 0; k <= base_panels; ++k) {
    edges.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(base_panels));
  }
  edges.back() = b;
  for (double bp : breakpoints) {
    if (bp > a && bp < b) edges.push_back(bp);
  }
  std::sort(edges.begin(), edges.end());
  // Merge edges closer than a tiny fraction of the interval.
  const double min_width = 1e-13 * (b - a);
  std::vector<double> merged;
  merged.reserve(edges.size());
  for (double e : edges) {
    if (merged.empty() || e - merged.back() > min_width) merged.push_back(e);
  }
  merged.back() = b;
  return merged;
}

Estimate integrate(const std::function<double(double)>& g, double a, double b,
                   std::span<const double> breakpoints, double rel_tol, double abs_tol,
                   std::size_t base_panels, std::size_t max_nodes_per_panel) {
  const std::vector<double> edges = panel_edges(a, b, base_panels, breakpoints);
  auto apply = [&](std::size_t per_panel) {
    const CompositeRule rule = composite_rule(edges, per_panel);
    CompensatedSum sum;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) sum.add(rule.weights[k] * g(rule.nodes[k]));
    return sum.value();
  };
  std::size_t per_panel = 16;
  double previous = apply(per_panel);
  while (per_panel < max_nodes_per_panel) {
    per_panel *= 2;
    const double current = apply(per_panel);
    const double diff = std::abs(current - previous);
    if (diff <= rel_tol * std::abs(current) || diff <= abs_tol) {
      return {current, diff, per_panel * (edges.size() - 1)};
    }
    previous = current;
  }
  throw NumericError("quad::integrate: no convergence within the node budget");
}

}  // namespace rmt::quad
