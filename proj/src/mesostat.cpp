#include "rmt/mesostat.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "rmt/errors.hpp"
#include "rmt/quadrature.hpp"
#include "rmt/semicircle.hpp"

namespace rmt {

namespace {

constexpr double kPi = std::numbers::pi;

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void check_params(const std::map<std::string, double>& params, std::initializer_list<const char*> allowed,
                  std::string_view name) {
  for (const auto& [key, value] : params) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ConfigError("test function '" + std::string(name) + "' has no parameter '" + key + "'");
    }
  }
}

// Cardinal cubic B-spline on [-2, 2].
double bspline(double t) noexcept {
  const double a = std::abs(t);
  if (a >= 2.0) return 0.0;
  if (a >= 1.0) {
    const double r = 2.0 - a;
    return r * r * r / 6.0;
  }
  return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
}

double bspline_derivative(double t) noexcept {
  const double a = std::abs(t);
  const double sign = t < 0.0 ? -1.0 : 1.0;
  if (a >= 2.0) return 0.0;
  if (a >= 1.0) {
    const double r = 2.0 - a;
    return -sign * 0.5 * r * r;
  }
  return sign * (-2.0 * a + 1.5 * a * a);
}

}  // namespace

TestFunction::TestFunction(std::string name, Fn value, Fn derivative, Interval support,
                           std::vector<double> breakpoints)
    : name_(std::move(name)),
      value_(std::move(value)),
      derivative_(std::move(derivative)),
      support_(support),
      breakpoints_(std::move(breakpoints)) {
  std::sort(breakpoints_.begin(), breakpoints_.end());
  breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
}

double TestFunction::kappa() const noexcept { return std::min(support_.lo + 2.0, 2.0 - support_.hi); }

const Norms& TestFunction::norms() const {
  if (norms_ready_) return norms_;
  // Uniform grid refined with the breakpoints; derivative total variation
  // stands in for ||f''||_1.
  constexpr std::size_t kGrid = 40000;
  std::vector<double> xs;
  xs.reserve(kGrid + 1 + breakpoints_.size());
  for (std::size_t k = 0; k <= kGrid; ++k) xs.push_back(-2.0 + 4.0 * static_cast<double>(k) / kGrid);
  for (double b : breakpoints_) {
    if (b > -2.0 && b < 2.0) xs.push_back(b);
  }
  std::sort(xs.begin(), xs.end());
  Norms n;
  double prev_f = std::abs(value_(xs[0]));
  double prev_d = derivative_(xs[0]);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const double h = xs[k] - xs[k - 1];
    const double fk = std::abs(value_(xs[k]));
    const double dk = derivative_(xs[k]);
    n.f += 0.5 * h * (prev_f + fk);
    n.d1 += 0.5 * h * (std::abs(prev_d) + std::abs(dk));
    n.d2 += std::abs(dk - prev_d);
    prev_f = fk;
    prev_d = dk;
  }
  norms_ = n;
  norms_ready_ = true;
  return norms_;
}

bool TestFunction::satisfies_norm_assumptions(std::size_t n, double c, double bound) const {
  const Norms& m = norms();
  return m.d2 <= std::pow(static_cast<double>(n), 1.0 - c) && m.d1 + m.f <= bound;
}

TestFunction TestFunction::shifted(double c) const {
  std::vector<double> bps = breakpoints_;
  for (double& b : bps) b += c;
  return TestFunction(name_, [v = value_, c](double x) { return v(x - c); },
                      [d = derivative_, c](double x) { return d(x - c); },
                      {support_.lo + c, support_.hi + c}, std::move(bps));
}

TestFunction TestFunction::dilated(double scale) const {
  if (!(scale > 0.0)) throw DomainError("TestFunction::dilated: scale must be positive");
  std::vector<double> bps = breakpoints_;
  for (double& b : bps) b *= scale;
  return TestFunction(name_, [v = value_, scale](double x) { return v(x / scale); },
                      [d = derivative_, scale](double x) { return d(x / scale) / scale; },
                      {support_.lo * scale, support_.hi * scale}, std::move(bps));
}

TestFunction TestFunction::truncated(double u) const {
  std::vector<double> bps = breakpoints_;
  bps.push_back(u);
  return TestFunction(name_ + "_truncated", [v = value_, u](double x) { return x <= u ? v(x) : 0.0; },
                      [d = derivative_, u](double x) { return x <= u ? d(x) : 0.0; },
                      {support_.lo, std::max(support_.lo, std::min(support_.hi, u))}, std::move(bps));
}

TestFunction TestFunction::smoothly_truncated(double u, double width) const {
  if (!(width > 0.0)) throw DomainError("TestFunction::smoothly_truncated: width must be positive");
  std::vector<double> bps = breakpoints_;
  bps.push_back(u);
  bps.push_back(u + width);
  auto value = [v = value_, u, width](double x) {
    return x <= u ? v(x) : v(x) * (1.0 - smoothstep((x - u) / width));
  };
  auto derivative = [v = value_, d = derivative_, u, width](double x) {
    if (x <= u) return d(x);
    const double t = (x - u) / width;
    return d(x) * (1.0 - smoothstep(t)) - v(x) * smoothstep_derivative(t) / width;
  };
  return TestFunction(name_ + "_smoothly_truncated", value, derivative,
                      {std::min(support_.lo, u), std::max(std::min(support_.hi, u + width), u)},
                      std::move(bps));
}

double smoothstep(double t) noexcept {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double t2 = t * t;
  return t2 * t2 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
}

double smoothstep_derivative(double t) noexcept {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double s = t * (1.0 - t);
  return 140.0 * s * s * s;
}

double cutoff(double y) noexcept { return 1.0 - smoothstep(std::abs(y) - 1.0); }

double cutoff_derivative(double y) noexcept {
  const double sign = y < 0.0 ? -1.0 : 1.0;
  return -sign * smoothstep_derivative(std::abs(y) - 1.0);
}

TestFunction gaussian_bump(double center, double width) {
  if (!(width > 0.0)) throw DomainError("gaussian_bump: width must be positive");
  // exp(-t^2) and its derivative drop below 1e-15 for |t| > 6.
  return TestFunction(
      "gaussian_bump",
      [=](double x) {
        const double t = (x - center) / width;
        return std::exp(-t * t);
      },
      [=](double x) {
        const double t = (x - center) / width;
        return -2.0 * t / width * std::exp(-t * t);
      },
      {center - 6.0 * width, center + 6.0 * width}, {center});
}

TestFunction smoothstep_indicator(double lo, double hi, double ramp) {
  if (!(hi >= lo) || !(ramp > 0.0)) throw DomainError("smoothstep_indicator: need lo <= hi and ramp > 0");
  return TestFunction(
      "smoothstep_indicator",
      [=](double x) {
        if (x < lo) return smoothstep((x - lo + ramp) / ramp);
        if (x > hi) return 1.0 - smoothstep((x - hi) / ramp);
        return 1.0;
      },
      [=](double x) {
        if (x < lo) return smoothstep_derivative((x - lo + ramp) / ramp) / ramp;
        if (x > hi) return -smoothstep_derivative((x - hi) / ramp) / ramp;
        return 0.0;
      },
      {lo - ramp, hi + ramp}, {lo - ramp, lo, hi, hi + ramp});
}

TestFunction cubic_spline(double center, double width, double anchor) {
  if (!(width > 0.0)) throw DomainError("cubic_spline: width must be positive");
  const double offset = bspline((anchor - center) / width);
  return TestFunction(
      "cubic_spline", [=](double x) { return bspline((x - center) / width) - offset; },
      [=](double x) { return bspline_derivative((x - center) / width) / width; },
      {center - 2.0 * width, center + 2.0 * width},
      {center - 2.0 * width, center - width, center, center + width, center + 2.0 * width});
}

TestFunction arctan_box(double half_width, double smoothing, double center) {
  if (!(half_width > 0.0) || !(smoothing > 0.0)) {
    throw DomainError("arctan_box: half_width and smoothing must be positive");
  }
  const double l = half_width;
  const double s = smoothing;
  return TestFunction(
      "arctan_box",
      [=](double x) { return (std::atan((x - center + l) / s) - std::atan((x - center - l) / s)) / kPi; },
      [=](double x) {
        const double a = (x - center + l) / s;
        const double b = (x - center - l) / s;
        return (1.0 / (1.0 + a * a) - 1.0 / (1.0 + b * b)) / (kPi * s);
      },
      {-HUGE_VAL, HUGE_VAL}, {center - l, center, center + l});
}

TestFunction identity_function() {
  return TestFunction("identity", [](double x) { return x; }, [](double) { return 1.0; }, {-HUGE_VAL, HUGE_VAL});
}

TestFunction constant_function(double value) {
  return TestFunction("constant", [=](double) { return value; }, [](double) { return 0.0; }, {0.0, 0.0});
}

TestFunction monomial(int degree) {
  if (degree < 0) throw DomainError("monomial: degree must be nonnegative");
  return TestFunction(
      "monomial", [=](double x) { return std::pow(x, degree); },
      [=](double x) { return degree == 0 ? 0.0 : degree * std::pow(x, degree - 1); },
      {-HUGE_VAL, HUGE_VAL});
}

std::vector<std::string> test_function_names() {
  return {"gaussian_bump", "smoothstep_indicator", "cubic_spline", "arctan_box", "identity",
          "constant",      "monomial",             "homogenization_phi"};
}

TestFunction make_test_function(std::string_view name, const std::map<std::string, double>& p) {
  if (name == "gaussian_bump") {
    check_params(p, {"center", "width"}, name);
    return gaussian_bump(param(p, "center", 0.0), param(p, "width", 0.5));
  }
  if (name == "smoothstep_indicator") {
    check_params(p, {"lo", "hi", "ramp"}, name);
    return smoothstep_indicator(param(p, "lo", -0.5), param(p, "hi", 0.5), param(p, "ramp", 0.25));
  }
  if (name == "cubic_spline") {
    check_params(p, {"center", "width", "anchor"}, name);
    return cubic_spline(param(p, "center", 0.0), param(p, "width", 0.8), param(p, "anchor", 0.3));
  }
  if (name == "arctan_box") {
    check_params(p, {"half_width", "smoothing", "center"}, name);
    return arctan_box(param(p, "half_width", 0.5), param(p, "smoothing", 0.1), param(p, "center", 0.0));
  }
  if (name == "identity") {
    check_params(p, {}, name);
    return identity_function();
  }
  if (name == "constant") {
    check_params(p, {"value"}, name);
    return constant_function(param(p, "value", 1.0));
  }
  if (name == "monomial") {
    check_params(p, {"degree"}, name);
    return monomial(static_cast<int>(param(p, "degree", 2.0)));
  }
  if (name == "homogenization_phi") {
    check_params(p, {"gamma", "t1", "eps1", "n"}, name);
    const double n = param(p, "n", 300.0);
    return build_homogenization_observable(param(p, "gamma", 0.0), param(p, "t1", 0.5 * std::pow(n, -0.2)),
                                           param(p, "eps1", 0.05), static_cast<std::size_t>(n))
        .phi;
  }
  throw ConfigError("unknown test function '" + std::string(name) + "'");
}

double poisson_kernel(double gamma_i, double x, double t1) {
  const double rho = semicircle::density(gamma_i);
  const double eta = t1 * rho;
  const double d = x - gamma_i;
  return (1.0 / rho) * eta / (d * d + eta * eta);
}

namespace {

// Cubic Hermite table of Phi on one transition band of the cutoff.
struct HermiteTable {
  double a = 0.0;
  double h = 1.0;
  std::vector<double> value;
  std::vector<double> slope;

  double eval(double x) const {
    const double s = (x - a) / h;
    auto k = static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(value.size() - 2)));
    k = std::min(k, value.size() - 2);
    const double t = s - static_cast<double>(k);
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * value[k] + (t3 - 2 * t2 + t) * h * slope[k] + (-2 * t3 + 3 * t2) * value[k + 1] +
           (t3 - t2) * h * slope[k + 1];
  }
};

}  // namespace

HomogenizationObservable build_homogenization_observable(double gamma_i, double t1, double eps1,
                                                         std::size_t n) {
  if (n < 2) throw DomainError("homogenization observable: n must be at least 2");
  if (!(eps1 > 0.0 && eps1 <= 0.1)) throw DomainError("homogenization observable: eps1 must lie in (0, 0.1]");
  if (!(t1 > 0.0)) throw DomainError("homogenization observable: t1 must be positive");
  const double window = t1 * std::pow(static_cast<double>(n), eps1);
  if (window >= 1.0) throw DomainError("homogenization observable: t1 N^eps1 must be below 1");
  if (!(gamma_i - 2.0 * window > -2.0 && gamma_i + 2.0 * window < 2.0)) {
    throw DomainError("homogenization observable: cutoff window leaves the spectrum");
  }

  HomogenizationObservable obs;
  obs.center = gamma_i;
  obs.t1 = t1;
  obs.eps1 = eps1;
  obs.n = n;
  obs.density = semicircle::density(gamma_i);
  obs.eta = t1 * obs.density;
  obs.window = window;

  const double g = gamma_i;
  const double rho = obs.density;
  const double eta = obs.eta;
  const double w = window;
  auto raw_kernel = [=](double x) {
    const double d = x - g;
    return cutoff(d / w) * eta / (d * d + eta * eta);
  };

  // Mass of the plateau in closed form plus the two bands by quadrature.
  const double plateau = 2.0 * std::atan(w / eta);
  const double right_band = quad::integrate(raw_kernel, g + w, g + 2.0 * w).value;
  const double mass = plateau + 2.0 * right_band;
  const double k = 1.0 / mass;
  obs.normalization = k;
  const double scale = k / rho;  // Phi' = scale * raw_kernel

  constexpr std::size_t kCells = 512;
  auto build_band = [&](double a, double start_value) {
    auto table = std::make_shared<HermiteTable>();
    table->a = a;
    table->h = w / kCells;
    table->value.resize(kCells + 1);
    table->slope.resize(kCells + 1);
    const auto& gl = quad::gauss_legendre(10);
    double acc = start_value;
    for (std::size_t c = 0; c <= kCells; ++c) {
      const double x = a + table->h * static_cast<double>(c);
      if (c > 0) {
        const double lo = x - table->h;
        double cell = 0.0;
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
          cell += gl.weights[q] * raw_kernel(lo + 0.5 * table->h * (gl.nodes[q] + 1.0));
        }
        acc += 0.5 * table->h * cell * scale;
      }
      table->value[c] = acc;
      table->slope[c] = scale * raw_kernel(x);
    }
    return table;
  };

  const auto left = build_band(g - 2.0 * w, 0.0);
  const double plateau_start = left->value.back();
  const double atan_left = std::atan(-w / eta);
  const double plateau_end = plateau_start + scale * (std::atan(w / eta) - atan_left);
  const auto right = build_band(g + w, plateau_end);
  const double total = 1.0 / rho;

  auto value = [=](double y) {
    if (y <= g - 2.0 * w) return 0.0;
    if (y < g - w) return left->eval(y);
    if (y <= g + w) return plateau_start + scale * (std::atan((y - g) / eta) - atan_left);
    if (y < g + 2.0 * w) return right->eval(y);
    return total;
  };
  auto derivative = [=](double y) { return scale * raw_kernel(y); };

  std::vector<double> bps = {g - 2.0 * w, g - w, g, g + w, g + 2.0 * w};
  for (double m : {-8.0, -3.0, -1.0, 1.0, 3.0, 8.0}) {
    if (std::abs(m * eta) < w) bps.push_back(g + m * eta);
  }
  obs.phi = TestFunction("homogenization_phi", value, derivative, {g - 2.0 * w, g + 2.0 * w}, std::move(bps));
  return obs;
}

std::size_t counting_function(const Spectrum& s, double e) {
  return static_cast<std::size_t>(std::upper_bound(s.values.begin(), s.values.end(), e) - s.values.begin());
}

double eigenvalue_z_score(const Spectrum& s, std::size_t i, double kappa) {
  const std::size_t n = s.size();
  const double nd = static_cast<double>(n);
  const double id = static_cast<double>(i);
  if (n < 2 || id < kappa * nd || id > (1.0 - kappa) * nd || i < 1 || i > n) {
    throw DomainError("eigenvalue_z_score: index outside the bulk window");
  }
  const double gamma = semicircle::classical_location(i, n);
  return nd * (s(i) - gamma) / std::sqrt(std::log(nd) / (1.0 - 0.25 * gamma * gamma));
}

double counting_z_score(const Spectrum& s, double e, double kappa) {
  if (!(std::abs(e) < 2.0 - kappa)) throw DomainError("counting_z_score: energy outside the bulk");
  const double nd = static_cast<double>(s.size());
  if (s.size() < 2) throw DomainError("counting_z_score: spectrum too small");
  const double centered = static_cast<double>(counting_function(s, e)) - nd * semicircle::cdf(e);
  return centered * kPi / std::sqrt(std::log(nd));
}

double linear_statistic(const Spectrum& s, const TestFunction& f) {
  quad::CompensatedSum sum;
  for (double lambda : s.values) sum.add(f(lambda));
  return sum.value();
}

double mesoscopic_statistic(const Spectrum& s, const TestFunction& f, double e, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("mesoscopic_statistic: alpha must lie in (0, 1)");
  if (!(std::abs(e) < 2.0)) throw DomainError("mesoscopic_statistic: energy outside (-2, 2)");
  const double scale = std::pow(static_cast<double>(s.size()), alpha);
  quad::CompensatedSum sum;
  for (double lambda : s.values) sum.add(f(scale * (lambda - e)));
  return sum.value();
}

double classical_phi_sum(const HomogenizationObservable& phi) {
  const semicircle::ClassicalLocationTable gamma(phi.n);
  quad::CompensatedSum sum;
  for (double g : gamma.values()) sum.add(phi(g));
  return sum.value();
}

double zeta_statistic(const std::vector<double>& values, const HomogenizationObservable& phi,
                      double classical_sum) {
  if (values.size() != phi.n) throw DomainError("zeta_statistic: dimension mismatch");
  quad::CompensatedSum sum;
  for (double v : values) sum.add(phi(v));
  sum.add(-classical_sum);
  return sum.value();
}

double zeta_statistic(const Spectrum& s, const HomogenizationObservable& phi) {
  return zeta_statistic(s.values, phi, classical_phi_sum(phi));
}

double partial_linear_statistic(const Spectrum& s, const TestFunction& f, double u) {
  quad::CompensatedSum sum;
  for (double lambda : s.values) {
    if (lambda <= u) sum.add(f(lambda));
  }
  return sum.value();
}

double ranked_partial_statistic(const Spectrum& s, const TestFunction& f, std::size_t k, double kappa) {
  const double nd = static_cast<double>(s.size());
  const double kd = static_cast<double>(k);
  if (k > s.size() || kd < kappa * nd || kd > (1.0 - kappa) * nd) {
    throw DomainError("ranked_partial_statistic: k outside the bulk window");
  }
  quad::CompensatedSum sum;
  for (std::size_t i = 0; i < k; ++i) sum.add(f(s.values[i]));
  return sum.value();
}

}  // namespace rmt
