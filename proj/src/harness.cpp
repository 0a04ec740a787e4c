#include "rmt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "rmt/dbm.hpp"
#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"
#include "rmt/mesostat.hpp"
#include "rmt/quadrature.hpp"
#include "rmt/random.hpp"
#include "rmt/semicircle.hpp"
#include "rmt/spectra.hpp"
#include "rmt/statistics.hpp"
#include "rmt/theory.hpp"

namespace rmt {

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<std::pair<ExperimentKind, std::string>>& kind_names() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names = {
      {ExperimentKind::single_eigenvalue_clt, "single_eigenvalue_clt"},
      {ExperimentKind::counting_clt, "counting_clt"},
      {ExperimentKind::mean_expansion, "mean_expansion"},
      {ExperimentKind::variance_shift, "variance_shift"},
      {ExperimentKind::linear_statistic_variance, "linear_statistic_variance"},
      {ExperimentKind::mesoscopic_clt, "mesoscopic_clt"},
      {ExperimentKind::beta_clt, "beta_clt"},
      {ExperimentKind::dbm_homogenization, "dbm_homogenization"},
      {ExperimentKind::bpz_partial, "bpz_partial"},
  };
  return names;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kind_names()) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kind_names()) {
    if (n == name) return k;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// Config file

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(out)) {
    throw ConfigError("config: '" + key + "' expects a finite number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' is out of range");
  }
}

std::map<std::string, double> parse_params(const std::string& key, const std::string& v) {
  std::map<std::string, double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("config: '" + key + "' expects name:value pairs");
    out[trim(item.substr(0, colon))] = parse_double(key, trim(item.substr(colon + 1)));
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;  // nullopt: unset
};

template <class T>
std::optional<std::string> opt_num(const std::optional<T>& v) {
  if (!v) return std::nullopt;
  if constexpr (std::is_floating_point_v<T>) return format_double(*v);
  else return std::to_string(*v);
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  using S = std::string;
  auto str = [](S key, S C::*m) {
    return Field{key, [m](C& c, const S&, const S& v) { c.*m = v; },
                 [m](const C& c) -> std::optional<S> { return c.*m; }};
  };
  auto num = [](S key, double C::*m) {
    return Field{key, [m](C& c, const S& k, const S& v) { c.*m = parse_double(k, v); },
                 [m](const C& c) -> std::optional<S> { return format_double(c.*m); }};
  };
  auto count = [](S key, std::size_t C::*m) {
    return Field{key, [m](C& c, const S& k, const S& v) { c.*m = static_cast<std::size_t>(parse_unsigned(k, v)); },
                 [m](const C& c) -> std::optional<S> { return std::to_string(c.*m); }};
  };
  auto optnum = [](S key, std::optional<double> C::*m) {
    return Field{key, [m](C& c, const S& k, const S& v) { c.*m = parse_double(k, v); },
                 [m](const C& c) { return opt_num(c.*m); }};
  };

  static const std::vector<Field> table = {
      Field{"kind", [](C& c, const S&, const S& v) { c.kind = experiment_kind_from_string(v); },
            [](const C& c) -> std::optional<S> { return to_string(c.kind); }},
      str("ensemble", &C::ensemble),
      str("offdiag_law", &C::offdiag_law),
      str("diag_law", &C::diag_law),
      num("beta", &C::beta),
      str("sampler", &C::sampler),
      str("reference_ensemble", &C::reference_ensemble),
      count("n", &C::n),
      count("trials", &C::trials),
      Field{"seed", [](C& c, const S& k, const S& v) { c.seed = parse_unsigned(k, v); },
            [](const C& c) { return opt_num(c.seed); }},
      Field{"index", [](C& c, const S& k, const S& v) { c.index = static_cast<std::size_t>(parse_unsigned(k, v)); },
            [](const C& c) { return opt_num(c.index); }},
      optnum("gamma", &C::gamma),
      num("energy", &C::energy),
      num("kappa", &C::kappa),
      str("function", &C::function),
      Field{"function_params", [](C& c, const S& k, const S& v) { c.function_params = parse_params(k, v); },
            [](const C& c) -> std::optional<S> {
              S out;
              for (const auto& [name, value] : c.function_params) {
                out += (out.empty() ? "" : ", ") + name + ":" + format_double(value);
              }
              return out;
            }},
      num("alpha", &C::alpha),
      num("u", &C::u),
      num("omega", &C::omega),
      num("tau0", &C::tau0),
      num("eps1", &C::eps1),
      num("dt", &C::dt),
      count("barycenter_n", &C::barycenter_n),
      count("barycenter_trials", &C::barycenter_trials),
      num("barycenter_time", &C::barycenter_time),
      optnum("ks_tolerance", &C::ks_tolerance),
      optnum("relative_tolerance", &C::relative_tolerance),
      num("se_multiplier", &C::se_multiplier),
      num("correlation_threshold", &C::correlation_threshold),
      num("residual_ratio_threshold", &C::residual_ratio_threshold),
      num("failure_limit", &C::failure_limit),
  };
  return table;
}

bool is_wigner_name(const std::string& name) {
  return name == "goe" || name == "rademacher" || name == "uniform" || name == "skewed" || name == "wigner";
}

bool uses_index(ExperimentKind k) {
  return k == ExperimentKind::single_eigenvalue_clt || k == ExperimentKind::mean_expansion ||
         k == ExperimentKind::variance_shift || k == ExperimentKind::beta_clt ||
         k == ExperimentKind::dbm_homogenization;
}

}  // namespace

std::size_t resolve_index(const ExperimentConfig& c) {
  if (c.index) return *c.index;
  if (c.gamma) {
    if (!(std::abs(*c.gamma) < 2.0)) throw ConfigError("config: gamma must lie in (-2, 2)");
    const double nd = static_cast<double>(c.n);
    const auto i = static_cast<std::size_t>(std::llround(nd * semicircle::cdf(*c.gamma)));
    return std::clamp<std::size_t>(i, 1, c.n);
  }
  return c.n / 2;
}

void validate_config(const ExperimentConfig& c) {
  if (c.trials == 0) throw ConfigError("config: trials must be positive");
  if (c.n < 2) throw ConfigError("config: n must be at least 2");
  if (!(c.kappa > 0.0 && c.kappa < 0.5)) throw ConfigError("config: kappa must lie in (0, 1/2)");
  if (!(c.beta >= 1.0)) throw ConfigError("config: beta must be at least 1");
  if (!(c.failure_limit >= 0.0 && c.failure_limit < 1.0)) throw ConfigError("config: failure_limit must lie in [0, 1)");

  auto check_ensemble = [&](const std::string& name, const char* what) {
    if (name == "beta_hermite") return;
    if (!is_wigner_name(name)) throw ConfigError(std::string("config: unknown ") + what + " '" + name + "'");
  };
  check_ensemble(c.ensemble, "ensemble");
  if (!c.reference_ensemble.empty()) check_ensemble(c.reference_ensemble, "reference_ensemble");
  if (c.ensemble == "wigner" || c.reference_ensemble == "wigner") {
    if (entry_law(c.offdiag_law).cumulants.variance != 1.0) {
      throw ConfigError("config: offdiag_law must have variance 1");
    }
    entry_law(c.diag_law);
  }
  if (c.sampler != "dense" && c.sampler != "tridiagonal") throw ConfigError("config: sampler must be dense or tridiagonal");
  if (c.sampler == "tridiagonal" && c.ensemble != "goe" && c.ensemble != "beta_hermite") {
    throw ConfigError("config: the tridiagonal sampler exists only for goe and beta_hermite");
  }
  if (c.ensemble == "beta_hermite" && c.kind != ExperimentKind::beta_clt &&
      c.kind != ExperimentKind::single_eigenvalue_clt && c.kind != ExperimentKind::counting_clt) {
    throw ConfigError("config: beta_hermite is supported for beta_clt and the CLT experiments only");
  }

  if (uses_index(c.kind)) {
    if (c.index && c.gamma) throw ConfigError("config: give index or gamma, not both");
    const std::size_t i = resolve_index(c);
    const double nd = static_cast<double>(c.n);
    const double id = static_cast<double>(i);
    if (i < 1 || i > c.n || id < c.kappa * nd || id > (1.0 - c.kappa) * nd) {
      throw ConfigError("config: index " + std::to_string(i) + " lies outside the bulk [kappa N, (1 - kappa) N]");
    }
  }

  switch (c.kind) {
    case ExperimentKind::single_eigenvalue_clt:
    case ExperimentKind::counting_clt:
      if (!(std::abs(c.energy) < 2.0 - c.kappa)) throw ConfigError("config: energy outside the bulk");
      break;
    case ExperimentKind::variance_shift:
    case ExperimentKind::mean_expansion:
      break;
    case ExperimentKind::linear_statistic_variance:
    case ExperimentKind::bpz_partial:
      make_test_function(c.function, c.function_params);
      break;
    case ExperimentKind::mesoscopic_clt:
      make_test_function(c.function, c.function_params);
      if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("config: alpha must lie in (0, 1)");
      if (!(std::abs(c.energy) < 2.0 - c.kappa)) throw ConfigError("config: energy outside the bulk");
      break;
    case ExperimentKind::beta_clt:
      if (c.ensemble != "beta_hermite") throw ConfigError("config: beta_clt needs ensemble = beta_hermite");
      if (!c.reference_ensemble.empty() && c.reference_ensemble != "goe") {
        throw ConfigError("config: beta_clt compares only against the dense goe sampler");
      }
      break;
    case ExperimentKind::dbm_homogenization:
      if (!is_wigner_name(c.ensemble)) throw ConfigError("config: dbm_homogenization needs a Wigner base ensemble");
      if (!(c.tau0 > 0.0 && c.tau0 < 1.0)) throw ConfigError("config: tau0 must lie in (0, 1)");
      if (!(c.eps1 > 0.0 && c.eps1 <= 0.1)) throw ConfigError("config: eps1 must lie in (0, 0.1]");
      if (!(c.dt >= 0.0)) throw ConfigError("config: dt must be non-negative");
      if (c.barycenter_trials > 0 && (c.barycenter_n < 2 || !(c.barycenter_time > 0.0))) {
        throw ConfigError("config: barycenter run needs barycenter_n >= 2 and barycenter_time > 0");
      }
      break;
  }
  if (c.kind == ExperimentKind::bpz_partial) {
    const TestFunction f = make_test_function(c.function, c.function_params);
    if (!(std::abs(c.u) < 2.0 - c.kappa)) throw ConfigError("config: u outside the bulk");
    if (std::abs(f(c.u)) > 1e-12) throw ConfigError("config: the partial statistic needs f(u) = 0");
  }
  if ((c.kind == ExperimentKind::mean_expansion || c.kind == ExperimentKind::variance_shift) &&
      c.reference_ensemble == "beta_hermite") {
    throw ConfigError("config: reference_ensemble must be a Wigner ensemble");
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (seen.count(key)) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    seen[key] = lineno;
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->set(c, key, value);
  }
  if (!seen.count("kind")) throw ConfigError("config: missing key 'kind'");
  if (!seen.count("n")) throw ConfigError("config: missing key 'n'");
  if (!seen.count("trials")) throw ConfigError("config: missing key 'trials'");
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  for (const Field& f : fields()) {
    const auto v = f.get(c);
    if (v) out += f.key + " = " + *v + "\n";
  }
  return out;
}

std::uint64_t resolve_seed(const ExperimentConfig& c) {
  if (c.seed) return *c.seed;
  if (const char* env = std::getenv("RMT_SEED")) {
    const std::string v = trim(env);
    if (!v.empty()) return parse_unsigned("RMT_SEED", v);
  }
  throw ConfigError("config: no seed given and RMT_SEED is unset");
}

std::string config_hash(const ExperimentConfig& config, std::uint64_t seed) {
  ExperimentConfig c = config;
  c.seed = seed;
  const std::string text = serialize_config(c);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RMT_THREADS")) {
    const std::string v = trim(env);
    if (!v.empty() && v.find_first_not_of("0123456789") == std::string::npos) {
      const auto w = std::stoull(v);
      if (w > 0) return static_cast<std::size_t>(w);
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= count) return;
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

const StatisticResult* ExperimentReport::find(const std::string& name) const {
  for (const auto& s : statistics) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

struct Model {
  std::string name;
  bool beta_family = false;
  bool tridiagonal = false;
  double beta = 1.0;
  WignerSpec spec;

  double s4() const { return beta_family ? 0.0 : spec.s(4); }
  double a2() const { return beta_family ? 1.0 : spec.a(2); }

  Spectrum sample(Rng rng) const {
    if (beta_family || tridiagonal) return eigen_tridiagonal(sample_beta_hermite({spec.n, beta}, rng));
    return eigen_symmetric(sample_wigner(spec, rng));
  }
};

Model make_model(const std::string& name, const ExperimentConfig& c, bool allow_tridiagonal) {
  Model m;
  m.name = name;
  m.spec.n = c.n;
  if (name == "goe") {
    m.spec = goe_spec(c.n);
    m.tridiagonal = allow_tridiagonal && c.sampler == "tridiagonal";
  } else if (name == "rademacher") {
    m.spec = rademacher_spec(c.n);
  } else if (name == "uniform") {
    m.spec = {c.n, entry_law("uniform"), entry_law("gaussian2")};
  } else if (name == "skewed") {
    m.spec = {c.n, entry_law("skewed_two_point"), entry_law("gaussian2")};
  } else if (name == "wigner") {
    m.spec = {c.n, entry_law(c.offdiag_law), entry_law(c.diag_law)};
  } else if (name == "beta_hermite") {
    m.spec = goe_spec(c.n);
    m.beta_family = true;
    m.beta = c.beta;
  } else {
    throw ConfigError("unknown ensemble '" + name + "'");
  }
  return m;
}

// Per-trial output: a row of the raw table plus optional pooled samples.
struct TrialOutput {
  std::vector<double> row;
  std::vector<double> pooled_a;
  std::vector<double> pooled_b;
};

struct Outcome {
  bool ok = false;
  std::string error;
  TrialOutput out;
};

double tolerance_or(const std::optional<double>& v, double fallback) { return v ? *v : fallback; }

// Shortest form for human-readable criterion text.
std::string readable(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

StatisticResult se_check(std::string name, double estimate, double se, double theory, double k) {
  StatisticResult r;
  r.name = std::move(name);
  r.estimate = estimate;
  r.standard_error = se;
  r.theory = theory;
  r.z_discrepancy = se > 0.0 ? (estimate - theory) / se : (estimate == theory ? 0.0 : INFINITY);
  r.criterion = "|estimate - theory| <= " + readable(k) + " SE";
  r.passed = std::abs(estimate - theory) <= k * se;
  return r;
}

StatisticResult relative_check(std::string name, double estimate, double se, double theory, double tol) {
  StatisticResult r;
  r.name = std::move(name);
  r.estimate = estimate;
  r.standard_error = se;
  r.theory = theory;
  r.z_discrepancy = se > 0.0 ? (estimate - theory) / se : 0.0;
  r.criterion = "|estimate / theory - 1| <= " + readable(tol);
  r.passed = std::abs(estimate / theory - 1.0) <= tol;
  return r;
}

StatisticResult ks_check(std::string name, const KsResult& ks, double tol) {
  StatisticResult r;
  r.name = std::move(name);
  r.estimate = ks.distance;
  r.ks_distance = ks.distance;
  r.ks_p_value = ks.p_value;
  r.criterion = "KS distance <= " + readable(tol);
  r.passed = ks.distance <= tol;
  return r;
}

StatisticResult diagnostic(std::string name, double estimate, double se = 0.0,
                           std::optional<double> theory = std::nullopt) {
  StatisticResult r;
  r.name = std::move(name);
  r.estimate = estimate;
  r.standard_error = se;
  r.theory = theory;
  if (theory && se > 0.0) r.z_discrepancy = (estimate - *theory) / se;
  return r;
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t c) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

// Standard deviation with a jackknife SE derived from the variance SE.
std::pair<double, double> std_with_se(const std::vector<double>& v) {
  const MeanVariance mv = estimate_mean_var(v);
  const double sd = std::sqrt(mv.variance);
  return {sd, sd > 0.0 ? mv.variance_se / (2.0 * sd) : 0.0};
}

struct Plan {
  std::vector<std::string> columns;
  std::function<TrialOutput(std::size_t trial, Rng rng)> trial;
  std::function<std::vector<StatisticResult>(const std::vector<TrialOutput>&)> reduce;
};

Plan clt_plan(const ExperimentConfig& c, bool eigenvalue_stats) {
  const Model model = make_model(c.ensemble, c, true);
  const std::size_t i = resolve_index(c);
  const std::size_t n = c.n;
  const double nd = static_cast<double>(n);
  const double gamma = semicircle::classical_location(i, n);
  const double shift = single_eigenvalue_mean(gamma, model.s4(), model.a2(), c.kappa) / nd;
  const Normalization norm = gustavsson_scaling(gamma, n, model.beta,
                                                model.beta_family ? EnsembleFamily::beta : EnsembleFamily::wigner);
  const double count_center = nd * semicircle::cdf(c.energy) + counting_mean_correction(c.energy, model.s4(), model.a2());
  // Counting fluctuations scale as sqrt(2 log N / beta) / pi.
  const double count_scale = std::sqrt(std::log(nd) / model.beta) / kPi;
  const double energy = c.energy;
  const double ks_tol = tolerance_or(c.ks_tolerance, 0.06);
  const double rel_tol = tolerance_or(c.relative_tolerance, 0.15);

  Plan p;
  p.columns = {"trial", "lambda_i", "counting", "z_eigenvalue", "z_counting", "z_counting_jittered"};
  p.trial = [=](std::size_t trial, Rng rng) {
    const Spectrum s = model.sample(rng.split(1));
    const double lambda = s(i);
    const double count = static_cast<double>(counting_function(s, energy));
    // Continuity correction: spread the integer count uniformly over its unit cell.
    const double jitter = rng.split(2).uniform() - 0.5;
    return TrialOutput{{static_cast<double>(trial), lambda, count, (lambda - norm.center - shift) / norm.scale,
                        (count - count_center) / count_scale, (count + jitter - count_center) / count_scale},
                       {},
                       {}};
  };
  p.reduce = [=](const std::vector<TrialOutput>& outs) {
    std::vector<std::vector<double>> rows;
    for (const auto& o : outs) rows.push_back(o.row);
    std::vector<StatisticResult> stats;
    if (eigenvalue_stats) {
      const auto z = column(rows, 3);
      stats.push_back(ks_check("eigenvalue_ks", ks_normal(z), ks_tol));
      const auto [sd, sd_se] = std_with_se(z);
      stats.push_back(relative_check("eigenvalue_std", sd, sd_se, 1.0, rel_tol));
      const MeanVariance mv = estimate_mean_var(z);
      stats.push_back(diagnostic("eigenvalue_mean", mv.mean, mv.mean_se, 0.0));
    }
    const auto zc = column(rows, 4);
    stats.push_back(ks_check("counting_ks", ks_normal(zc), ks_tol));
    const auto [sdc, sdc_se] = std_with_se(zc);
    stats.push_back(diagnostic("counting_std", sdc, sdc_se, 1.0));
    const KsResult jittered = ks_normal(column(rows, 5));
    StatisticResult jd = diagnostic("counting_ks_jittered", jittered.distance);
    jd.ks_distance = jittered.distance;
    jd.ks_p_value = jittered.p_value;
    stats.push_back(jd);
    return stats;
  };
  return p;
}

Plan mean_expansion_plan(const ExperimentConfig& c) {
  const Model model = make_model(c.ensemble, c, false);
  const bool with_ref = !c.reference_ensemble.empty();
  const Model ref = with_ref ? make_model(c.reference_ensemble, c, false) : model;
  const std::size_t i = resolve_index(c);
  const double nd = static_cast<double>(c.n);
  const double gamma = semicircle::classical_location(i, c.n);
  const double theory = single_eigenvalue_mean(gamma, model.s4(), model.a2(), c.kappa);
  const double theory_ref = single_eigenvalue_mean(gamma, ref.s4(), ref.a2(), c.kappa);
  const double k = c.se_multiplier;

  Plan p;
  p.columns = {"trial", "lambda_i", "n_shift"};
  if (with_ref) {
    p.columns.push_back("reference_lambda_i");
    p.columns.push_back("reference_n_shift");
  }
  p.trial = [=](std::size_t trial, Rng rng) {
    const double lambda = model.sample(rng.split(1))(i);
    TrialOutput o{{static_cast<double>(trial), lambda, nd * (lambda - gamma)}, {}, {}};
    if (with_ref) {
      const double mu = ref.sample(rng.split(2))(i);
      o.row.push_back(mu);
      o.row.push_back(nd * (mu - gamma));
    }
    return o;
  };
  p.reduce = [=](const std::vector<TrialOutput>& outs) {
    std::vector<std::vector<double>> rows;
    for (const auto& o : outs) rows.push_back(o.row);
    std::vector<StatisticResult> stats;
    const MeanVariance a = estimate_mean_var(column(rows, 2));
    stats.push_back(se_check("n_mean_shift", a.mean, a.mean_se, theory, k));
    if (with_ref) {
      const MeanVariance b = estimate_mean_var(column(rows, 4));
      stats.push_back(se_check("reference_n_mean_shift", b.mean, b.mean_se, theory_ref, k));
      stats.push_back(se_check("n_mean_shift_difference", a.mean - b.mean, std::hypot(a.mean_se, b.mean_se),
                               theory - theory_ref, k));
    }
    return stats;
  };
  return p;
}

Plan variance_shift_plan(const ExperimentConfig& c) {
  const Model model = make_model(c.ensemble, c, false);
  const Model ref = make_model(c.reference_ensemble.empty() ? std::string("goe") : c.reference_ensemble, c, false);
  const std::size_t i = resolve_index(c);
  const double gamma = semicircle::classical_location(i, c.n);
  const double theory = single_eigenvalue_variance_shift(gamma, model.s4(), model.a2(), c.n, c.kappa) -
                        single_eigenvalue_variance_shift(gamma, ref.s4(), ref.a2(), c.n, c.kappa);
  const double alternative = indicator_variance_shift(gamma, model.s4(), model.a2(), c.n, c.kappa) -
                             indicator_variance_shift(gamma, ref.s4(), ref.a2(), c.n, c.kappa);
  const double k = c.se_multiplier;

  Plan p;
  p.columns = {"trial", "lambda_i", "reference_lambda_i"};
  p.trial = [=](std::size_t trial, Rng rng) {
    return TrialOutput{{static_cast<double>(trial), model.sample(rng.split(1))(i), ref.sample(rng.split(2))(i)}, {}, {}};
  };
  p.reduce = [=](const std::vector<TrialOutput>& outs) {
    std::vector<std::vector<double>> rows;
    for (const auto& o : outs) rows.push_back(o.row);
    const MeanVariance a = estimate_mean_var(column(rows, 1));
    const MeanVariance b = estimate_mean_var(column(rows, 2));
    std::vector<StatisticResult> stats;
    stats.push_back(diagnostic("variance", a.variance, a.variance_se));
    stats.push_back(diagnostic("reference_variance", b.variance, b.variance_se));
    const double diff_se = std::hypot(a.variance_se, b.variance_se);
    stats.push_back(se_check("variance_difference", a.variance - b.variance, diff_se, theory, k));
    stats.push_back(diagnostic("variance_difference_vs_indicator_functional", a.variance - b.variance, diff_se,
                               alternative));
    return stats;
  };
  return p;
}

Plan linear_statistic_plan(const ExperimentConfig& c) {
  const Model model = make_model(c.ensemble, c, false);
  const TestFunction f = make_test_function(c.function, c.function_params);
  const VarianceBreakdown vb = variance_functional(f, model.s4(), model.a2());
  const MeanBreakdown mb = mean_expansion(f, model.s4(), model.a2(), c.n);
  const double rel_tol = tolerance_or(c.relative_tolerance, 0.10);
  const double k = c.se_multiplier;

  Plan p;
  p.columns = {"trial", "linear_statistic", "centered"};
  p.trial = [=](std::size_t trial, Rng rng) {
    const double v = linear_statistic(model.sample(rng.split(1)), f);
    return TrialOutput{{static_cast<double>(trial), v, v - mb.leading}, {}, {}};
  };
  p.reduce = [=](const std::vector<TrialOutput>& outs) {
    std::vector<std::vector<double>> rows;
    for (const auto& o : outs) rows.push_back(o.row);
    const MeanVariance mv = estimate_mean_var(column(rows, 2));
    std::vector<StatisticResult> stats;
    stats.push_back(relative_check("variance", mv.variance, mv.variance_se, vb.total, rel_tol));
    stats.push_back(se_check("mean_correction", mv.mean, mv.mean_se, mb.corrections(), k));
    stats.push_back(diagnostic("variance_s4_term", vb.s4_term));
    stats.push_back(diagnostic("variance_a2_term", vb.a2_term));
    return stats;
  };
  return p;
}

Plan mesoscopic_plan(const ExperimentConfig& c) {
  const Model model = make_model(c.ensemble, c, true);
  const TestFunction f = make_test_function(c.function, c.function_params);
  const double nd = static_cast<double>(c.n);
  const double zoom = std::pow(nd, c.alpha);
  const double energy = c.energy;
  const double alpha = c.alpha;
  // Leading mean N int f(N^alpha (x - E)) rho_sc(x) dx.
  std::vector<double> bps;
  for (double b : f.breakpoints()) bps.push_back(energy + b / zoom);
  const double lo = -2.0, hi = 2.0;
  const auto mean_est = quad::integrate(
      [&](double x) { return f(zoom * (x - energy)) * semicircle::density(x); }, lo, hi, bps);
  const double mean = nd * mean_est.value;
  const double variance = mesoscopic_variance(f, 1.0 / model.beta);
  const double ks_tol = tolerance_or(c.ks_tolerance, 0.06);
  const double rel_tol = tolerance_or(c.relative_tolerance, 0.15);

  Plan p;
  p.columns = {"trial", "statistic", "z"};
  p.trial = [=](std::size_t trial, Rng rng) {
    const double v = mesoscopic_statistic(model.sample(rng.split(1)), f, energy, alpha);
    return TrialOutput{{static_cast<double>(trial), v, (v - mean) / std::sqrt(variance)}, {}, {}};
  };
  p.reduce = [=](const std::vector<TrialOutput>& outs) {
    std::vector<std::vector<double>> rows;
    for (const auto& o : outs) rows.push_back(o.row);
    const MeanVariance mv = estimate_mean_var(column(rows, 1));
    std::vector<StatisticResult> stats;
    stats.push_back(ks_check("normalized_ks", ks_normal(column(rows, 2)), ks_tol));
    stats.push_back(relative_check("variance", mv.variance, mv.variance_se, variance, rel_tol));
    stats.push_back(diagnostic("mean", mv.mean, mv.mean_se, mean));
    return stats;
  };
  return p;
}

Plan beta_plan(const ExperimentConfig& c) {
  const Model model = make_model(c.ensemble, c, true);
  const bool with_ref = !c.reference_ensemble.empty();
  const Model ref = make_model("goe", c, false);
  const std::size_t i = resolve_index(c);
  const std::size_t n = c.n;
  const double gamma = semicircle::classical_location(i, n);
  const double printed = printed_beta_scale(gamma, n, c.beta);
  const Normalization corrected = gustavsson_scaling(gamma, n, c.beta, EnsembleFamily::beta);
  const Normalization wigner = gustavsson_scaling(gamma, n, 1.0, EnsembleFamily::wigner);
  const double rel_tol = tolerance_or(c.relative_tolerance, 0.12);
  const double ks_tol = tolerance_or(c.ks_tolerance, 0.05);

  Plan p;
  p.columns = {"trial", "lambda_i", "z_printed", "z_corrected"};
  if (with_ref) {
    p.columns.push_back("reference_lambda_i");
    p.columns.push_back("reference_z");
  }
  p.trial = [=](std::size_t trial, Rng rng) {
    const double lambda = model.sample(rng.split(1))(i);
    TrialOutput o{{static_cast<double>(trial), lambda, (lambda - gamma) / printed,
                   (lambda - corrected.center) / corrected.scale},
                  {},
                  {}};
    if (with_ref) {
      const double mu = ref.sample(rng.split(2))(i);
      o.row.push_back(mu);
      o.row.push_back((mu - wigner.center) / wigner.scale);
    }
    return o;
  };
  p.reduce = [=](const std::vector<TrialOutput>& outs) {
    std::vector<std::vector<double>> rows;
    for (const auto& o : outs) rows.push_back(o.row);
    std::vector<StatisticResult> stats;
    const auto [sd, sd_se] = std_with_se(column(rows, 2));
    stats.push_back(relative_check("printed_scale_std", sd, sd_se, 1.0, rel_tol));
    const auto [sdc, sdc_se] = std_with_se(column(rows, 3));
    stats.push_back(diagnostic("corrected_scale_std", sdc, sdc_se, 1.0));
    if (with_ref) {
      stats.push_back(ks_check("dense_reference_ks", ks_two_sample(column(rows, 3), column(rows, 5)), ks_tol));
    }
    return stats;
  };
  return p;
}

Plan dbm_plan(const ExperimentConfig& c) {
  const Model base = make_model(c.ensemble, c, false);
  const std::size_t n = c.n;
  const double nd = static_cast<double>(n);
  const std::size_t i = resolve_index(c);
  const double t0 = std::pow(nd, -c.tau0);
  const double t1 = 0.5 * t0;
  const double gamma = semicircle::classical_location(i, n);
  const auto phi = std::make_shared<HomogenizationObservable>(build_homogenization_observable(gamma, t1, c.eps1, n));
  const auto phi_sum = std::make_shared<double>(classical_phi_sum(*phi));
  const double dt = c.dt > 0.0 ? c.dt : default_dbm_step(n);
  const double ks_tol = tolerance_or(c.ks_tolerance, 0.05);
  const double corr_min = c.correlation_threshold;
  const double ratio_max = c.residual_ratio_threshold;
  const double kappa = c.kappa;

  Plan p;
  p.columns = {"trial", "i", "x_i(t1)", "y_i(t1)", "zeta_x", "zeta_y", "residual"};
  p.trial = [=](std::size_t trial, Rng rng) {
    const Spectrum x0 = eigen_symmetric(sample_gaussian_divisible({base.spec, t0}, rng.split(1)));
    const Spectrum y0 = eigen_symmetric(sample_wigner(goe_spec(n), rng.split(2)));
    const CouplingState cs = run_coupling(x0, y0, t1, rng.split(3).next_u64(), t0, dt);
    const double zx = zeta_statistic(cs.x0, *phi, *phi_sum);
    const double zy = zeta_statistic(cs.y0, *phi, *phi_sum);
    const double residual = homogenization_residual(cs, i, *phi, kappa);
    return TrialOutput{{static_cast<double>(trial), static_cast<double>(i), cs.x.positions[i - 1],
                        cs.y.positions[i - 1], zx, zy, residual},
                       y0.values,
                       cs.y.positions};
  };
  p.reduce = [=](const std::vector<TrialOutput>& outs) {
    std::vector<double> diff, pred, res, y_start, y_end;
    for (const auto& o : outs) {
      diff.push_back(o.row[2] - o.row[3]);
      pred.push_back((o.row[4] - o.row[5]) / nd);
      res.push_back(o.row[6]);
      y_start.insert(y_start.end(), o.pooled_a.begin(), o.pooled_a.end());
      y_end.insert(y_end.end(), o.pooled_b.begin(), o.pooled_b.end());
    }
    std::vector<StatisticResult> stats;
    const Correlation r = correlation(diff, pred);
    StatisticResult cr;
    cr.name = "correlation";
    cr.estimate = r.value;
    cr.standard_error = r.se;
    cr.criterion = "correlation >= " + readable(corr_min);
    cr.passed = r.value >= corr_min;
    stats.push_back(cr);

    double rr = 0.0, dd = 0.0;
    for (std::size_t k = 0; k < diff.size(); ++k) {
      rr += res[k] * res[k];
      dd += diff[k] * diff[k];
    }
    StatisticResult ratio;
    ratio.name = "residual_rms_ratio";
    ratio.estimate = dd > 0.0 ? std::sqrt(rr / dd) : 0.0;
    ratio.criterion = "RMS(residual) / RMS(x_i - y_i) <= " + readable(ratio_max);
    ratio.passed = ratio.estimate <= ratio_max;
    stats.push_back(ratio);

    stats.push_back(ks_check("marginal_invariance_ks", ks_two_sample(y_start, y_end), ks_tol));
    double slope_num = 0.0, slope_den = 0.0;
    for (std::size_t k = 0; k < diff.size(); ++k) {
      slope_num += diff[k] * pred[k];
      slope_den += pred[k] * pred[k];
    }
    stats.push_back(diagnostic("regression_slope", slope_den > 0.0 ? slope_num / slope_den : 0.0));
    return stats;
  };
  return p;
}

Plan bpz_plan(const ExperimentConfig& c) {
  const Model model = make_model(c.ensemble, c, false);
  const TestFunction f = make_test_function(c.function, c.function_params);
  const double u = c.u;
  const double width = std::pow(static_cast<double>(c.n), c.omega - 1.0);
  const VarianceBreakdown vb = variance_functional(f.smoothly_truncated(u, width), model.s4(), model.a2());
  const double rel_tol = tolerance_or(c.relative_tolerance, 0.12);

  Plan p;
  p.columns = {"trial", "partial_statistic"};
  p.trial = [=](std::size_t trial, Rng rng) {
    return TrialOutput{{static_cast<double>(trial), partial_linear_statistic(model.sample(rng.split(1)), f, u)}, {}, {}};
  };
  p.reduce = [=](const std::vector<TrialOutput>& outs) {
    std::vector<double> v;
    for (const auto& o : outs) v.push_back(o.row[1]);
    const MeanVariance mv = estimate_mean_var(v);
    return std::vector<StatisticResult>{relative_check("variance", mv.variance, mv.variance_se, vb.total, rel_tol),
                                        diagnostic("mean", mv.mean, mv.mean_se)};
  };
  return p;
}

Plan make_plan(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::single_eigenvalue_clt: return clt_plan(c, true);
    case ExperimentKind::counting_clt: return clt_plan(c, false);
    case ExperimentKind::mean_expansion: return mean_expansion_plan(c);
    case ExperimentKind::variance_shift: return variance_shift_plan(c);
    case ExperimentKind::linear_statistic_variance: return linear_statistic_plan(c);
    case ExperimentKind::mesoscopic_clt: return mesoscopic_plan(c);
    case ExperimentKind::beta_clt: return beta_plan(c);
    case ExperimentKind::dbm_homogenization: return dbm_plan(c);
    case ExperimentKind::bpz_partial: return bpz_plan(c);
  }
  throw ConfigError("unhandled experiment kind");
}

// Barycenter S = sum x_i of DBM from the classical configuration; an OU
// process with rate 1/2 and diffusion 2 / beta, so Var S(t) = (2 / beta)(1 - e^-t).
StatisticResult barycenter_check(const ExperimentConfig& c, std::uint64_t seed, std::size_t workers,
                                 std::size_t& failed) {
  const std::size_t m = c.barycenter_trials;
  const std::size_t n = c.barycenter_n;
  std::vector<double> start(n);
  for (std::size_t k = 0; k < n; ++k) start[k] = semicircle::quantile((static_cast<double>(k) + 0.5) / static_cast<double>(n));
  std::vector<std::optional<double>> sums(m);
  const Rng root = Rng(seed).split(0xBA7C);
  parallel_for(m, workers, [&](std::size_t k) {
    DBMState s;
    s.positions = start;
    s.beta = c.beta;
    try {
      const DBMState end = run_dbm(s, c.barycenter_time, default_dbm_step(n), root.substream(k).next_u64());
      double sum = 0.0;
      for (double v : end.positions) sum += v;
      sums[k] = sum;
    } catch (const IntegrationError&) {
    } catch (const NumericError&) {
    }
  });
  std::vector<double> v;
  for (const auto& s : sums) {
    if (s) v.push_back(*s);
    else ++failed;
  }
  const double theory = 2.0 / c.beta * (-std::expm1(-c.barycenter_time));
  const MeanVariance mv = estimate_mean_var(v);
  return relative_check("barycenter_variance", mv.variance, mv.variance_se, theory, 0.10);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  validate_config(config);
  const auto started = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = config;
  report.seed = resolve_seed(config);
  report.config.seed = report.seed;
  report.config_hash = config_hash(config, report.seed);
  report.workers = resolve_workers(options.workers);

  const Plan plan = make_plan(config);
  const std::size_t m = config.trials;
  std::vector<Outcome> outcomes(m);
  const Rng root(report.seed);
  parallel_for(m, report.workers, [&](std::size_t trial) {
    Outcome& o = outcomes[trial];
    try {
      o.out = plan.trial(trial, root.substream(trial));
      o.ok = true;
    } catch (const IntegrationError& e) {
      o.error = e.what();
    } catch (const NumericError& e) {
      o.error = e.what();
    }
  });

  std::vector<TrialOutput> good;
  for (std::size_t t = 0; t < m; ++t) {
    if (outcomes[t].ok) {
      report.rows.push_back(outcomes[t].out.row);
      good.push_back(std::move(outcomes[t].out));
    } else {
      ++report.trials_failed;
      if (report.failure_messages.size() < 5) {
        report.failure_messages.push_back("trial " + std::to_string(t) + ": " + outcomes[t].error);
      }
    }
  }
  report.columns = plan.columns;
  report.trials_attempted = m;
  report.trials_succeeded = good.size();

  std::size_t extra_failed = 0;
  std::size_t extra_attempted = 0;
  if (good.size() >= 2) {
    try {
      report.statistics = plan.reduce(good);
    } catch (const DomainError& e) {
      StatisticResult r;
      r.name = "reduction";
      r.criterion = std::string("reduction failed: ") + e.what();
      r.passed = false;
      report.statistics.push_back(r);
    }
  }
  if (config.kind == ExperimentKind::dbm_homogenization && config.barycenter_trials > 0) {
    extra_attempted = config.barycenter_trials;
    report.statistics.push_back(barycenter_check(config, report.seed, report.workers, extra_failed));
  }
  const double attempted = static_cast<double>(m + extra_attempted);
  const double failed = static_cast<double>(report.trials_failed + extra_failed);
  report.trials_attempted += extra_attempted;
  report.trials_succeeded += extra_attempted - extra_failed;
  report.trials_failed += extra_failed;
  report.failure_limit_exceeded = failed > config.failure_limit * attempted;

  report.passed = !report.failure_limit_exceeded && !report.statistics.empty();
  for (const auto& s : report.statistics) {
    if (s.passed && !*s.passed) report.passed = false;
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

nlohmann::json report_to_json(const ExperimentReport& r, bool include_runtime) {
  using nlohmann::json;
  json cfg = json::object();
  for (const Field& f : fields()) {
    const auto v = f.get(r.config);
    if (v) cfg[f.key] = *v;
  }
  json stats = json::array();
  for (const auto& s : r.statistics) {
    json j;
    j["name"] = s.name;
    j["estimate"] = s.estimate;
    j["standard_error"] = s.standard_error;
    j["theory"] = s.theory ? json(*s.theory) : json(nullptr);
    j["z_discrepancy"] = s.z_discrepancy ? json(*s.z_discrepancy) : json(nullptr);
    j["ks_distance"] = s.ks_distance ? json(*s.ks_distance) : json(nullptr);
    j["ks_p_value"] = s.ks_p_value ? json(*s.ks_p_value) : json(nullptr);
    j["criterion"] = s.criterion;
    j["passed"] = s.passed ? json(*s.passed) : json(nullptr);
    stats.push_back(j);
  }
  json out;
  out["schema_version"] = ExperimentReport::kSchemaVersion;
  out["kind"] = to_string(r.config.kind);
  out["config"] = cfg;
  out["config_hash"] = r.config_hash;
  out["seed"] = r.seed;
  out["trials"] = {{"attempted", r.trials_attempted},
                   {"succeeded", r.trials_succeeded},
                   {"failed", r.trials_failed},
                   {"failure_limit_exceeded", r.failure_limit_exceeded},
                   {"failure_messages", r.failure_messages}};
  out["statistics"] = stats;
  out["passed"] = r.passed;
  if (include_runtime) out["runtime"] = {{"workers", r.workers}, {"wall_seconds", r.wall_seconds}};
  return out;
}

std::string canonical_report(const ExperimentReport& report) {
  std::ostringstream os;
  os << report_to_json(report, false).dump(2) << '\n';
  write_csv(os, report.columns, report.rows);
  return os.str();
}

}  // namespace rmt
