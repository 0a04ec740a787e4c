#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rmt {

enum class ExperimentKind {
  single_eigenvalue_clt,
  counting_clt,
  mean_expansion,
  variance_shift,
  linear_statistic_variance,
  mesoscopic_clt,
  beta_clt,
  dbm_homogenization,
  bpz_partial,
};

std::string to_string(ExperimentKind kind);
/// Throws ConfigError for unknown names.
ExperimentKind experiment_kind_from_string(const std::string& name);

/// Experiment description. The key=value file format uses exactly these field
/// names; fields without a value in the file keep the defaults below, and
/// unset optionals mean "derive from the other fields".
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::single_eigenvalue_clt;

  // Ensemble. `ensemble` is one of goe, rademacher, uniform, skewed, wigner
  // (laws taken from offdiag_law / diag_law) or beta_hermite.
  std::string ensemble = "goe";
  std::string offdiag_law = "gaussian";
  std::string diag_law = "gaussian2";
  double beta = 1.0;
  std::string sampler = "dense";  // dense or tridiagonal (goe / beta_hermite only)
  std::string reference_ensemble;  // second ensemble for difference experiments
  std::size_t n = 0;
  std::size_t trials = 0;
  std::optional<std::uint64_t> seed;  // falls back to RMT_SEED

  // Index / energy parameters.
  std::optional<std::size_t> index;  // 1-based
  std::optional<double> gamma;       // picks the index whose classical location is nearest
  double energy = 0.0;
  double kappa = 0.05;

  // Test functions.
  std::string function = "gaussian_bump";
  std::map<std::string, double> function_params;
  double alpha = 0.5;  // mesoscopic scale N^-alpha
  double u = 0.3;      // partial-statistic threshold
  double omega = 0.05; // smoothing width N^(omega - 1) for the partial statistic

  // Dyson Brownian motion.
  double tau0 = 0.2;
  double eps1 = 0.05;
  double dt = 0.0;  // global step; 0 picks the default for n
  std::size_t barycenter_n = 20;
  std::size_t barycenter_trials = 0;
  double barycenter_time = 8.0;

  // Tolerances.
  // Unset tolerances take the per-kind defaults.
  std::optional<double> ks_tolerance;
  std::optional<double> relative_tolerance;
  double se_multiplier = 3.0;
  double correlation_threshold = 0.9;
  double residual_ratio_threshold = 0.5;
  double failure_limit = 0.01;
};

/// Parses key=value lines; '#' starts a comment. Unknown keys, malformed
/// values, unresolved catalog names, trials = 0 and indices outside the bulk
/// raise ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
/// Canonical key=value text; parse_config(serialize) round-trips.
std::string serialize_config(const ExperimentConfig& config);
/// Checks everything parse_config checks; used for programmatic configs.
void validate_config(const ExperimentConfig& config);

/// Master seed actually used: config.seed, else RMT_SEED, else ConfigError.
std::uint64_t resolve_seed(const ExperimentConfig& config);

/// 1-based index the experiment targets.
std::size_t resolve_index(const ExperimentConfig& config);

struct StatisticResult {
  std::string name;
  double estimate = 0.0;
  double standard_error = 0.0;
  std::optional<double> theory;
  std::optional<double> z_discrepancy;  // (estimate - theory) / standard_error
  std::optional<double> ks_distance;
  std::optional<double> ks_p_value;
  std::string criterion;        // human-readable tolerance; empty for diagnostics
  std::optional<bool> passed;   // unset for diagnostics
};

struct ExperimentReport {
  static constexpr int kSchemaVersion = 1;

  ExperimentConfig config;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t trials_attempted = 0;
  std::size_t trials_succeeded = 0;
  std::size_t trials_failed = 0;
  std::vector<std::string> failure_messages;  // first few, in trial order
  bool failure_limit_exceeded = false;
  std::vector<StatisticResult> statistics;
  bool passed = false;

  // Raw per-trial data, sorted by trial index.
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  // Runtime metadata; excluded from the canonical form.
  std::size_t workers = 0;
  double wall_seconds = 0.0;

  const StatisticResult* find(const std::string& name) const;
};

struct RunOptions {
  std::size_t workers = 0;  // 0: RMT_THREADS, else hardware concurrency
};

/// Worker count after applying RMT_THREADS and the hardware default.
std::size_t resolve_workers(std::size_t requested);

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// JSON form. The canonical form omits runtime metadata and is identical for
/// any worker count.
nlohmann::json report_to_json(const ExperimentReport& report, bool include_runtime = true);
std::string canonical_report(const ExperimentReport& report);

/// FNV-1a 64 of the serialized config with the resolved seed, in hex.
std::string config_hash(const ExperimentConfig& config, std::uint64_t seed);

/// Runs fn(trial) for trial in [0, count) on `workers` threads. Each call
/// writes only its own slot, so scheduling cannot affect results.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace rmt
