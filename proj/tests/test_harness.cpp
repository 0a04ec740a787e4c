#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rmt/errors.hpp"
#include "rmt/harness.hpp"
#include "rmt/statistics.hpp"

using namespace rmt;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

// Sets an environment variable for the lifetime of the guard.
class EnvGuard {
 public:
  EnvGuard(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    if (value) {
      ::setenv(name, value, 1);
    } else {
      ::unsetenv(name);
    }
  }
  ~EnvGuard() {
    if (old_) {
      ::setenv(name_.c_str(), old_->c_str(), 1);
    } else {
      ::unsetenv(name_.c_str());
    }
  }

 private:
  std::string name_;
  std::optional<std::string> old_;
};

std::vector<std::filesystem::path> sample_configs() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(std::filesystem::path(RMT_SOURCE_DIR) / "configs")) {
    if (e.path().extension() == ".cfg") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

const char* kLinear =
    "kind = linear_statistic_variance\n"
    "ensemble = rademacher\n"
    "function = gaussian_bump\n"
    "function_params = center:0, width:0.7\n"
    "n = 60\n"
    "trials = 200\n"
    "seed = 4242\n";

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse(
      "# comment line\n"
      "\n"
      "kind = mesoscopic_clt   # trailing comment\n"
      "ensemble=uniform\n"
      "n = 300\n"
      "trials = 50\n"
      "function = gaussian_bump\n"
      "function_params = center:0.5, width:2\n"
      "alpha = 0.3\n"
      "energy = -0.5\n"
      "seed = 18446744073709551615\n");
  CHECK(c.kind == ExperimentKind::mesoscopic_clt);
  CHECK(c.ensemble == "uniform");
  CHECK(c.n == 300);
  CHECK(c.trials == 50);
  CHECK(c.function_params.at("center") == 0.5);
  CHECK(c.function_params.at("width") == 2.0);
  CHECK(c.alpha == 0.3);
  CHECK(c.energy == -0.5);
  CHECK(*c.seed == 18446744073709551615ULL);
  CHECK_FALSE(c.index.has_value());
  CHECK(c.kappa == 0.05);

  for (auto kind : {ExperimentKind::single_eigenvalue_clt, ExperimentKind::counting_clt, ExperimentKind::mean_expansion,
                    ExperimentKind::variance_shift, ExperimentKind::linear_statistic_variance,
                    ExperimentKind::mesoscopic_clt, ExperimentKind::beta_clt, ExperimentKind::dbm_homogenization,
                    ExperimentKind::bpz_partial}) {
    CHECK(experiment_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(experiment_kind_from_string("nonsense"), ConfigError);
}

TEST_CASE("config errors") {
  const std::string base = "kind = single_eigenvalue_clt\nn = 100\ntrials = 10\n";
  CHECK_NOTHROW(parse(base));
  CHECK_THROWS_AS(parse(base + "colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "n = 200\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "kappa = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "kappa = 0.1x\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "this line has no separator\n"), ConfigError);
  CHECK_THROWS_AS(parse("kind = single_eigenvalue_clt\nn = 100\ntrials = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("kind = single_eigenvalue_clt\nn = 100\n"), ConfigError);
  CHECK_THROWS_AS(parse("n = 100\ntrials = 10\n"), ConfigError);
  CHECK_THROWS_AS(parse("kind = hologram\nn = 100\ntrials = 10\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "ensemble = gue\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "ensemble = wigner\noffdiag_law = cauchy\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "index = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "index = 100\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "n = -5\n"), ConfigError);
  CHECK_THROWS_AS(parse(base + "ensemble = rademacher\nsampler = tridiagonal\n"), ConfigError);
  CHECK_THROWS_AS(parse("kind = linear_statistic_variance\nn = 100\ntrials = 10\nfunction = no_such_function\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse("kind = beta_clt\nensemble = goe\nn = 100\ntrials = 10\n"), ConfigError);
  CHECK_THROWS_AS(parse("kind = beta_clt\nensemble = beta_hermite\nbeta = 0.5\nn = 100\ntrials = 10\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse("kind = mesoscopic_clt\nn = 100\ntrials = 10\nalpha = 1.2\n"), ConfigError);
  CHECK_THROWS_AS(parse("kind = dbm_homogenization\nn = 100\ntrials = 10\neps1 = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("config round trip") {
  const auto configs = sample_configs();
  REQUIRE(configs.size() >= 9);
  for (const auto& path : configs) {
    CAPTURE(path.string());
    const auto c = load_config(path.string());
    const std::string text = serialize_config(c);
    CHECK(serialize_config(parse(text)) == text);
    CHECK(c.seed.has_value());
  }
  auto c = parse(kLinear);
  c.gamma = -1.25;
  c.relative_tolerance = 0.2;
  c.function_params["center"] = 1.0 / 3.0;
  const auto back = parse(serialize_config(c));
  CHECK(*back.gamma == -1.25);
  CHECK(*back.relative_tolerance == 0.2);
  CHECK(back.function_params.at("center") == 1.0 / 3.0);
}

TEST_CASE("seed resolution and config hash") {
  auto c = parse("kind = counting_clt\nn = 100\ntrials = 10\n");
  {
    EnvGuard env("RMT_SEED", nullptr);
    CHECK_THROWS_AS(resolve_seed(c), ConfigError);
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
  }
  {
    EnvGuard env("RMT_SEED", "77");
    CHECK(resolve_seed(c) == 77);
    c.seed = 5;
    CHECK(resolve_seed(c) == 5);
  }
  {
    EnvGuard env("RMT_SEED", "seventy");
    c.seed.reset();
    CHECK_THROWS_AS(resolve_seed(c), ConfigError);
  }

  const std::string h = config_hash(c, 1);
  CHECK(h.size() == 16);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(config_hash(c, 1) == h);
  CHECK(config_hash(c, 2) != h);
  auto seeded = c;
  seeded.seed = 1;
  CHECK(config_hash(seeded, 1) == h);
  seeded.n = 101;
  CHECK(config_hash(seeded, 1) != h);
}

TEST_CASE("index resolution") {
  auto c = parse("kind = single_eigenvalue_clt\nn = 100\ntrials = 10\n");
  CHECK(resolve_index(c) == 50);
  c.index = 17;
  CHECK(resolve_index(c) == 17);
  c.index.reset();
  c.gamma = 0.0;
  CHECK(resolve_index(c) == 50);
  c.gamma = -1.0;
  // F(-1) = 0.1955...
  CHECK(resolve_index(c) == 20);
}

TEST_CASE("worker resolution and parallel_for") {
  CHECK(resolve_workers(3) == 3);
  {
    EnvGuard env("RMT_THREADS", "5");
    CHECK(resolve_workers(0) == 5);
    CHECK(resolve_workers(2) == 2);
  }
  {
    EnvGuard env("RMT_THREADS", "many");
    CHECK(resolve_workers(0) >= 1);
  }

  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t k) { hits[k] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  parallel_for(0, 4, [](std::size_t) { throw std::logic_error("never called"); });
  CHECK_THROWS_AS(parallel_for(100, 3,
                               [](std::size_t k) {
                                 if (k == 42) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("results do not depend on the worker count") {
  const auto c = parse(kLinear);
  const auto one = run_experiment(c, {1});
  const auto many = run_experiment(c, {8});
  CHECK(canonical_report(one) == canonical_report(many));
  {
    EnvGuard env("RMT_THREADS", "3");
    const auto env_run = run_experiment(c);
    CHECK(env_run.workers == 3);
    CHECK(canonical_report(env_run) == canonical_report(one));
  }
  auto reseeded = c;
  reseeded.seed = 4243;
  CHECK(canonical_report(run_experiment(reseeded, {1})) != canonical_report(one));
}

TEST_CASE("report structure") {
  const auto c = parse(kLinear);
  const auto r = run_experiment(c, {2});
  CHECK(r.trials_attempted == r.trials_succeeded + r.trials_failed);
  CHECK(r.trials_attempted == 200);
  CHECK(r.rows.size() == r.trials_succeeded);
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    CHECK(r.rows[k].size() == r.columns.size());
    CHECK(r.rows[k][0] == static_cast<double>(k));
  }
  REQUIRE(r.find("variance") != nullptr);
  CHECK(r.find("variance")->passed.has_value());
  CHECK(r.find("no_such_statistic") == nullptr);

  // Trials use independent streams: no lag-1 correlation between successive trials.
  std::vector<double> stat;
  for (const auto& row : r.rows) stat.push_back(row[1]);
  const std::vector<double> head(stat.begin(), stat.end() - 1), tail(stat.begin() + 1, stat.end());
  CHECK(std::abs(correlation(head, tail).value) <= 3.0 / std::sqrt(static_cast<double>(stat.size())));

  const auto j = report_to_json(r);
  CHECK(j.at("schema_version") == ExperimentReport::kSchemaVersion);
  CHECK(j.at("kind") == "linear_statistic_variance");
  CHECK(j.at("config_hash") == r.config_hash);
  CHECK(j.at("seed") == 4242);
  CHECK(j.at("config").at("n") == "60");
  CHECK(j.at("trials").at("attempted") == 200);
  CHECK(j.contains("runtime"));
  CHECK_FALSE(report_to_json(r, false).contains("runtime"));
  CHECK(j.at("statistics").is_array());
  CHECK(j.at("passed") == r.passed);

  const std::string canon = canonical_report(r);
  CHECK(canon.find("wall_seconds") == std::string::npos);
  CHECK(canon.find("trial,linear_statistic") != std::string::npos);
}

TEST_CASE("every sample configuration runs at small scale") {
  for (const auto& path : sample_configs()) {
    CAPTURE(path.string());
    auto c = load_config(path.string());
    c.n = 100;
    c.trials = 60;
    c.barycenter_trials = std::min<std::size_t>(c.barycenter_trials, 60);
    const auto r = run_experiment(c, {1});
    CHECK(r.trials_failed == 0);
    CHECK(r.rows.size() == 60);
    CHECK_FALSE(r.statistics.empty());
    std::set<std::string> names;
    for (const auto& s : r.statistics) {
      CAPTURE(s.name);
      CHECK(names.insert(s.name).second);
      CHECK(std::isfinite(s.estimate));
      CHECK(s.passed.has_value() == !s.criterion.empty());
      CHECK(s.name != "reduction");
    }
  }
}
