#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"
#include "rmt/harness.hpp"
#include "rmt/mesostat.hpp"
#include "rmt/random.hpp"
#include "rmt/semicircle.hpp"
#include "rmt/spectra.hpp"
#include "rmt/statistics.hpp"
#include "rmt/theory.hpp"

namespace {

using nlohmann::json;

struct PredictArgs {
  std::string formula;
  std::string function = "gaussian_bump";
  std::map<std::string, double> params;
  std::string ensemble = "goe";
  double s4 = 0.0;
  double a2 = 1.0;
  bool s4_set = false;
  bool a2_set = false;
  double gamma = 0.0;
  std::size_t n = 0;
  std::size_t index = 0;
  double beta = 1.0;
  double kappa = 0.05;
  double c_sym = 1.0;
  double lower = -2.0;
  double upper = 2.0;
};

void resolve_cumulants(PredictArgs& a) {
  if (a.ensemble == "beta_hermite") {
    if (!a.s4_set) a.s4 = 0.0;
    if (!a.a2_set) a.a2 = 1.0;
    return;
  }
  rmt::WignerSpec spec;
  if (a.ensemble == "goe") spec = rmt::goe_spec(2);
  else if (a.ensemble == "rademacher") spec = rmt::rademacher_spec(2);
  else if (a.ensemble == "uniform") spec = {2, rmt::entry_law("uniform"), rmt::entry_law("gaussian2")};
  else if (a.ensemble == "skewed") spec = {2, rmt::entry_law("skewed_two_point"), rmt::entry_law("gaussian2")};
  else throw rmt::ConfigError("unknown ensemble '" + a.ensemble + "'");
  if (!a.s4_set) a.s4 = spec.s(4);
  if (!a.a2_set) a.a2 = spec.a(2);
}

double resolved_gamma(const PredictArgs& a) {
  if (a.index > 0) {
    if (a.n == 0) throw rmt::ConfigError("--index needs --n");
    return rmt::semicircle::classical_location(a.index, a.n);
  }
  return a.gamma;
}

json predict(PredictArgs a) {
  resolve_cumulants(a);
  json out;
  out["schema_version"] = rmt::ExperimentReport::kSchemaVersion;
  out["formula"] = a.formula;
  out["inputs"] = {{"s4", a.s4}, {"a2", a.a2}};

  if (a.formula == "variance_functional" || a.formula == "mean_expansion" ||
      a.formula == "mesoscopic_variance" || a.formula == "beta_variance_functional") {
    const rmt::TestFunction f = rmt::make_test_function(a.function, a.params);
    out["inputs"]["function"] = a.function;
    out["inputs"]["params"] = a.params;
    if (a.formula == "variance_functional") {
      const auto v = rmt::variance_functional(f, a.s4, a.a2);
      out["result"] = {{"double_integral_term", v.double_integral_term}, {"a2_term", v.a2_term},
                       {"s4_term", v.s4_term}, {"total", v.total}, {"refinement_error", v.refinement_error}};
    } else if (a.formula == "mean_expansion") {
      if (a.n == 0) throw rmt::ConfigError("mean_expansion needs --n");
      const auto m = rmt::mean_expansion(f, a.s4, a.a2, a.n);
      out["inputs"]["n"] = a.n;
      out["result"] = {{"leading", m.leading},     {"arcsine_term", m.arcsine_term}, {"edge_term", m.edge_term},
                       {"a2_term", m.a2_term},     {"s4_term", m.s4_term},           {"corrections", m.corrections()},
                       {"total", m.total},         {"refinement_error", m.refinement_error}};
    } else if (a.formula == "mesoscopic_variance") {
      out["inputs"]["c_sym"] = a.c_sym;
      out["result"] = {{"variance", rmt::mesoscopic_variance(f, a.c_sym)}};
    } else {
      out["inputs"]["lower"] = a.lower;
      out["inputs"]["upper"] = a.upper;
      out["inputs"]["beta"] = a.beta;
      out["result"] = {{"variance", rmt::beta_variance_functional(f, a.lower, a.upper, a.beta)}};
    }
    return out;
  }

  const double gamma = resolved_gamma(a);
  out["inputs"]["gamma"] = gamma;
  if (a.formula == "single_eigenvalue_mean") {
    out["inputs"]["kappa"] = a.kappa;
    out["result"] = {{"n_mean_shift", rmt::single_eigenvalue_mean(gamma, a.s4, a.a2, a.kappa)}};
  } else if (a.formula == "variance_shift") {
    if (a.n == 0) throw rmt::ConfigError("variance_shift needs --n");
    out["inputs"]["n"] = a.n;
    out["result"] = {{"variance_shift", rmt::single_eigenvalue_variance_shift(gamma, a.s4, a.a2, a.n, a.kappa)}};
  } else if (a.formula == "indicator_integrals") {
    const auto ii = rmt::indicator_integrals(gamma);
    out["result"] = {{"s4", ii.s4}, {"a2_edge", ii.a2_edge}, {"x", ii.x}};
  } else if (a.formula == "counting_mean") {
    out["result"] = {{"correction", rmt::counting_mean_correction(gamma, a.s4, a.a2)}};
  } else if (a.formula == "gustavsson_scaling") {
    if (a.n == 0) throw rmt::ConfigError("gustavsson_scaling needs --n");
    const auto family = a.ensemble == "beta_hermite" ? rmt::EnsembleFamily::beta : rmt::EnsembleFamily::wigner;
    const auto s = rmt::gustavsson_scaling(gamma, a.n, a.beta, family);
    out["inputs"]["n"] = a.n;
    out["inputs"]["beta"] = a.beta;
    out["result"] = {{"center", s.center},
                     {"scale", s.scale},
                     {"printed_beta_scale", rmt::printed_beta_scale(gamma, a.n, a.beta)}};
  } else if (a.formula == "semicircle") {
    out["result"] = {{"density", rmt::semicircle::density(gamma)}, {"cdf", rmt::semicircle::cdf(gamma)}};
  } else {
    throw rmt::ConfigError("unknown formula '" + a.formula + "'");
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw rmt::ConfigError("cannot write '" + path + "'");
  f << text;
}

struct RunArgs {
  std::string config;
  std::string report;  // JSON; stdout when empty
  std::string csv;
  std::size_t workers = 0;
};

int run(const RunArgs& a, bool dbm_only) {
  const rmt::ExperimentConfig cfg = rmt::load_config(a.config);
  if (dbm_only && cfg.kind != rmt::ExperimentKind::dbm_homogenization) {
    throw rmt::ConfigError("rmt dbm needs kind = dbm_homogenization");
  }
  const rmt::ExperimentReport report = rmt::run_experiment(cfg, {a.workers});
  // `run` prints the report; `dbm` prints the per-coupling table.
  const bool csv_to_stdout = dbm_only && a.csv.empty();
  if (!csv_to_stdout || !a.report.empty()) write_text(a.report, rmt::report_to_json(report).dump(2) + "\n");
  if (!a.csv.empty() || csv_to_stdout) {
    std::ostringstream os;
    rmt::write_csv(os, report.columns, report.rows);
    write_text(a.csv, os.str());
  }
  return report.passed ? 0 : 3;
}

struct SampleArgs {
  std::string ensemble;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t count = 1;
  double beta = 1.0;
  std::string offdiag_law = "gaussian";
  std::string diag_law = "gaussian2";
  std::string sampler = "dense";
  std::string out;
};

void sample(const SampleArgs& a) {
  rmt::ExperimentConfig cfg;
  cfg.kind = rmt::ExperimentKind::single_eigenvalue_clt;
  cfg.ensemble = a.ensemble;
  cfg.n = a.n;
  cfg.trials = a.count;
  cfg.beta = a.beta;
  cfg.offdiag_law = a.offdiag_law;
  cfg.diag_law = a.diag_law;
  cfg.sampler = a.sampler;
  rmt::validate_config(cfg);

  std::vector<std::vector<double>> rows;
  const rmt::Rng root(a.seed);
  for (std::size_t s = 0; s < a.count; ++s) {
    const rmt::Rng rng = root.substream(s).split(1);
    rmt::Spectrum spec;
    if (a.ensemble == "beta_hermite" || a.sampler == "tridiagonal") {
      spec = rmt::eigen_tridiagonal(rmt::sample_beta_hermite({a.n, a.beta}, rng));
    } else {
      rmt::WignerSpec ws;
      if (a.ensemble == "goe") ws = rmt::goe_spec(a.n);
      else if (a.ensemble == "rademacher") ws = rmt::rademacher_spec(a.n);
      else if (a.ensemble == "uniform") ws = {a.n, rmt::entry_law("uniform"), rmt::entry_law("gaussian2")};
      else if (a.ensemble == "skewed") ws = {a.n, rmt::entry_law("skewed_two_point"), rmt::entry_law("gaussian2")};
      else ws = {a.n, rmt::entry_law(a.offdiag_law), rmt::entry_law(a.diag_law)};
      spec = rmt::eigen_symmetric(rmt::sample_wigner(ws, rng));
    }
    for (std::size_t i = 1; i <= a.n; ++i) {
      rows.push_back({static_cast<double>(s), static_cast<double>(i), spec(i),
                      rmt::semicircle::classical_location(i, a.n)});
    }
  }
  std::ostringstream os;
  rmt::write_csv(os, {"sample", "i", "eigenvalue", "classical_location"}, rows);
  write_text(a.out, os.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-matrix spectral fluctuation laboratory"};
  app.require_subcommand(1);

  PredictArgs pa;
  std::vector<std::string> raw_params;
  auto* pred = app.add_subcommand("predict", "Print a theory prediction as JSON");
  pred->add_option("formula", pa.formula,
                   "variance_functional, mean_expansion, mesoscopic_variance, beta_variance_functional, "
                   "single_eigenvalue_mean, variance_shift, indicator_integrals, counting_mean, "
                   "gustavsson_scaling, semicircle")
      ->required();
  pred->add_option("--function", pa.function, "Test function name");
  pred->add_option("--param", raw_params, "Test function parameter name=value (repeatable)");
  pred->add_option("--ensemble", pa.ensemble, "goe, rademacher, uniform, skewed or beta_hermite");
  auto* s4opt = pred->add_option("--s4", pa.s4, "Fourth cumulant (overrides the ensemble)");
  auto* a2opt = pred->add_option("--a2", pa.a2, "Diagonal variance (overrides the ensemble)");
  pred->add_option("--gamma", pa.gamma, "Classical location or energy");
  pred->add_option("--n", pa.n, "Matrix dimension");
  pred->add_option("--index", pa.index, "1-based index; sets gamma from --n");
  pred->add_option("--beta", pa.beta, "Dyson index");
  pred->add_option("--kappa", pa.kappa, "Bulk margin");
  pred->add_option("--c-sym", pa.c_sym, "Symmetry constant of the mesoscopic variance");
  pred->add_option("--lower", pa.lower, "Left support edge");
  pred->add_option("--upper", pa.upper, "Right support edge");

  RunArgs ra;
  auto* runc = app.add_subcommand("run", "Run an experiment from a config file");
  RunArgs da;
  auto* dbmc = app.add_subcommand("dbm", "Run a Dyson Brownian motion coupling experiment");
  for (auto [cmd, args] : {std::pair{runc, &ra}, std::pair{dbmc, &da}}) {
    cmd->add_option("config", args->config, "key=value config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--report", args->report, "JSON report path");
    cmd->add_option("--csv", args->csv, "Per-trial CSV path");
    cmd->add_option("--workers", args->workers, "Worker threads (default RMT_THREADS or all cores)");
  }

  SampleArgs sa;
  auto* samp = app.add_subcommand("sample", "Write sampled spectra as CSV");
  samp->add_option("ensemble", sa.ensemble, "goe, rademacher, uniform, skewed, wigner or beta_hermite")->required();
  samp->add_option("--n", sa.n, "Matrix dimension")->required();
  samp->add_option("--seed", sa.seed, "Master seed")->required();
  samp->add_option("--out", sa.out, "CSV path (default stdout)");
  samp->add_option("--count", sa.count, "Number of matrices");
  samp->add_option("--beta", sa.beta, "Dyson index for beta_hermite");
  samp->add_option("--offdiag-law", sa.offdiag_law, "Off-diagonal law for wigner");
  samp->add_option("--diag-law", sa.diag_law, "Diagonal law for wigner");
  samp->add_option("--sampler", sa.sampler, "dense or tridiagonal");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pred) {
      for (const auto& p : raw_params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos) throw rmt::ConfigError("--param expects name=value, got '" + p + "'");
        pa.params[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
      }
      pa.s4_set = s4opt->count() > 0;
      pa.a2_set = a2opt->count() > 0;
      std::cout << predict(pa).dump(2) << '\n';
      return 0;
    }
    if (*runc) return run(ra, false);
    if (*dbmc) return run(da, true);
    if (*samp) {
      sample(sa);
      return 0;
    }
  } catch (const rmt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
