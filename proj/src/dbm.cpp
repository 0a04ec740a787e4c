#include "rmt/dbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rmt/errors.hpp"

namespace rmt {

std::vector<double> BridgeNoise::normals(std::size_t n, unsigned depth, std::uint64_t node) const {
  Rng rng = Rng(key_).split(step_).split(depth).substream(node);
  std::vector<double> z(n);
  for (double& v : z) v = rng.normal();
  return z;
}

std::vector<double> BridgeNoise::increment(std::size_t n, double dt) const {
  std::vector<double> db = normals(n, 0, 0);
  const double s = std::sqrt(dt);
  for (double& v : db) v *= s;
  return db;
}

namespace {

void check_ordered(const std::vector<double>& x, const char* who) {
  for (double v : x) {
    if (!std::isfinite(v)) throw DomainError(std::string(who) + ": non-finite position");
  }
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i - 1] < x[i])) throw DomainError(std::string(who) + ": positions must be strictly increasing");
  }
}

// Drift from the potential and from all pairs except nearest neighbours,
// which the step treats implicitly.
std::vector<double> far_drift(const DBMState& s) {
  const auto& x = s.positions;
  const std::size_t n = x.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const double xi = x[i];
    for (std::size_t j = 0; j + 1 < i; ++j) acc += 1.0 / (xi - x[j]);
    for (std::size_t j = i + 2; j < n; ++j) acc += 1.0 / (xi - x[j]);
    b[i] = acc * inv_n - 0.5 * s.potential.derivative(xi);
  }
  return b;
}

// Index of the smallest gap, or 0 for a single particle.
std::size_t tightest_pair(const std::vector<double>& x) {
  std::size_t k = 0;
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] - x[i - 1] < g) {
      g = x[i] - x[i - 1];
      k = i - 1;
    }
  }
  return k;
}

double min_gap(const std::vector<double>& x) {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < x.size(); ++i) g = std::min(g, x[i] - x[i - 1]);
  return g;
}

// F(y) = |y - a|^2 / 2 - c sum log(y_{k+1} - y_k); +inf off the ordered cone.
double barrier_objective(const std::vector<double>& y, const std::vector<double>& a, double c) {
  double f = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) f += 0.5 * (y[i] - a[i]) * (y[i] - a[i]);
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    const double d = y[k + 1] - y[k];
    if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
    f -= c * std::log(d);
  }
  return f;
}

// Solves y = a + c grad sum log(y_{k+1} - y_k), the implicit
// nearest-neighbour step, as the minimiser of the strictly convex
// barrier_objective. Damped Newton with a tridiagonal Hessian, started from
// the ordered vector `start`. Returns false without touching `y` if Newton
// does not converge.
bool solve_neighbour_step(const std::vector<double>& a, const std::vector<double>& start, double c,
                          std::vector<double>& y) {
  const std::size_t n = a.size();
  std::vector<double> cur = start, grad(n), diag(n), off(n > 0 ? n - 1 : 0), step(n), trial(n);
  double f = barrier_objective(cur, a, c);
  if (!std::isfinite(f)) return false;
  for (int it = 0; it < 100; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = cur[i] - a[i];
      diag[i] = 1.0;
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double inv = 1.0 / (cur[k + 1] - cur[k]);
      const double w = c * inv * inv;
      grad[k] += c * inv;
      grad[k + 1] -= c * inv;
      diag[k] += w;
      diag[k + 1] += w;
      off[k] = -w;
    }
    // Thomas algorithm; the Hessian is symmetric positive definite.
    std::vector<double> dd = diag, rhs = grad;
    for (std::size_t i = 1; i < n; ++i) {
      const double m = off[i - 1] / dd[i - 1];
      dd[i] -= m * off[i - 1];
      rhs[i] -= m * rhs[i - 1];
    }
    step[n - 1] = rhs[n - 1] / dd[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) step[i] = (rhs[i] - off[i] * step[i + 1]) / dd[i];

    double decrement = 0.0;  // Newton decrement squared
    double size = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      decrement += grad[i] * step[i];
      size = std::max(size, std::abs(step[i]));
    }
    if (!std::isfinite(decrement)) return false;

    double t = 1.0;
    double f_trial = 0.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = cur[i] - t * step[i];
      f_trial = barrier_objective(trial, a, c);
      if (f_trial <= f - 0.25 * t * decrement) break;
    }
    if (!std::isfinite(f_trial)) return false;
    const bool accepted = f_trial <= f - 0.25 * t * decrement;
    if (accepted) {
      cur.swap(trial);
      f = f_trial;
    }
    double scale = 0.0;
    for (double v : cur) scale = std::max(scale, std::abs(v));
    if (t * size <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + scale) ||
        decrement <= 1e-30 * (1.0 + scale * scale)) {
      y.swap(cur);
      return true;
    }
    if (!accepted) return false;
  }
  return false;
}

struct Stepper {
  const BridgeNoise& bridge;
  double floor;
  StepStats stats;

  // Advances every state over h with increment db; node numbers the
  // subinterval within its depth (children of m are 2m + 1 and 2m + 2). `drifts`, when
  // non-null, holds the explicit drift of every state at its current positions.
  void advance(std::vector<DBMState*>& states, const std::vector<double>& db, double h, unsigned depth,
               std::uint64_t node, const std::vector<std::vector<double>>* drifts = nullptr) {
    const std::size_t n = db.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<std::vector<double>> proposals;
    proposals.reserve(states.size());
    bool ok = true;
    std::size_t culprit = 0;
    for (std::size_t k = 0; k < states.size() && ok; ++k) {
      const DBMState* s = states[k];
      const std::vector<double> b = drifts ? (*drifts)[k] : far_drift(*s);
      double bmax = 0.0;
      for (double v : b) bmax = std::max(bmax, std::abs(v));
      if (n > 1 && !(bmax * h <= 0.25 * min_gap(s->positions))) {
        ok = false;
        culprit = tightest_pair(s->positions);
        break;
      }
      const double sigma = std::sqrt(2.0 / (static_cast<double>(n) * s->beta));
      std::vector<double> a(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = s->positions[i] + b[i] * h + sigma * db[i];
      for (double v : a) {
        if (!std::isfinite(v)) throw NumericError("dbm: non-finite position");
      }
      std::vector<double> next;
      if (n == 1) {
        next = a;
      } else if (!solve_neighbour_step(a, s->positions, h * inv_n, next)) {
        ok = false;
        culprit = tightest_pair(s->positions);
        break;
      }
      proposals.push_back(std::move(next));
    }

    if (ok) {
      for (std::size_t k = 0; k < states.size(); ++k) {
        states[k]->positions = std::move(proposals[k]);
        states[k]->time += h;
      }
      ++stats.substeps;
      stats.max_depth = std::max(stats.max_depth, depth);
      return;
    }

    if (0.5 * h < floor) {
      throw IntegrationError("dbm: substep floor reached with particles " + std::to_string(culprit + 1) +
                                 " and " + std::to_string(culprit + 2) + " about to collide",
                             culprit + 1, culprit + 2);
    }
    // Brownian bridge: the first half carries db/2 plus an independent N(0, h/4).
    const std::vector<double> z = bridge.normals(n, depth + 1, node);
    const double s = std::sqrt(0.25 * h);
    std::vector<double> first(n), second(n);
    for (std::size_t i = 0; i < n; ++i) {
      first[i] = 0.5 * db[i] + s * z[i];
      second[i] = db[i] - first[i];
    }
    advance(states, first, 0.5 * h, depth + 1, 2 * node + 1);
    advance(states, second, 0.5 * h, depth + 1, 2 * node + 2);
  }
};

void validate(const DBMState& s, std::size_t n) {
  if (s.positions.size() != n) throw DomainError("dbm: noise length differs from particle count");
  if (!(s.beta >= 1.0)) throw DomainError("dbm: beta must be at least 1");
  check_ordered(s.positions, "dbm");
}

void merge(StepStats* into, const StepStats& from) {
  if (!into) return;
  into->substeps += from.substeps;
  into->max_depth = std::max(into->max_depth, from.max_depth);
}

void step_coupled(std::vector<DBMState*> states, const std::vector<double>& noise, double dt,
                  const BridgeNoise& bridge, StepStats* stats, const std::vector<std::vector<double>>* drifts) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dbm: dt must be positive");
  if (noise.empty()) throw DomainError("dbm: empty configuration");
  for (const DBMState* s : states) validate(*s, noise.size());
  // Work on copies so a failed step leaves the inputs untouched.
  std::vector<DBMState> work;
  work.reserve(states.size());
  for (const DBMState* s : states) work.push_back(*s);
  std::vector<DBMState*> ptrs;
  for (auto& w : work) ptrs.push_back(&w);
  Stepper stepper{bridge, std::ldexp(dt, -static_cast<int>(kMaxBridgeDepth)), {}};
  stepper.advance(ptrs, noise, dt, 0, 0, drifts);
  for (std::size_t k = 0; k < states.size(); ++k) *states[k] = std::move(work[k]);
  merge(stats, stepper.stats);
}

}  // namespace

void dbm_step_coupled(std::vector<DBMState*> states, const std::vector<double>& noise, double dt,
                      const BridgeNoise& bridge, StepStats* stats) {
  step_coupled(std::move(states), noise, dt, bridge, stats, nullptr);
}

DBMState dbm_step(const DBMState& state, const std::vector<double>& noise, double dt, const BridgeNoise& bridge,
                  StepStats* stats) {
  DBMState out = state;
  dbm_step_coupled({&out}, noise, dt, bridge, stats);
  return out;
}

namespace {

// Global steps are at most dt_max and never longer than the drift condition
// allows at the start of the step. Step k always draws its increment from
// stream k.
void integrate(std::vector<DBMState*> states, double t_start, double t_end, double dt_max, std::uint64_t key,
               StepStats* stats) {
  if (!(t_end >= t_start)) throw DomainError("dbm: end time precedes start time");
  if (!(dt_max > 0.0)) throw DomainError("dbm: step must be positive");
  const std::size_t n = states.front()->positions.size();
  for (const DBMState* s : states) validate(*s, n);
  const BridgeNoise root(key);
  const double span = t_end - t_start;
  double t = t_start;
  std::vector<std::vector<double>> drifts(states.size());
  for (std::uint64_t k = 0; t < t_end; ++k) {
    double dt = std::min(dt_max, t_end - t);
    for (std::size_t j = 0; j < states.size(); ++j) {
      drifts[j] = far_drift(*states[j]);
      double bmax = 0.0;
      for (double v : drifts[j]) bmax = std::max(bmax, std::abs(v));
      if (n > 1 && bmax > 0.0) dt = std::min(dt, 0.25 * min_gap(states[j]->positions) / bmax);
    }
    // Absorb a sliver left by rounding into this step.
    if (t_end - (t + dt) <= 1e-12 * span) dt = t_end - t;
    const BridgeNoise bridge = root.at_step(k);
    step_coupled(states, bridge.increment(n, dt), dt, bridge, stats, &drifts);
    t = (dt == t_end - t) ? t_end : t + dt;
  }
  for (DBMState* s : states) s->time = t_end;
}

}  // namespace

DBMState run_dbm(DBMState state, double t_end, double dt_max, std::uint64_t noise_key, StepStats* stats) {
  integrate({&state}, state.time, t_end, dt_max, noise_key, stats);
  return state;
}

double default_dbm_step(std::size_t n) { return 0.05 / static_cast<double>(std::max<std::size_t>(n, 1)); }

CouplingState run_coupling(const Spectrum& x0, const Spectrum& y0, double t1, std::uint64_t seed, double t0,
                           double dt_max, double beta) {
  if (x0.values.size() != y0.values.size()) throw DomainError("run_coupling: dimension mismatch");
  if (x0.values.empty()) throw DomainError("run_coupling: empty spectrum");
  if (!(t1 > 0.0)) throw DomainError("run_coupling: t1 must be positive");
  check_ordered(x0.values, "run_coupling");
  check_ordered(y0.values, "run_coupling");

  CouplingState c;
  c.x0 = x0.values;
  c.y0 = y0.values;
  c.x.positions = x0.values;
  c.y.positions = y0.values;
  c.x.beta = c.y.beta = beta;
  c.shared_noise_seed = seed;
  c.t0 = t0;
  c.t1 = t1;
  if (dt_max <= 0.0) dt_max = default_dbm_step(x0.values.size());
  integrate({&c.x, &c.y}, 0.0, t1, dt_max, seed, &c.stats);
  return c;
}

double homogenization_residual(const CouplingState& c, std::size_t i, const HomogenizationObservable& phi,
                               double kappa) {
  const std::size_t n = c.x0.size();
  const double nd = static_cast<double>(n);
  if (i < 1 || i > n || static_cast<double>(i) < kappa * nd || static_cast<double>(i) > (1.0 - kappa) * nd) {
    throw DomainError("homogenization_residual: index outside the bulk");
  }
  if (phi.n != n) throw DomainError("homogenization_residual: observable built for another dimension");
  const double sum = classical_phi_sum(phi);
  const double zx = zeta_statistic(c.x0, phi, sum);
  const double zy = zeta_statistic(c.y0, phi, sum);
  return c.x.positions[i - 1] - c.y.positions[i - 1] - (zx - zy) / nd;
}

}  // namespace rmt
