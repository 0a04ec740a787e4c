#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rmt/ensembles.hpp"
#include "rmt/mesostat.hpp"
#include "rmt/random.hpp"
#include "rmt/spectra.hpp"

namespace rmt {

/// Particle configuration of Dyson Brownian motion
///   dx_i = sqrt(2 / (N beta)) dB_i + (1/N) sum_{j != i} dt / (x_i - x_j) - V'(x_i) dt / 2.
struct DBMState {
  std::vector<double> positions;  // strictly increasing
  double time = 0.0;
  double beta = 1.0;
  Potential potential = Potential::hermite();
};

/// Source of the extra Gaussian vectors needed when a step is bisected. The
/// vector for (step, depth, node) is a pure function of the key, so two
/// trajectories sharing a source see the same Brownian path.
class BridgeNoise {
 public:
  explicit BridgeNoise(std::uint64_t key, std::uint64_t step = 0) : key_(key), step_(step) {}

  /// n standard normals for the given refinement depth (>= 1) and node.
  std::vector<double> normals(std::size_t n, unsigned depth, std::uint64_t node) const;

  /// Brownian increments over a global step of length dt.
  std::vector<double> increment(std::size_t n, double dt) const;

  BridgeNoise at_step(std::uint64_t step) const { return BridgeNoise(key_, step); }

 private:
  std::uint64_t key_;
  std::uint64_t step_;
};

/// Substeps never get shorter than dt / 2^16.
inline constexpr unsigned kMaxBridgeDepth = 16;

/// Statistics of one or more accepted steps.
struct StepStats {
  std::size_t substeps = 0;
  unsigned max_depth = 0;
};

/// Advances `state` by dt with Brownian increment `noise` (one entry per
/// particle, variance dt each). Each substep is Euler for the potential and
/// the non-adjacent interactions and drift-implicit for the nearest-neighbour
/// repulsion; the implicit part is the minimiser of a strictly convex barrier
/// problem, so the output is always ordered. Substeps are bisected, with
/// bridge sampling of the increments, until max |explicit drift| * h <=
/// min gap / 4 and the implicit solve converges. Throws IntegrationError
/// carrying the offending pair when the floor is reached.
DBMState dbm_step(const DBMState& state, const std::vector<double>& noise, double dt,
                  const BridgeNoise& bridge, StepStats* stats = nullptr);

/// Same for several trajectories driven by one Brownian path; the substep
/// schedule is shared, so a bisection triggered by any trajectory applies to
/// all of them.
void dbm_step_coupled(std::vector<DBMState*> states, const std::vector<double>& noise, double dt,
                      const BridgeNoise& bridge, StepStats* stats = nullptr);

/// Integrates one trajectory from its current time to `t_end` in global steps
/// no longer than `dt_max`.
DBMState run_dbm(DBMState state, double t_end, double dt_max, std::uint64_t noise_key,
                 StepStats* stats = nullptr);

struct CouplingState {
  DBMState x;
  DBMState y;
  std::vector<double> x0;  // initial configurations, kept for the zeta statistics
  std::vector<double> y0;
  std::uint64_t shared_noise_seed = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  StepStats stats;
};

/// Default global step for dimension n.
double default_dbm_step(std::size_t n);

/// Runs both configurations to t1 under one Brownian path. t0 is recorded for
/// reference (t1 = t0 / 2 in the standard setup). Throws DomainError on a
/// dimension mismatch or unordered input.
CouplingState run_coupling(const Spectrum& x0, const Spectrum& y0, double t1, std::uint64_t seed,
                           double t0 = 0.0, double dt_max = 0.0, double beta = 1.0);

/// x_i(t1) - y_i(t1) - (zeta_x - zeta_y) / N with zeta taken at time 0; i is 1-based.
double homogenization_residual(const CouplingState& c, std::size_t i, const HomogenizationObservable& phi,
                               double kappa = 0.05);

}  // namespace rmt
