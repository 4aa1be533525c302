#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "clgas/lyapunov.hpp"
#include "clgas/rng.hpp"
#include "clgas/system.hpp"

namespace clgas {

enum class Scheme { EulerMaruyama, BAOAB };

struct IntegratorConfig {
  Scheme scheme = Scheme::BAOAB;
  double dt = 1e-3;
  /// Largest displacement per sub-step as a fraction of the nearest-neighbour distance.
  double eta = 0.5;
  /// log W cap realizing the stopping time; +inf disables it.
  double W_cap_log = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  int max_halvings = 30;
  bool noise = true;
  /// Parameters of log W for the recorded series and the cap.
  LyapunovParams lyapunov{};

  /// Throws InvalidConfig.
  void validate() const;
};

struct StepReport {
  double h_min = 0.0;  // smallest sub-step used
  int halvings = 0;    // number of halving events
  int substeps = 0;
  double min_dist_before = 0.0;
  double min_dist_after = 0.0;
};

struct StepResult {
  ParticleState state;
  StepReport report;
};

/// One step of size cfg.dt. The input state is never modified.
///
/// Throws StepFailure when a sub-step still violates the guard after
/// cfg.max_halvings halvings, and CapHit when log W of the new state exceeds
/// cfg.W_cap_log. In both cases the caller keeps the pre-step state.
StepResult step(const SystemParams& params, const IntegratorConfig& cfg, const ParticleState& state, StreamRng& rng);

/// Proposal for a guarded sub-step: write the state advanced by h into `out`.
using SubstepProposal = std::function<void(const ParticleState& from, double h, StreamRng& rng, ParticleState& out)>;

/// Advances `state` by dt through `propose`, halving a sub-step whenever some
/// particle would move farther than eta times the pre-step minimum distance,
/// the minimum distance would shrink below (1 - eta) times its value, a
/// coordinate turns non-finite, or (d = 1) the ordering would break. Random
/// draws of a rejected attempt are rewound before the halves run.
StepReport guarded_advance(ParticleState& state, double dt, double eta, int max_halvings, StreamRng& rng,
                           const SubstepProposal& propose);

enum class EventKind { Halving, CapHit, StepFailure };

struct TrajectoryEvent {
  std::size_t step = 0;
  double time = 0.0;
  EventKind kind = EventKind::Halving;
  int count = 0;
  std::string message;
};

enum class Termination { Completed, StepFailure, CapHit };

/// Series are recorded after every step (index 0 is the initial state);
/// snapshots every `stride` steps plus the final state.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> H;
  std::vector<double> log_w;
  std::vector<double> min_dist;
  std::vector<double> kinetic;
  std::vector<double> q_norm2;

  std::vector<std::size_t> snapshot_index;
  std::vector<ParticleState> states;
  std::vector<std::vector<std::uint8_t>> rng_states;

  std::vector<TrajectoryEvent> events;
  long total_halvings = 0;
  Termination termination = Termination::Completed;
  std::string termination_message;

  std::size_t size() const { return times.size(); }
};

/// Integrates to time T with StreamRng(cfg.seed, 0).
TrajectoryRecord simulate(const SystemParams& params, const IntegratorConfig& cfg, const ParticleState& initial,
                          double T, std::size_t stride);
TrajectoryRecord simulate(const SystemParams& params, const IntegratorConfig& cfg, const ParticleState& initial,
                          double T, std::size_t stride, StreamRng& rng);

struct SupermartingaleCheckpoint {
  double time = 0.0;
  double log_mean_w = 0.0;  // log of the replica mean of W
  double log_ci_low = 0.0;  // 95% bootstrap interval of log_mean_w
  double log_ci_high = 0.0;
  double log_bound = 0.0;   // log(e^{-λt} W(x0) + C_W/λ)
  std::string status;       // "below", "inconclusive" or "violated"
};

struct SupermartingaleReport {
  std::vector<SupermartingaleCheckpoint> checkpoints;
  std::size_t replicas = 0;
  std::size_t stopped_replicas = 0;  // replicas that hit the cap or failed a step
  long total_halvings = 0;
  /// No checkpoint has its whole confidence interval above the bound.
  bool passed() const;
};

struct SupermartingaleOptions {
  std::size_t n_checkpoints = 20;
  std::size_t bootstrap_resamples = 2000;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Replica r runs on StreamRng(cfg.seed, 0).split(r); a stopped replica keeps
/// its last log W (the stopped process of the localization argument).
SupermartingaleReport supermartingale_check(const SystemParams& params, const LyapunovParams& lp,
                                            const IntegratorConfig& cfg, const DriftBoundFit& fit,
                                            const ParticleState& initial, double T, std::size_t n_replicas,
                                            const SupermartingaleOptions& options = {});

std::string_view to_string(Scheme scheme);
std::string_view to_string(EventKind kind);
std::string_view to_string(Termination termination);

}  // namespace clgas
