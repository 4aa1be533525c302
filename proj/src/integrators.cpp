#include "clgas/integrators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "clgas/error.hpp"

namespace clgas {

namespace {

double log_sum_exp(std::span<const double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - top);
  return top + std::log(sum);
}

double log_mean_exp(std::span<const double> v) { return log_sum_exp(v) - std::log(static_cast<double>(v.size())); }

bool acceptable(const ParticleState& from, const ParticleState& to, double m0, double eta) {
  if (!to.all_finite()) return false;
  if (from.n < 2) return true;
  const std::size_t d = from.d;
  const double limit2 = eta * m0 * eta * m0;
  for (std::size_t i = 0; i < from.n; ++i) {
    double disp2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double dq = to.q[i * d + k] - from.q[i * d + k];
      disp2 += dq * dq;
    }
    if (disp2 > limit2) return false;
  }
  const double m1 = min_pair_distance(to);
  if (!(m1 > 0.0) || m1 < (1.0 - eta) * m0) return false;
  if (d == 1 && is_ordered_1d(from) && !is_ordered_1d(to)) return false;
  return true;
}

void advance(ParticleState& state, double h, int depth, double eta, int max_halvings, StreamRng& rng,
             const SubstepProposal& propose, ParticleState& scratch, StepReport& report) {
  const double m0 = min_pair_distance(state);
  const StreamRng saved = rng;
  bool ok = false;
  try {
    propose(state, h, rng, scratch);
    ok = acceptable(state, scratch, m0, eta);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ZeroSeparation) throw;
  }
  if (ok) {
    std::swap(state, scratch);
    ++report.substeps;
    report.h_min = report.h_min == 0.0 ? h : std::min(report.h_min, h);
    return;
  }
  if (depth >= max_halvings) {
    std::ostringstream msg;
    msg << "guard still violated after " << max_halvings << " halvings (sub-step " << h << ", min distance " << m0
        << ")";
    throw Error(ErrorKind::StepFailure, msg.str());
  }
  rng = saved;
  ++report.halvings;
  advance(state, 0.5 * h, depth + 1, eta, max_halvings, rng, propose, scratch, report);
  advance(state, 0.5 * h, depth + 1, eta, max_halvings, rng, propose, scratch, report);
}

void baoab(const SystemParams& params, const IntegratorConfig& cfg, const ParticleState& from, double h,
           StreamRng& rng, ParticleState& out) {
  out = from;
  std::vector<double> g(from.q.size());
  grad_U(params, from, g);
  for (std::size_t k = 0; k < g.size(); ++k) out.p[k] -= 0.5 * h * g[k];
  for (std::size_t k = 0; k < g.size(); ++k) out.q[k] += 0.5 * h * out.p[k];
  const double decay = std::exp(-params.gamma * h);
  const double sigma = cfg.noise ? std::sqrt((1.0 - decay * decay) / params.beta) : 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    out.p[k] *= decay;
    if (cfg.noise) out.p[k] += sigma * rng.normal();
  }
  for (std::size_t k = 0; k < g.size(); ++k) out.q[k] += 0.5 * h * out.p[k];
  grad_U(params, out, g);
  for (std::size_t k = 0; k < g.size(); ++k) out.p[k] -= 0.5 * h * g[k];
}

void euler_maruyama(const SystemParams& params, const IntegratorConfig& cfg, const ParticleState& from, double h,
                    StreamRng& rng, ParticleState& out) {
  out = from;
  std::vector<double> g(from.q.size());
  grad_U(params, from, g);
  const double sigma = cfg.noise ? std::sqrt(2.0 * params.gamma * h / params.beta) : 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    out.q[k] += h * from.p[k];
    out.p[k] -= h * (params.gamma * from.p[k] + g[k]);
    if (cfg.noise) out.p[k] += sigma * rng.normal();
  }
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidConfig, "integrator.dt must be > 0");
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorKind::InvalidConfig, "integrator.eta must lie in (0, 1]");
  if (max_halvings < 0) throw Error(ErrorKind::InvalidConfig, "integrator.max_halvings must be >= 0");
  if (std::isnan(W_cap_log)) throw Error(ErrorKind::InvalidConfig, "integrator.W_cap_log is NaN");
}

StepReport guarded_advance(ParticleState& state, double dt, double eta, int max_halvings, StreamRng& rng,
                           const SubstepProposal& propose) {
  StepReport report;
  report.min_dist_before = min_pair_distance(state);
  ParticleState scratch = state;
  ParticleState work = state;
  advance(work, dt, 0, eta, max_halvings, rng, propose, scratch, report);
  state = std::move(work);
  report.min_dist_after = min_pair_distance(state);
  return report;
}

StepResult step(const SystemParams& params, const IntegratorConfig& cfg, const ParticleState& state, StreamRng& rng) {
  cfg.validate();
  SubstepProposal propose = [&](const ParticleState& from, double h, StreamRng& r, ParticleState& out) {
    if (cfg.scheme == Scheme::BAOAB) {
      baoab(params, cfg, from, h, r, out);
    } else {
      euler_maruyama(params, cfg, from, h, r, out);
    }
  };
  StepResult result{state, {}};
  StreamRng trial = rng;
  result.report = guarded_advance(result.state, cfg.dt, cfg.eta, cfg.max_halvings, trial, propose);
  if (std::isfinite(cfg.W_cap_log)) {
    const double lw = log_W(params, cfg.lyapunov, result.state);
    if (lw > cfg.W_cap_log) {
      std::ostringstream msg;
      msg << "log W = " << lw << " exceeds cap " << cfg.W_cap_log;
      throw Error(ErrorKind::CapHit, msg.str());
    }
  }
  rng = trial;
  return result;
}

TrajectoryRecord simulate(const SystemParams& params, const IntegratorConfig& cfg, const ParticleState& initial,
                          double T, std::size_t stride) {
  StreamRng rng(cfg.seed, 0);
  return simulate(params, cfg, initial, T, stride, rng);
}

TrajectoryRecord simulate(const SystemParams& params, const IntegratorConfig& cfg, const ParticleState& initial,
                          double T, std::size_t stride, StreamRng& rng) {
  cfg.validate();
  if (!(T >= 0.0) || !std::isfinite(T)) throw Error(ErrorKind::InvalidConfig, "simulation time T must be >= 0");
  if (stride == 0) throw Error(ErrorKind::InvalidConfig, "stride must be >= 1");
  if (!initial.all_finite()) throw Error(ErrorKind::InvalidConfig, "initial state is not finite");
  if (initial.n >= 2 && !(min_pair_distance(initial) > 0.0)) {
    throw Error(ErrorKind::ZeroSeparation, "initial state has colliding particles");
  }
  const auto n_steps = static_cast<std::size_t>(std::llround(T / cfg.dt));

  TrajectoryRecord rec;
  auto record = [&](const ParticleState& s, std::size_t k) {
    rec.times.push_back(static_cast<double>(k) * cfg.dt);
    const double kin = kinetic_energy(s);
    rec.H.push_back(kin + potential_energy(params, s));
    rec.log_w.push_back(log_W(params, cfg.lyapunov, s));
    rec.min_dist.push_back(min_pair_distance(s));
    rec.kinetic.push_back(kin);
    rec.q_norm2.push_back(squared_norm_q(s));
  };
  auto snapshot = [&](const ParticleState& s) {
    rec.snapshot_index.push_back(rec.times.size() - 1);
    rec.states.push_back(s);
    rec.rng_states.push_back(rng.serialize());
  };

  ParticleState state = initial;
  record(state, 0);
  snapshot(state);
  for (std::size_t k = 1; k <= n_steps; ++k) {
    StepResult res;
    try {
      res = step(params, cfg, state, rng);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::StepFailure && e.kind() != ErrorKind::CapHit) throw;
      const bool cap = e.kind() == ErrorKind::CapHit;
      rec.termination = cap ? Termination::CapHit : Termination::StepFailure;
      rec.termination_message = e.what();
      rec.events.push_back({k, static_cast<double>(k) * cfg.dt, cap ? EventKind::CapHit : EventKind::StepFailure, 1,
                            e.what()});
      if (rec.snapshot_index.back() != rec.times.size() - 1) snapshot(state);
      return rec;
    }
    state = std::move(res.state);
    if (res.report.halvings > 0) {
      rec.events.push_back({k, static_cast<double>(k) * cfg.dt, EventKind::Halving, res.report.halvings, {}});
      rec.total_halvings += res.report.halvings;
    }
    record(state, k);
    if (k % stride == 0 || k == n_steps) snapshot(state);
  }
  return rec;
}

bool SupermartingaleReport::passed() const {
  return std::none_of(checkpoints.begin(), checkpoints.end(), [](const auto& c) { return c.status == "violated"; });
}

SupermartingaleReport supermartingale_check(const SystemParams& params, const LyapunovParams& lp,
                                            const IntegratorConfig& cfg_in, const DriftBoundFit& fit,
                                            const ParticleState& initial, double T, std::size_t n_replicas,
                                            const SupermartingaleOptions& options) {
  if (n_replicas == 0) throw Error(ErrorKind::InvalidConfig, "supermartingale check needs >= 1 replica");
  if (!(fit.lambda > 0.0)) throw Error(ErrorKind::InvalidConfig, "fit.lambda must be > 0");
  IntegratorConfig cfg = cfg_in;
  cfg.lyapunov = lp;
  cfg.validate();
  const auto n_steps = static_cast<std::size_t>(std::llround(T / cfg.dt));
  const std::size_t n_cp = std::max<std::size_t>(1, options.n_checkpoints);
  std::vector<std::size_t> cp_steps(n_cp + 1);
  for (std::size_t j = 0; j <= n_cp; ++j) cp_steps[j] = (j * n_steps + n_cp / 2) / n_cp;

  // log W per (checkpoint, replica)
  std::vector<std::vector<double>> logw(n_cp + 1, std::vector<double>(n_replicas));
  std::vector<char> stopped(n_replicas, 0);
  std::vector<long> halvings(n_replicas, 0);
  const StreamRng base(cfg.seed, 0);
  const double logw0 = log_W(params, lp, initial);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t r = next++; r < n_replicas; r = next++) {
      try {
        StreamRng rng = base.split(r);
        ParticleState state = initial;
        double current = logw0;
        std::size_t j = 0;
        logw[j++][r] = current;
        for (std::size_t k = 1; k <= n_steps && j <= n_cp; ++k) {
          if (!stopped[r]) {
            try {
              auto res = step(params, cfg, state, rng);
              state = std::move(res.state);
              halvings[r] += res.report.halvings;
            } catch (const Error& e) {
              if (e.kind() != ErrorKind::StepFailure && e.kind() != ErrorKind::CapHit) throw;
              stopped[r] = 1;
            }
          }
          while (j <= n_cp && cp_steps[j] == k) {
            if (!stopped[r]) current = log_W(params, lp, state);
            logw[j++][r] = current;
          }
        }
        while (j <= n_cp) logw[j++][r] = current;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned n_threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_replicas));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  SupermartingaleReport report;
  report.replicas = n_replicas;
  report.stopped_replicas = static_cast<std::size_t>(std::count(stopped.begin(), stopped.end(), 1));
  for (long h : halvings) report.total_halvings += h;

  StreamRng boot(cfg.seed, 1);
  const std::size_t B = std::max<std::size_t>(1, options.bootstrap_resamples);
  std::vector<double> resample(n_replicas), stats(B);
  const double log_floor = fit.log_C_W - std::log(fit.lambda);
  for (std::size_t j = 0; j <= n_cp; ++j) {
    SupermartingaleCheckpoint cp;
    cp.time = static_cast<double>(cp_steps[j]) * cfg.dt;
    cp.log_mean_w = log_mean_exp(logw[j]);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t r = 0; r < n_replicas; ++r) resample[r] = logw[j][boot.next_u64() % n_replicas];
      stats[b] = log_mean_exp(resample);
    }
    std::sort(stats.begin(), stats.end());
    cp.log_ci_low = stats[static_cast<std::size_t>(0.025 * static_cast<double>(B - 1))];
    cp.log_ci_high = stats[static_cast<std::size_t>(std::ceil(0.975 * static_cast<double>(B - 1)))];
    const double terms[] = {-fit.lambda * cp.time + logw0, log_floor};
    cp.log_bound = log_sum_exp(terms);
    if (cp.log_ci_high <= cp.log_bound) {
      cp.status = "below";
    } else if (cp.log_ci_low <= cp.log_bound) {
      cp.status = "inconclusive";
    } else {
      cp.status = "violated";
    }
    report.checkpoints.push_back(cp);
  }
  return report;
}

std::string_view to_string(Scheme scheme) { return scheme == Scheme::BAOAB ? "baoab" : "euler-maruyama"; }

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Halving:
      return "halving";
    case EventKind::CapHit:
      return "cap-hit";
    case EventKind::StepFailure:
      return "step-failure";
  }
  return "unknown";
}

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::Completed:
      return "completed";
    case Termination::StepFailure:
      return "step-failure";
    case Termination::CapHit:
      return "cap-hit";
  }
  return "unknown";
}

}  // namespace clgas
