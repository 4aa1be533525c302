#include "clgas/samplers.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "clgas/error.hpp"

namespace clgas {

namespace {

ParticleState from_positions(const SystemParams& params, std::span<const double> q) {
  if (q.size() != params.N * params.d) {
    throw Error(ErrorKind::DimensionMismatch, "initial_q has " + std::to_string(q.size()) + " coordinates, expected " +
                                                  std::to_string(params.N * params.d));
  }
  ParticleState s(params.N, params.d);
  s.q.assign(q.begin(), q.end());
  if (!s.all_finite()) throw Error(ErrorKind::InvalidConfig, "initial_q is not finite");
  if (params.N > 1 && !(min_pair_distance(s) > 0.0)) {
    throw Error(ErrorKind::ZeroSeparation, "initial_q has coincident particles");
  }
  if (params.d == 1 && !is_ordered_1d(s)) throw Error(ErrorKind::InvalidConfig, "d = 1 initial_q must be increasing");
  return s;
}

}  // namespace

void HmcConfig::validate() const {
  if (leapfrog_steps < 1) throw Error(ErrorKind::InvalidConfig, "sampler.leapfrog_steps must be >= 1");
  if (!(leapfrog_dt > 0.0) || !std::isfinite(leapfrog_dt)) {
    throw Error(ErrorKind::InvalidConfig, "sampler.leapfrog_dt must be > 0");
  }
  if (!(momentum_refresh > 0.0 && momentum_refresh <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "sampler.momentum_refresh must lie in (0, 1]");
  }
  if (n_samples == 0) throw Error(ErrorKind::InvalidConfig, "sampler.n_samples must be >= 1");
  if (thin == 0) throw Error(ErrorKind::InvalidConfig, "sampler.thin must be >= 1");
}

double HmcChain::acceptance_rate() const {
  return n_iterations ? static_cast<double>(n_accepted) / static_cast<double>(n_iterations) : 0.0;
}

double HmcChain::mean_accept_prob() const {
  return n_iterations ? sum_accept_prob / static_cast<double>(n_iterations) : 0.0;
}

double hmc_accept_probability(double beta, double delta_H) {
  if (std::isnan(delta_H)) return 0.0;
  if (delta_H <= 0.0) return 1.0;
  return std::exp(-beta * delta_H);
}

void leapfrog(const SystemParams& params, ParticleState& state, double h, int steps) {
  std::vector<double> g(state.q.size());
  grad_U(params, state, g);
  for (int s = 0; s < steps; ++s) {
    for (std::size_t k = 0; k < g.size(); ++k) state.p[k] -= 0.5 * h * g[k];
    for (std::size_t k = 0; k < g.size(); ++k) state.q[k] += h * state.p[k];
    grad_U(params, state, g);
    for (std::size_t k = 0; k < g.size(); ++k) state.p[k] -= 0.5 * h * g[k];
  }
}

HmcChain hmc_chain(const SystemParams& params, const HmcConfig& cfg, std::span<const double> initial_q) {
  params.validate();
  cfg.validate();
  ParticleState x = from_positions(params, initial_q);
  StreamRng rng(cfg.seed, 0);
  const double sd = 1.0 / std::sqrt(params.beta);
  rng.fill_normal(x.p, sd);
  const double r = cfg.momentum_refresh;
  const double keep = std::sqrt(std::max(0.0, 1.0 - r * r));

  HmcChain chain;
  const std::size_t total = cfg.burn_in + cfg.n_samples * cfg.thin;
  chain.delta_H.reserve(total - cfg.burn_in);
  std::vector<double> xi(x.p.size());
  double h0 = total_energy(params, x);

  for (std::size_t it = 0; it < total; ++it) {
    rng.fill_normal(xi, sd);
    for (std::size_t k = 0; k < xi.size(); ++k) x.p[k] = keep * x.p[k] + r * xi[k];
    h0 = total_energy(params, x);

    ParticleState y = x;
    double delta = std::numeric_limits<double>::infinity();
    double h1 = h0;
    try {
      leapfrog(params, y, cfg.leapfrog_dt, cfg.leapfrog_steps);
      const bool inside = y.all_finite() && (params.N < 2 || min_pair_distance(y) > 0.0) &&
                          (params.d != 1 || is_ordered_1d(y));
      if (inside) {
        h1 = total_energy(params, y);
        if (std::isfinite(h1)) delta = h1 - h0;
      }
      if (!std::isfinite(delta)) chain.events.push_back({it, "proposal left the domain; rejected"});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroSeparation) throw;
      chain.events.push_back({it, std::string("proposal rejected: ") + e.what()});
    }

    const double prob = hmc_accept_probability(params.beta, delta);
    const bool accept = prob >= 1.0 || rng.uniform() < prob;
    if (accept) {
      x = std::move(y);
      h0 = h1;
    } else {
      for (auto& v : x.p) v = -v;
    }

    if (it < cfg.burn_in) continue;
    ++chain.n_iterations;
    chain.n_accepted += accept;
    chain.sum_accept_prob += prob;
    chain.delta_H.push_back(delta);
    if ((it - cfg.burn_in) % cfg.thin == cfg.thin - 1) {
      chain.iteration.push_back(it);
      chain.samples.push_back(x);
      chain.H.push_back(h0);
      chain.accepted.push_back(accept);
    }
  }
  return chain;
}

OverdampedChain overdamped_chain(const SystemParams& params, double dt, std::size_t n_steps,
                                 std::span<const double> initial_q, std::uint64_t seed, std::size_t stride,
                                 double eta, int max_halvings) {
  params.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidConfig, "overdamped dt must be > 0");
  if (stride == 0) throw Error(ErrorKind::InvalidConfig, "stride must be >= 1");
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorKind::InvalidConfig, "eta must lie in (0, 1]");
  ParticleState x = from_positions(params, initial_q);
  StreamRng rng(seed, 0);

  std::vector<double> g(x.q.size());
  SubstepProposal propose = [&](const ParticleState& from, double h, StreamRng& r, ParticleState& out) {
    out = from;
    grad_U(params, from, g);
    const double sigma = std::sqrt(2.0 * h / params.beta);
    for (std::size_t k = 0; k < g.size(); ++k) out.q[k] += -h * g[k] + sigma * r.normal();
  };

  OverdampedChain chain;
  chain.times.push_back(0.0);
  chain.states.push_back(x);
  for (std::size_t n = 1; n <= n_steps; ++n) {
    const StepReport rep = guarded_advance(x, dt, eta, max_halvings, rng, propose);
    const double t = static_cast<double>(n) * dt;
    if (rep.halvings > 0) {
      chain.total_halvings += static_cast<std::size_t>(rep.halvings);
      std::ostringstream msg;
      msg << rep.halvings << " halvings, smallest sub-step " << rep.h_min;
      chain.events.push_back({n, t, EventKind::Halving, rep.halvings, msg.str()});
    }
    if (n % stride == 0 || n == n_steps) {
      chain.times.push_back(t);
      chain.states.push_back(x);
    }
  }
  return chain;
}

SystemParams ginibre_preset(std::size_t n, double beta_tilde) {
  if (!(beta_tilde > 0.0)) throw Error(ErrorKind::InvalidConfig, "beta_tilde must be > 0");
  SystemParams sp;
  sp.N = n;
  sp.d = 2;
  sp.kernel = InteractionKernel::coulomb(2);
  sp.potential = ConfiningPotential::quadratic(0.5);
  sp.beta = static_cast<double>(n) * beta_tilde;
  return sp;
}

}  // namespace clgas
