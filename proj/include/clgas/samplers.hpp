#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clgas/integrators.hpp"
#include "clgas/system.hpp"

namespace clgas {

struct HmcConfig {
  int leapfrog_steps = 10;
  double leapfrog_dt = 0.05;
  double momentum_refresh = 1.0;  // r in p <- sqrt(1 - r^2) p + r ξ/√β; 1 = full refresh
  std::uint64_t seed = 0;
  std::size_t n_samples = 1000;
  std::size_t burn_in = 100;
  std::size_t thin = 1;  // keep every thin-th post-burn-in state

  void validate() const;
};

struct HmcEvent {
  std::size_t iteration = 0;
  std::string message;
};

struct HmcChain {
  std::vector<std::size_t> iteration;  // of each kept sample
  std::vector<ParticleState> samples;  // (q, p) after the accept/reject of that iteration
  std::vector<double> H;
  std::vector<char> accepted;

  // Over every post-burn-in iteration, kept or not.
  std::vector<double> delta_H;  // +inf for proposals that left the domain
  std::size_t n_iterations = 0;
  std::size_t n_accepted = 0;
  double sum_accept_prob = 0.0;  // Σ min(1, e^{-βΔH})
  std::vector<HmcEvent> events;

  double acceptance_rate() const;
  double mean_accept_prob() const;
};

/// Metropolis probability min(1, e^{-βΔH}), 0 for non-finite or +inf ΔH.
double hmc_accept_probability(double beta, double delta_H);

/// Leapfrog under H = |p|^2/2 + U for `steps` steps of size h, in place.
/// Throws ZeroSeparation if an intermediate position collides.
void leapfrog(const SystemParams& params, ParticleState& state, double h, int steps);

/// HMC targeting π ∝ e^{-βH}. Momenta start from the β-scaled Gaussian;
/// rejected proposals negate the momentum. A proposal that collides, turns
/// non-finite, or (d = 1) loses the ordering is rejected and logged.
HmcChain hmc_chain(const SystemParams& params, const HmcConfig& cfg, std::span<const double> initial_q);

struct OverdampedChain {
  std::vector<double> times;
  std::vector<ParticleState> states;  // p is unused and left at zero
  std::size_t total_halvings = 0;
  std::vector<TrajectoryEvent> events;  // Halving only
};

/// Euler-Maruyama for dq = -∇U dt + sqrt(2/β) dB under the integrator's
/// halving guard. Keeps the initial state and every `stride`-th step.
OverdampedChain overdamped_chain(const SystemParams& params, double dt, std::size_t n_steps,
                                 std::span<const double> initial_q, std::uint64_t seed, std::size_t stride = 1,
                                 double eta = 0.5, int max_halvings = 30);

/// d = 2, log kernel, V(q) = |q|^2/2, β = N β̃. At β̃ = 2 the Gibbs position
/// law is the Ginibre eigenvalue law rescaled to the unit disk.
SystemParams ginibre_preset(std::size_t n, double beta_tilde = 2.0);

}  // namespace clgas
