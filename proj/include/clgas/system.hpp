#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clgas/kernels.hpp"
#include "clgas/potentials.hpp"

namespace clgas {

/// Positions and momenta of N particles in R^d, stored row-major
/// (particle-major, coordinate-minor).
struct ParticleState {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> q;
  std::vector<double> p;

  ParticleState() = default;
  ParticleState(std::size_t n_particles, std::size_t dim)
      : n(n_particles), d(dim), q(n_particles * dim, 0.0), p(n_particles * dim, 0.0) {}

  std::span<double> qi(std::size_t i) { return {q.data() + i * d, d}; }
  std::span<const double> qi(std::size_t i) const { return {q.data() + i * d, d}; }
  std::span<double> pi(std::size_t i) { return {p.data() + i * d, d}; }
  std::span<const double> pi(std::size_t i) const { return {p.data() + i * d, d}; }

  bool all_finite() const;
  bool operator==(const ParticleState&) const = default;
};

struct SystemParams {
  std::size_t N = 2;
  std::size_t d = 2;
  double gamma = 1.0;
  double beta = 1.0;
  InteractionKernel kernel = InteractionKernel::coulomb(2);
  ConfiningPotential potential = ConfiningPotential::quadratic(1.0);

  /// Throws ValidationError on inconsistent fields.
  void validate() const;
};

/// U(q) = Σ V(q_i) + (1/2N) Σ_{i≠j} K(q_i - q_j), pair energy per the kernel's
/// normalization so that grad_U is its exact gradient.
double potential_energy(const SystemParams& params, const ParticleState& state);
double kinetic_energy(const ParticleState& state);
/// H = |p|^2/2 + U(q).
double total_energy(const SystemParams& params, const ParticleState& state);

/// ∂U/∂q_i for every particle into `out` (N*d). Each unordered pair is
/// visited once in lexicographic order, so the result is bit-reproducible.
void grad_U(const SystemParams& params, const ParticleState& state, std::span<double> out);
std::vector<double> grad_U(const SystemParams& params, const ParticleState& state);

/// min_{i<j} |q_i - q_j|; +∞ when N < 2.
double min_pair_distance(const ParticleState& state);

/// Σ_i |q_i|^2 (i.e. |q|^2 of the stacked vector).
double squared_norm_q(const ParticleState& state);
double squared_norm_p(const ParticleState& state);

/// d = 1 runs live on the ordered component q_1 < ... < q_N.
bool is_ordered_1d(const ParticleState& state);

}  // namespace clgas
