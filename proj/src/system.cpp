#include "clgas/system.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "clgas/error.hpp"

namespace clgas {

namespace {

void check_shape(const SystemParams& params, const ParticleState& state) {
  if (state.n != params.N || state.d != params.d || state.q.size() != state.n * state.d ||
      state.p.size() != state.n * state.d) {
    throw Error(ErrorKind::DimensionMismatch, "state shape (" + std::to_string(state.n) + "x" +
                                                  std::to_string(state.d) + ") does not match system (" +
                                                  std::to_string(params.N) + "x" +
                                                  std::to_string(params.d) + ")");
  }
}

double pair_distance(const ParticleState& state, std::size_t i, std::size_t j) {
  double r2 = 0.0;
  for (std::size_t k = 0; k < state.d; ++k) {
    const double diff = state.q[i * state.d + k] - state.q[j * state.d + k];
    r2 += diff * diff;
  }
  return std::sqrt(r2);
}

}  // namespace

bool ParticleState::all_finite() const {
  for (double v : q) {
    if (!std::isfinite(v)) return false;
  }
  for (double v : p) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void SystemParams::validate() const {
  if (N < 1) throw Error(ErrorKind::ValidationError, "system.N must be >= 1");
  if (d < 1) throw Error(ErrorKind::ValidationError, "system.d must be >= 1");
  if (!(gamma > 0.0)) throw Error(ErrorKind::ValidationError, "system.gamma must be > 0");
  if (!(beta > 0.0)) throw Error(ErrorKind::ValidationError, "system.beta must be > 0");
  kernel.validate();
  if (static_cast<std::size_t>(kernel.dimension) != d) {
    throw Error(ErrorKind::ValidationError, "kernel dimension " + std::to_string(kernel.dimension) +
                                                " does not match system.d " + std::to_string(d));
  }
}

double potential_energy(const SystemParams& params, const ParticleState& state) {
  check_shape(params, state);
  double external = 0.0;
  for (std::size_t i = 0; i < state.n; ++i) external += params.potential.value(state.qi(i));
  double pairs = 0.0;
  for (std::size_t i = 0; i < state.n; ++i) {
    for (std::size_t j = i + 1; j < state.n; ++j) {
      const double r = pair_distance(state, i, j);
      if (r == 0.0) throw Error(ErrorKind::ZeroSeparation, "particles collide in potential_energy");
      pairs += params.kernel.energy_at(r);
    }
  }
  // (1/2N) over ordered pairs == (1/N) over unordered pairs.
  return external + pairs / static_cast<double>(state.n);
}

double kinetic_energy(const ParticleState& state) { return 0.5 * squared_norm_p(state); }

double total_energy(const SystemParams& params, const ParticleState& state) {
  return kinetic_energy(state) + potential_energy(params, state);
}

void grad_U(const SystemParams& params, const ParticleState& state, std::span<double> out) {
  check_shape(params, state);
  const std::size_t n = state.n, d = state.d;
  if (out.size() != n * d) throw Error(ErrorKind::DimensionMismatch, "grad_U output has wrong size");
  for (std::size_t i = 0; i < n; ++i) params.potential.gradient(state.qi(i), out.subspan(i * d, d));
  const double inv_n = 1.0 / static_cast<double>(n);
  double diff[16];
  std::vector<double> diff_heap(d > 16 ? d : 0);
  double* x = d > 16 ? diff_heap.data() : diff;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        x[k] = state.q[i * d + k] - state.q[j * d + k];
        r2 += x[k] * x[k];
      }
      if (r2 == 0.0) throw Error(ErrorKind::ZeroSeparation, "particles collide in grad_U");
      // ∂/∂q_i of (1/N) E(|q_i - q_j|) is (1/N) ∇E(q_i - q_j); opposite sign for q_j.
      const double g = params.kernel.gradient_factor_at(std::sqrt(r2)) * inv_n;
      for (std::size_t k = 0; k < d; ++k) {
        out[i * d + k] += g * x[k];
        out[j * d + k] -= g * x[k];
      }
    }
  }
}

std::vector<double> grad_U(const SystemParams& params, const ParticleState& state) {
  std::vector<double> out(state.n * state.d);
  grad_U(params, state, out);
  return out;
}

double min_pair_distance(const ParticleState& state) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.n; ++i) {
    for (std::size_t j = i + 1; j < state.n; ++j) best = std::min(best, pair_distance(state, i, j));
  }
  return best;
}

double squared_norm_q(const ParticleState& state) {
  double sum = 0.0;
  for (double v : state.q) sum += v * v;
  return sum;
}

double squared_norm_p(const ParticleState& state) {
  double sum = 0.0;
  for (double v : state.p) sum += v * v;
  return sum;
}

bool is_ordered_1d(const ParticleState& state) {
  if (state.d != 1) return false;
  for (std::size_t i = 1; i < state.n; ++i) {
    if (!(state.q[i - 1] < state.q[i])) return false;
  }
  return true;
}

}  // namespace clgas
