#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clgas/rng.hpp"
#include "clgas/system.hpp"

namespace clgas {

/// Parameters of W = exp(aH + Ψ) and of the slack bookkeeping (ε1, ε2).
struct LyapunovParams {
  double a = 0.5;
  double b = 0.05;
  double c = 0.1;
  double eps1 = 0.05;
  double eps2 = 0.05;
};

/// Fitted drift constants.
///
///   LW/W <= -alpha (|q|^2 + |p|^2) - b/(2N^2) Σ_{i≠j} |q_ij|^{-e} + C
///   LW   <= -lambda W + C_W
///
/// lambda = min of -LW/W over sampled states with W >= R, and C_W is the
/// sample maximum of W (LW/W + lambda) over the states below R.
///
/// These are properties of the sample set that produced them, not closed-form
/// constants.
struct DriftBoundFit {
  double alpha = 0.0;
  double C = 0.0;
  double lambda = 0.0;
  double log_R = 0.0;   // sublevel threshold used for lambda (log W scale)
  double log_C_W = 0.0; // log of the W-scale constant
  double C_lp = 0.0;    // C from the sample LP alone, before local refinement
  int alpha_halvings = 0;
  std::size_t n_samples = 0;
};

double psi(const SystemParams& params, const LyapunovParams& lp, const ParticleState& state);

/// log W = aH + Ψ. W itself overflows near collisions; use `w()` only for output.
struct LyapunovValue {
  double log_w = 0.0;
  double w() const;
};
LyapunovValue lyapunov_W(const SystemParams& params, const LyapunovParams& lp, const ParticleState& state);
double log_W(const SystemParams& params, const LyapunovParams& lp, const ParticleState& state);

/// Closed-form (LW)/W assembled from the exact partials of H and Ψ.
double lw_over_w_analytic(const SystemParams& params, const LyapunovParams& lp, const ParticleState& state);

struct ConditionSlack {
  std::string name;
  double slack = 0.0;  // > 0 means the strict inequality holds
  bool passed = false;
};

struct ValidationResult {
  std::vector<ConditionSlack> conditions;
  bool passed() const;
  /// First failing condition's name, empty if all pass.
  std::string first_failure() const;
};

/// The admissibility conditions on (a, b, c, ε1, ε2):
///   0 < a < β;  b > 0;  c + ε1 + ε2 - γa(1 - a/β) < 0;
///   γ²c²|2a/β - 1|²/(4ε1) - c(c1 c2/2 - 2c) < 0.
ValidationResult validate_params(const SystemParams& params, const LyapunovParams& lp,
                                 const AssumptionConstants& ac);

/// Σ_{i≠j} |q_i - q_j|^{-exponent} over ordered pairs.
double singular_pair_sum(const ParticleState& state, double exponent);

double drift_bound_rhs(const SystemParams& params, const LyapunovParams& lp, const DriftBoundFit& fit,
                       const ParticleState& state);

/// J(q) = Σ_i (Σ_{j≠i} (q_i-q_j)/|q_i-q_j|^e) · (Σ_{k≠i} (q_i-q_k)/|q_i-q_k|).
double j_functional(const ParticleState& state, double exponent);

struct LemmaCheck {
  double J = 0.0;
  double rhs = 0.0;  // Σ_{i≠j} |q_i-q_j|^{-(e-1)}
  double slack = 0.0;
  bool holds = false;  // slack >= -1e-9 * rhs
};
LemmaCheck lemma_check(const ParticleState& state, double exponent);

struct CoercivityRadii {
  double R1 = 0.0;  // |p| >= R1  =>  H >= R
  double R2 = 0.0;  // |q| >= R2  =>  H >= R
  double r = 0.0;   // min distance <= r (with |p| < R1, |q| < R2)  =>  H >= R
};
CoercivityRadii coercivity_radii(const SystemParams& params, double R, const AssumptionConstants& ac);

/// Mixture sampler of states for drift verification: Gaussian clouds at
/// several scales, near-collision pairs, and far-field configurations.
class StateSampler {
 public:
  StateSampler(std::size_t n, std::size_t d, std::uint64_t seed, std::uint64_t stream = 0);

  ParticleState next();
  std::vector<ParticleState> draw(std::size_t count);

  ParticleState gaussian(double sigma_q, double sigma_p);
  ParticleState near_collision(double sigma_q, double sigma_p);
  ParticleState far_field(double sigma_p);

 private:
  std::size_t n_, d_;
  StreamRng rng_;
};

struct FitOptions {
  /// Starting points for the local ascent that refines C.
  int ascent_starts = 8;
  int ascent_iterations = 4000;
  int max_alpha_halvings = 6;
  std::uint64_t seed = 0x51f7;
};

/// Fits (alpha, C, lambda) on the given training states.
///
/// alpha comes from the linear program  min Σ_k (C - αA_k)  s.t.
/// C - αA_k >= y_k, α >= 0, where A = |q|^2+|p|^2 and y = LW/W + singular
/// term; its solution is the upper-hull edge of {(A_k, y_k)} above the mean
/// A. C is then raised to the supremum of y + αA found by local ascent from
/// the highest samples; if that ascent escapes to infinity alpha is halved.
/// Throws InfeasibleFit when alpha <= 0.
DriftBoundFit fit_drift_constants(const SystemParams& params, const LyapunovParams& lp,
                                  std::span<const ParticleState> samples, const FitOptions& options = {});
DriftBoundFit fit_drift_constants(const SystemParams& params, const LyapunovParams& lp, StateSampler& sampler,
                                  std::size_t n_samples, const FitOptions& options = {});

/// y = LW/W + b/(2N^2) Σ|q_ij|^{-e}; the fit requires y <= C - αA.
double drift_residual(const SystemParams& params, const LyapunovParams& lp, const ParticleState& state);

struct DriftBoundTest {
  std::size_t n_samples = 0;
  std::size_t violations = 0;  // states with LW/W > drift_bound_rhs
  double worst_margin = 0.0;   // max of LW/W - rhs (negative when all hold)
};
DriftBoundTest test_drift_bound(const SystemParams& params, const LyapunovParams& lp, const DriftBoundFit& fit,
                                std::span<const ParticleState> samples);

struct LemmaSweepCase {
  std::size_t n = 0;
  std::size_t d = 0;
  double exponent = 0.0;
  bool near_collision = false;
  LemmaCheck check;
};

/// `count` configurations with N uniform on [n_min, n_max] and d on
/// [d_min, d_max], alternating Gaussian clouds and near-collision pairs,
/// each checked at the Coulomb exponent d. Deterministic in `seed`.
std::vector<LemmaSweepCase> lemma_sweep(std::size_t count, std::uint64_t seed, std::size_t n_min = 2,
                                        std::size_t n_max = 8, std::size_t d_min = 2, std::size_t d_max = 4);

}  // namespace clgas
