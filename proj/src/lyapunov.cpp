#include "clgas/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "clgas/error.hpp"

namespace clgas {

namespace {

constexpr double kLemmaTolerance = 1e-9;

// Displacement x = q_i - q_j into `x`, returns |x|.
double separation(const ParticleState& s, std::size_t i, std::size_t j, double* x) {
  double r2 = 0.0;
  for (std::size_t k = 0; k < s.d; ++k) {
    x[k] = s.q[i * s.d + k] - s.q[j * s.d + k];
    r2 += x[k] * x[k];
  }
  if (r2 == 0.0) throw Error(ErrorKind::ZeroSeparation, "particles collide");
  return std::sqrt(r2);
}

// u_i = Σ_{j≠i} (q_i - q_j)/|q_i - q_j|
std::vector<double> unit_sums(const ParticleState& s) {
  std::vector<double> u(s.n * s.d, 0.0), x(s.d);
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t j = i + 1; j < s.n; ++j) {
      const double r = separation(s, i, j, x.data());
      for (std::size_t k = 0; k < s.d; ++k) {
        u[i * s.d + k] += x[k] / r;
        u[j * s.d + k] -= x[k] / r;
      }
    }
  }
  return u;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
  return sum;
}

}  // namespace

double LyapunovValue::w() const { return std::exp(log_w); }

double psi(const SystemParams& params, const LyapunovParams& lp, const ParticleState& state) {
  // Ordered-pair sum Σ_{i≠j}(p_i-p_j)·e_ij equals 2 Σ_i p_i·u_i.
  const auto u = unit_sums(state);
  const double n = static_cast<double>(state.n);
  (void)params;
  return -(2.0 * lp.b / n) * dot(state.p, u) + lp.c * dot(state.p, state.q);
}

double log_W(const SystemParams& params, const LyapunovParams& lp, const ParticleState& state) {
  return lp.a * total_energy(params, state) + psi(params, lp, state);
}

LyapunovValue lyapunov_W(const SystemParams& params, const LyapunovParams& lp, const ParticleState& state) {
  return {log_W(params, lp, state)};
}

double lw_over_w_analytic(const SystemParams& params, const LyapunovParams& lp, const ParticleState& s) {
  const std::size_t n = s.n, d = s.d;
  const double bn = 2.0 * lp.b / static_cast<double>(n);

  // ∂_{p_i}Ψ = -(2b/N) u_i + c q_i
  std::vector<double> dpsi_dp = unit_sums(s);
  for (std::size_t idx = 0; idx < n * d; ++idx) dpsi_dp[idx] = -bn * dpsi_dp[idx] + lp.c * s.q[idx];

  // ∂_{q_i}Ψ = -(2b/N) Σ_{j≠i} [ p_ij/r - (p_ij·x) x / r^3 ] + c p_i; the bracket is antisymmetric in (i, j).
  std::vector<double> dpsi_dq(n * d, 0.0), x(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = separation(s, i, j, x.data());
      double px = 0.0;
      for (std::size_t k = 0; k < d; ++k) px += (s.p[i * d + k] - s.p[j * d + k]) * x[k];
      const double r3 = r * r * r;
      for (std::size_t k = 0; k < d; ++k) {
        const double term = (s.p[i * d + k] - s.p[j * d + k]) / r - px * x[k] / r3;
        dpsi_dq[i * d + k] += term;
        dpsi_dq[j * d + k] -= term;
      }
    }
  }
  for (std::size_t idx = 0; idx < n * d; ++idx) dpsi_dq[idx] = -bn * dpsi_dq[idx] + lp.c * s.p[idx];

  const auto grad_u = grad_U(params, s);

  const double noise = params.gamma / params.beta;
  double transport = 0.0, friction = 0.0, force = 0.0, diffusion = 0.0;
  for (std::size_t idx = 0; idx < n * d; ++idx) {
    const double dp_f = lp.a * s.p[idx] + dpsi_dp[idx];  // ∂_p(aH + Ψ)
    transport += s.p[idx] * dpsi_dq[idx];
    friction += s.p[idx] * dp_f;
    force += grad_u[idx] * dpsi_dp[idx];
    diffusion += dp_f * dp_f;
  }
  return transport - params.gamma * friction - force + noise * diffusion +
         static_cast<double>(n * d) * lp.a * noise;
}

bool ValidationResult::passed() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.passed; });
}

std::string ValidationResult::first_failure() const {
  for (const auto& c : conditions) {
    if (!c.passed) return c.name;
  }
  return {};
}

ValidationResult validate_params(const SystemParams& params, const LyapunovParams& lp,
                                 const AssumptionConstants& ac) {
  const double g = params.gamma, beta = params.beta;
  ValidationResult out;
  auto add = [&](std::string name, double slack) { out.conditions.push_back({std::move(name), slack, slack > 0.0}); };
  add("0<a<beta", std::min(lp.a, beta - lp.a));
  add("b>0", lp.b);
  add("c+eps1+eps2-gamma*a*(1-a/beta)<0", g * lp.a * (1.0 - lp.a / beta) - (lp.c + lp.eps1 + lp.eps2));
  const double tilt = 2.0 * lp.a / beta - 1.0;
  const double cross = lp.eps1 > 0.0 ? g * g * lp.c * lp.c * tilt * tilt / (4.0 * lp.eps1)
                                     : std::numeric_limits<double>::infinity();
  add("gamma^2c^2|2a/beta-1|^2/(4eps1)-c(c1c2/2-2c)<0", lp.c * (ac.c1 * ac.c2 / 2.0 - 2.0 * lp.c) - cross);
  add("c,eps1,eps2>0", std::min({lp.c, lp.eps1, lp.eps2}));
  return out;
}

double singular_pair_sum(const ParticleState& state, double exponent) {
  std::vector<double> x(state.d);
  double sum = 0.0;
  for (std::size_t i = 0; i < state.n; ++i) {
    for (std::size_t j = i + 1; j < state.n; ++j) sum += 2.0 * std::pow(separation(state, i, j, x.data()), -exponent);
  }
  return sum;
}

double drift_bound_rhs(const SystemParams& params, const LyapunovParams& lp, const DriftBoundFit& fit,
                       const ParticleState& state) {
  const double n = static_cast<double>(state.n);
  const double singular = singular_pair_sum(state, singularity_exponent(params.kernel));
  return -fit.alpha * (squared_norm_q(state) + squared_norm_p(state)) - lp.b / (2.0 * n * n) * singular + fit.C;
}

double drift_residual(const SystemParams& params, const LyapunovParams& lp, const ParticleState& state) {
  const double n = static_cast<double>(state.n);
  return lw_over_w_analytic(params, lp, state) +
         lp.b / (2.0 * n * n) * singular_pair_sum(state, singularity_exponent(params.kernel));
}

double j_functional(const ParticleState& state, double exponent) {
  const std::size_t n = state.n, d = state.d;
  std::vector<double> force(n * d, 0.0), unit(n * d, 0.0), x(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = separation(state, i, j, x.data());
      const double fr = std::pow(r, -exponent);
      for (std::size_t k = 0; k < d; ++k) {
        force[i * d + k] += x[k] * fr;
        force[j * d + k] -= x[k] * fr;
        unit[i * d + k] += x[k] / r;
        unit[j * d + k] -= x[k] / r;
      }
    }
  }
  return dot(force, unit);
}

LemmaCheck lemma_check(const ParticleState& state, double exponent) {
  if (state.n < 2) throw Error(ErrorKind::InvalidConfig, "lemma_check requires N >= 2");
  LemmaCheck out;
  out.J = j_functional(state, exponent);
  out.rhs = singular_pair_sum(state, exponent - 1.0);
  out.slack = out.J - out.rhs;
  out.holds = out.slack >= -kLemmaTolerance * out.rhs;
  return out;
}

CoercivityRadii coercivity_radii(const SystemParams& params, double R, const AssumptionConstants& ac) {
  if (!(R > 0.0)) throw Error(ErrorKind::InvalidConfig, "coercivity radius R must be > 0");
  if (params.kernel.family != KernelFamily::Coulomb) {
    throw Error(ErrorKind::InvalidConfig, "coercivity radii are defined for the Coulomb family");
  }
  const double n = static_cast<double>(params.N);
  const int d = static_cast<int>(params.d);
  // Σ V(q_i) >= c1|q|^2 - N M, hence the N M below.
  const double m_total = n * ac.M;
  CoercivityRadii out;
  if (d >= 3) {
    out.R1 = std::sqrt(2.0 * R);
    out.R2 = std::sqrt((m_total + R) / ac.c1);
    // Pair energy is K/(d-2) under the paper normalization for d >= 4.
    const double scale = params.kernel.energy_at(1.0);
    out.r = std::pow(scale / (2.0 * n * R), 1.0 / (d - 2.0));
  } else {
    const double shift = R + m_total + n / (2.0 * ac.c1);
    out.R1 = std::sqrt(2.0 * shift);
    out.R2 = std::sqrt(2.0 / ac.c1 * shift);
    out.r = std::exp(-n * (R + std::sqrt(n) * out.R2));
  }
  return out;
}

StateSampler::StateSampler(std::size_t n, std::size_t d, std::uint64_t seed, std::uint64_t stream)
    : n_(n), d_(d), rng_(seed, stream) {}

ParticleState StateSampler::gaussian(double sigma_q, double sigma_p) {
  ParticleState s(n_, d_);
  do {
    rng_.fill_normal(s.q, sigma_q);
  } while (n_ >= 2 && min_pair_distance(s) < 1e-3 * sigma_q);
  rng_.fill_normal(s.p, sigma_p);
  return s;
}

ParticleState StateSampler::near_collision(double sigma_q, double sigma_p) {
  ParticleState s = gaussian(sigma_q, sigma_p);
  if (n_ < 2) return s;
  // Pull particle j to within log-uniform distance [1e-3, 1e-1] of particle i.
  const std::size_t i = rng_.next_u32() % n_;
  std::size_t j = rng_.next_u32() % (n_ - 1);
  if (j >= i) ++j;
  const double dist = std::pow(10.0, -3.0 + 2.0 * rng_.uniform());
  std::vector<double> dir(d_);
  double norm = 0.0;
  while (norm == 0.0) {
    rng_.fill_normal(dir);
    norm = std::sqrt(dot(dir, dir));
  }
  for (std::size_t k = 0; k < d_; ++k) s.q[j * d_ + k] = s.q[i * d_ + k] + dist * dir[k] / norm;
  if (min_pair_distance(s) == 0.0) return near_collision(sigma_q, sigma_p);
  return s;
}

ParticleState StateSampler::far_field(double sigma_p) {
  const double scale = 10.0 + 20.0 * rng_.uniform();
  return gaussian(scale, sigma_p);
}

ParticleState StateSampler::next() {
  static constexpr double kScalesQ[] = {0.1, 0.3, 1.0, 3.0};
  static constexpr double kScalesP[] = {0.1, 0.3, 1.0, 3.0, 10.0};
  const double sq = kScalesQ[rng_.next_u32() % std::size(kScalesQ)];
  const double sp = kScalesP[rng_.next_u32() % std::size(kScalesP)];
  const std::uint32_t route = rng_.next_u32() % 10;
  if (route < 6) return gaussian(sq, sp);
  if (route < 9) return near_collision(sq, sp);
  return far_field(sp);
}

std::vector<ParticleState> StateSampler::draw(std::size_t count) {
  std::vector<ParticleState> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(next());
  return out;
}

namespace {

struct HullPoint {
  double a, y;
};

// Upper concave hull of (A, y), sorted by A.
std::vector<HullPoint> upper_hull(std::vector<HullPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& l, const auto& r) { return l.a < r.a || (l.a == r.a && l.y > r.y); });
  std::vector<HullPoint> hull;
  for (const auto& pt : pts) {
    if (!hull.empty() && hull.back().a == pt.a) continue;  // keep max y per A
    while (hull.size() >= 2) {
      const auto& o = hull[hull.size() - 2];
      const auto& m = hull.back();
      // Pop m if it lies on or below the chord o -> pt.
      if ((m.a - o.a) * (pt.y - o.y) - (m.y - o.y) * (pt.a - o.a) >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(pt);
  }
  return hull;
}

double squared_norm_state(const ParticleState& s) { return squared_norm_q(s) + squared_norm_p(s); }

struct AscentResult {
  double best = -std::numeric_limits<double>::infinity();
  bool escaped = false;
};

// Stochastic pattern search maximizing y(x) + alpha A(x).
AscentResult ascend(const SystemParams& params, const LyapunovParams& lp, double alpha, ParticleState x,
                    double escape_a, int iterations, StreamRng rng) {
  auto objective = [&](const ParticleState& s) {
    return drift_residual(params, lp, s) + alpha * squared_norm_state(s);
  };
  AscentResult out;
  double current = objective(x);
  double step = 0.1 * std::sqrt(1.0 + squared_norm_state(x) / static_cast<double>(x.q.size()));
  int failures = 0;
  ParticleState trial = x;
  for (int it = 0; it < iterations && step > 1e-7; ++it) {
    const double local = std::min(step, 0.25 * min_pair_distance(x));
    for (std::size_t k = 0; k < x.q.size(); ++k) {
      trial.q[k] = x.q[k] + local * rng.normal();
      trial.p[k] = x.p[k] + step * rng.normal();
    }
    double value;
    try {
      value = objective(trial);
    } catch (const Error&) {
      continue;
    }
    if (value > current) {
      std::swap(x, trial);
      current = value;
      failures = 0;
      step *= 1.5;
      if (squared_norm_state(x) > escape_a) {
        out.escaped = true;
        break;
      }
    } else if (++failures >= 30) {
      step *= 0.5;
      failures = 0;
    }
  }
  out.best = current;
  return out;
}

}  // namespace

DriftBoundFit fit_drift_constants(const SystemParams& params, const LyapunovParams& lp,
                                  std::span<const ParticleState> samples, const FitOptions& options) {
  if (samples.empty()) throw Error(ErrorKind::InfeasibleFit, "no samples");
  const std::size_t m = samples.size();
  std::vector<double> A(m), y(m), lww(m), logw(m);
  for (std::size_t k = 0; k < m; ++k) {
    A[k] = squared_norm_state(samples[k]);
    lww[k] = lw_over_w_analytic(params, lp, samples[k]);
    y[k] = drift_residual(params, lp, samples[k]);
    logw[k] = log_W(params, lp, samples[k]);
  }

  // LP: the optimum is the hull edge straddling the mean of A.
  std::vector<HullPoint> pts(m);
  for (std::size_t k = 0; k < m; ++k) pts[k] = {A[k], y[k]};
  const auto hull = upper_hull(pts);
  const double mean_a = std::accumulate(A.begin(), A.end(), 0.0) / static_cast<double>(m);
  double alpha = 0.0;
  if (hull.size() == 1) {
    // Flat objective; take C = max(0, y) and the sample ratio for alpha.
    const double c0 = std::max(0.0, hull[0].y);
    alpha = (c0 - hull[0].y) / hull[0].a;
  } else {
    std::size_t e = 0;
    while (e + 2 < hull.size() && hull[e + 1].a <= mean_a) ++e;
    alpha = -(hull[e + 1].y - hull[e].y) / (hull[e + 1].a - hull[e].a);
  }
  if (!(alpha > 0.0)) {
    throw Error(ErrorKind::InfeasibleFit, "no alpha > 0 fits the samples (upper-hull slope at mean |x|^2 is >= 0)");
  }

  DriftBoundFit fit;
  fit.n_samples = m;
  const double max_a = *std::max_element(A.begin(), A.end());
  for (;;) {
    double c_lp = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) c_lp = std::max(c_lp, y[k] + alpha * A[k]);

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t starts = std::min<std::size_t>(m, static_cast<std::size_t>(std::max(0, options.ascent_starts)));
    std::partial_sort(order.begin(), order.begin() + starts, order.end(), [&](std::size_t l, std::size_t r) {
      return y[l] + alpha * A[l] > y[r] + alpha * A[r];
    });
    double c_sup = c_lp;
    bool escaped = false;
    StreamRng rng(options.seed, 0);
    for (std::size_t s = 0; s < starts && !escaped; ++s) {
      const auto res = ascend(params, lp, alpha, samples[order[s]], 100.0 * std::max(max_a, 1.0),
                              options.ascent_iterations, rng.split(s));
      escaped = res.escaped;
      c_sup = std::max(c_sup, res.best);
    }
    if (!escaped) {
      fit.alpha = alpha;
      fit.C = c_sup;
      fit.C_lp = c_lp;
      break;
    }
    if (++fit.alpha_halvings > options.max_alpha_halvings) {
      throw Error(ErrorKind::InfeasibleFit, "drift bound supremum unbounded for every tried alpha");
    }
    alpha *= 0.5;
  }

  // lambda: min of -LW/W over {W >= R}. For each candidate R the W-scale
  // constant is C_W = max over the remaining samples of W (LW/W + lambda)^+,
  // and R is chosen to minimize the stationary level C_W / lambda.
  std::vector<std::size_t> by_w(m);
  std::iota(by_w.begin(), by_w.end(), 0);
  std::sort(by_w.begin(), by_w.end(), [&](std::size_t l, std::size_t r) { return logw[l] > logw[r]; });
  auto log_c_w = [&](std::size_t first, double lambda) {
    double out = -std::numeric_limits<double>::infinity();
    for (std::size_t idx = first; idx < m; ++idx) {
      const std::size_t k = by_w[idx];
      if (lww[k] + lambda > 0.0) out = std::max(out, logw[k] + std::log(lww[k] + lambda));
    }
    return out;
  };
  double suffix_min = std::numeric_limits<double>::infinity();
  double best_level = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < m; ++idx) {
    const std::size_t k = by_w[idx];
    suffix_min = std::min(suffix_min, -lww[k]);
    if (!(suffix_min > 0.0)) break;
    if (idx + 1 < m && logw[by_w[idx + 1]] == logw[k]) continue;
    // For a fixed lambda the largest admissible high set gives the smallest C_W.
    if (idx + 1 < m && -lww[by_w[idx + 1]] >= suffix_min) continue;
    const double lcw = log_c_w(idx + 1, suffix_min);
    const double level = lcw - std::log(suffix_min);
    if (level < best_level || fit.lambda == 0.0) {
      best_level = level;
      fit.lambda = suffix_min;
      fit.log_R = logw[k];
      fit.log_C_W = lcw;
    }
  }
  if (!(fit.lambda > 0.0)) throw Error(ErrorKind::InfeasibleFit, "LW/W is not negative on any upper W level set");
  return fit;
}

DriftBoundFit fit_drift_constants(const SystemParams& params, const LyapunovParams& lp, StateSampler& sampler,
                                  std::size_t n_samples, const FitOptions& options) {
  if (n_samples < 100) throw Error(ErrorKind::InvalidConfig, "fit_drift_constants needs >= 100 samples");
  const auto samples = sampler.draw(n_samples);
  return fit_drift_constants(params, lp, samples, options);
}

DriftBoundTest test_drift_bound(const SystemParams& params, const LyapunovParams& lp, const DriftBoundFit& fit,
                                std::span<const ParticleState> samples) {
  DriftBoundTest out;
  out.n_samples = samples.size();
  out.worst_margin = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const double margin = lw_over_w_analytic(params, lp, s) - drift_bound_rhs(params, lp, fit, s);
    out.violations += margin > 0.0;
    out.worst_margin = std::max(out.worst_margin, margin);
  }
  return out;
}

std::vector<LemmaSweepCase> lemma_sweep(std::size_t count, std::uint64_t seed, std::size_t n_min, std::size_t n_max,
                                        std::size_t d_min, std::size_t d_max) {
  if (n_min < 2 || n_max < n_min || d_min < 1 || d_max < d_min) {
    throw Error(ErrorKind::InvalidConfig, "lemma_sweep needs 2 <= n_min <= n_max and 1 <= d_min <= d_max");
  }
  StreamRng pick(seed, 0);
  std::vector<LemmaSweepCase> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    LemmaSweepCase c;
    c.n = n_min + pick.next_u64() % (n_max - n_min + 1);
    c.d = d_min + pick.next_u64() % (d_max - d_min + 1);
    c.exponent = static_cast<double>(c.d);
    c.near_collision = k % 2 == 1;
    StateSampler sampler(c.n, c.d, seed, k + 1);
    const auto s = c.near_collision ? sampler.near_collision(1.0, 1.0) : sampler.gaussian(1.0, 1.0);
    c.check = lemma_check(s, c.exponent);
    out.push_back(c);
  }
  return out;
}

}  // namespace clgas
