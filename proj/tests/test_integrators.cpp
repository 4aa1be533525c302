#include <cmath>
#include <vector>

#include "clgas/diagnostics.hpp"
#include "clgas/error.hpp"
#include "clgas/integrators.hpp"
#include "doctest.h"

using namespace clgas;

namespace {

ConfiningPotential zero_potential() {
  return ConfiningPotential::user([](std::span<const double>) { return 0.0; },
                                  [](std::span<const double>, std::span<double> g) {
                                    for (auto& v : g) v = 0.0;
                                  });
}

SystemParams make_params(std::size_t n, std::size_t d, ConfiningPotential v = ConfiningPotential::quadratic(1.0)) {
  SystemParams sp;
  sp.N = n;
  sp.d = d;
  sp.kernel = d == 1 ? InteractionKernel::log1d() : InteractionKernel::coulomb(static_cast<int>(d));
  sp.potential = std::move(v);
  return sp;
}

ParticleState ring(std::size_t n, double radius) {
  ParticleState s(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double th = 2 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    s.q[2 * i] = radius * std::cos(th);
    s.q[2 * i + 1] = radius * std::sin(th);
  }
  return s;
}

}  // namespace

TEST_CASE("BAOAB with zero force reproduces the exact OU momentum law") {
  auto sp = make_params(1, 2, zero_potential());
  sp.gamma = 1.3;
  sp.beta = 2.0;
  IntegratorConfig cfg{.dt = 0.2};
  ParticleState s0(1, 2);
  s0.p = {1.0, -2.0};
  StreamRng rng(5, 0);
  const int reps = 100000;
  double m0 = 0, m1 = 0, v0 = 0;
  for (int k = 0; k < reps; ++k) {
    const auto res = step(sp, cfg, s0, rng);
    m0 += res.state.p[0];
    m1 += res.state.p[1];
    const double c = res.state.p[0] - std::exp(-sp.gamma * cfg.dt) * s0.p[0];
    v0 += c * c;
  }
  m0 /= reps;
  m1 /= reps;
  v0 /= reps;
  const double decay = std::exp(-sp.gamma * cfg.dt);
  const double var = (1 - decay * decay) / sp.beta;
  CHECK(std::abs(m0 - decay * 1.0) < 3 * std::sqrt(var / reps));
  CHECK(std::abs(m1 - decay * -2.0) < 3 * std::sqrt(var / reps));
  CHECK(std::abs(v0 - var) < 3 * var * std::sqrt(2.0 / reps));
}

TEST_CASE("noiseless frictionless BAOAB has O(dt^2) energy error") {
  auto sp = make_params(1, 2);
  sp.gamma = 0.0;
  ParticleState s0(1, 2);
  s0.q = {1.0, 0.0};
  s0.p = {0.0, 0.7};
  auto max_error = [&](double dt) {
    IntegratorConfig cfg{.dt = dt, .noise = false};
    StreamRng rng(1, 0);
    ParticleState s = s0;
    const double h0 = total_energy(sp, s0);
    double worst = 0;
    for (int k = 0; k < static_cast<int>(std::lround(10.0 / dt)); ++k) {
      s = step(sp, cfg, s, rng).state;
      worst = std::max(worst, std::abs(total_energy(sp, s) - h0));
    }
    return worst;
  };
  const double coarse = max_error(0.01), fine = max_error(0.005);
  CHECK(coarse < 1e-3);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("near-collision step halves and keeps particles apart") {
  const auto sp = make_params(2, 2);
  ParticleState s(2, 2);
  s.q = {0, 0, 0.01, 0};
  s.p = {1, 0, -1, 0};
  StreamRng rng(2, 0);
  IntegratorConfig cfg{.dt = 0.01};
  for (auto scheme : {Scheme::BAOAB, Scheme::EulerMaruyama}) {
    cfg.scheme = scheme;
    const auto res = step(sp, cfg, s, rng);
    CHECK(res.report.halvings >= 1);
    CHECK(res.report.min_dist_after > 0.0);
    CHECK(res.report.substeps == res.report.halvings + 1);
  }
}

TEST_CASE("step failure and cap hit leave the caller's state untouched") {
  const auto sp = make_params(2, 2);
  ParticleState s(2, 2);
  s.q = {0, 0, 0.01, 0};
  s.p = {100, 0, -100, 0};
  StreamRng rng(3, 0);
  const StreamRng before = rng;
  IntegratorConfig cfg{.dt = 0.1, .max_halvings = 2};
  try {
    step(sp, cfg, s, rng);
    FAIL("expected StepFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StepFailure);
  }
  CHECK(rng == before);

  ParticleState calm(2, 2);
  calm.q = {0, 0, 1, 0};
  IntegratorConfig capped{.dt = 0.01, .W_cap_log = log_W(sp, LyapunovParams{}, calm) - 1.0};
  CHECK_THROWS_AS(step(sp, capped, calm, rng), Error);
  CHECK_THROWS_AS(step(sp, IntegratorConfig{.dt = 0.0}, calm, rng), Error);
  CHECK_THROWS_AS(step(sp, IntegratorConfig{.eta = 1.5}, calm, rng), Error);
}

TEST_CASE("simulate: T = 0 and determinism") {
  const auto sp = make_params(3, 2);
  const auto s0 = ring(3, 1.0);
  IntegratorConfig cfg{.dt = 0.01, .seed = 77};
  const auto zero = simulate(sp, cfg, s0, 0.0, 10);
  REQUIRE(zero.states.size() == 1);
  CHECK(zero.states[0] == s0);
  CHECK(zero.times == std::vector{0.0});

  const auto a = simulate(sp, cfg, s0, 2.0, 7);
  const auto b = simulate(sp, cfg, s0, 2.0, 7);
  CHECK(a.states == b.states);
  CHECK(a.H == b.H);
  CHECK(a.log_w == b.log_w);
  CHECK(a.rng_states == b.rng_states);
  CHECK(a.size() == 201);
  CHECK(a.snapshot_index.back() == 200);
  for (std::size_t k = 1; k < a.times.size(); ++k) CHECK(a.times[k] > a.times[k - 1]);

  cfg.seed = 78;
  CHECK(simulate(sp, cfg, s0, 2.0, 7).states != a.states);
}

TEST_CASE("simulate: N = 4 stays collision-free to T = 100") {
  const auto sp = make_params(4, 2);
  IntegratorConfig cfg{.dt = 0.005, .seed = 11};
  const auto rec = simulate(sp, cfg, ring(4, 0.8), 100.0, 1000);
  CHECK(rec.termination == Termination::Completed);
  CHECK(rec.size() == 20001);
  for (std::size_t k = 0; k < rec.size(); ++k) {
    REQUIRE(rec.min_dist[k] > 0.0);
    REQUIRE(std::isfinite(rec.H[k]));
  }
  for (const auto& s : rec.states) CHECK(s.all_finite());
}

TEST_CASE("property: large contractions of the minimum distance are always logged") {
  const auto sp = make_params(6, 2, ConfiningPotential::quadratic(4.0));
  IntegratorConfig cfg{.dt = 0.05, .eta = 0.3, .seed = 12};
  const auto rec = simulate(sp, cfg, ring(6, 0.3), 20.0, 100);
  REQUIRE(rec.termination == Termination::Completed);
  std::vector<int> halved(rec.size(), 0);
  for (const auto& e : rec.events) {
    if (e.kind == EventKind::Halving) halved[e.step] = e.count;
  }
  int contractions = 0;
  for (std::size_t k = 1; k < rec.size(); ++k) {
    if (rec.min_dist[k] < (1 - cfg.eta) * rec.min_dist[k - 1]) {
      ++contractions;
      CHECK(halved[k] > 0);
    }
  }
  CHECK(rec.total_halvings > 0);
  MESSAGE("contractions " << contractions << ", halvings " << rec.total_halvings);
}

TEST_CASE("d = 1 runs keep the ordering") {
  const auto sp = make_params(5, 1, ConfiningPotential::quadratic(2.0));
  ParticleState s(5, 1);
  s.q = {-1.0, -0.5, 0.0, 0.5, 1.0};
  IntegratorConfig cfg{.dt = 0.02, .eta = 0.9, .seed = 13};
  const auto rec = simulate(sp, cfg, s, 20.0, 10);
  REQUIRE(rec.termination == Termination::Completed);
  for (const auto& st : rec.states) CHECK(is_ordered_1d(st));
}

TEST_CASE("BAOAB stationary moments of a harmonic particle extrapolate to the Gibbs values") {
  auto sp = make_params(1, 2, ConfiningPotential::quadratic(0.5));
  sp.beta = 2.0;
  std::vector<double> dts = {0.2, 0.1, 0.05};
  std::vector<MeanSE> p2, q2;
  for (double dt : dts) {
    IntegratorConfig cfg{.dt = dt, .seed = 21};
    const auto rec = simulate(sp, cfg, ParticleState(1, 2), 20000.0, 1000000);
    const std::size_t burn = rec.size() / 50;
    p2.push_back(equipartition_stat(rec, burn));
    q2.push_back(batch_means(std::span(rec.q_norm2).subspan(burn)));
  }
  const auto p_star = extrapolate_dt(dts, p2);
  const auto q_star = extrapolate_dt(dts, q2);
  CHECK(std::abs(p_star.mean - 1.0 / sp.beta) < 3 * p_star.se);
  // E|q|^2 = d / (2 ω β)
  CHECK(std::abs(q_star.mean - 2.0 / (2 * 0.5 * sp.beta)) < 3 * q_star.se);
}

TEST_CASE("supermartingale check: t = 0, fitted and deliberately inflated lambda") {
  const auto sp = make_params(2, 2);
  const LyapunovParams lp{};
  StateSampler sampler(2, 2, 31, 0);
  const auto fit = fit_drift_constants(sp, lp, sampler, 2000);
  ParticleState x0(2, 2);
  x0.q = {-0.5, 0, 0.5, 0};
  x0.p = {6, 3, -5, 4};
  IntegratorConfig cfg{.dt = 0.005, .seed = 32};
  const auto report = supermartingale_check(sp, lp, cfg, fit, x0, 2.0, 64, {.n_checkpoints = 10});
  REQUIRE(report.checkpoints.size() == 11);
  CHECK(report.checkpoints[0].time == 0.0);
  CHECK(report.checkpoints[0].log_mean_w == doctest::Approx(log_W(sp, lp, x0)));
  CHECK(report.checkpoints[0].log_bound >= report.checkpoints[0].log_mean_w);
  CHECK(report.passed());

  // The fitted lambda is a worst-case rate, so x10 can remain valid; x100 must break.
  auto inflated = fit;
  inflated.lambda *= 100;
  const auto bad = supermartingale_check(sp, lp, cfg, inflated, x0, 2.0, 64, {.n_checkpoints = 10});
  CHECK_FALSE(bad.passed());
  double first_violation = 1e300;
  for (const auto& c : bad.checkpoints) {
    if (c.status == "violated") first_violation = std::min(first_violation, c.time);
  }
  CHECK(first_violation <= 1.0);

  const auto again = supermartingale_check(sp, lp, cfg, fit, x0, 2.0, 64, {.n_checkpoints = 10, .threads = 3});
  for (std::size_t j = 0; j < report.checkpoints.size(); ++j) {
    CHECK(again.checkpoints[j].log_mean_w == report.checkpoints[j].log_mean_w);
  }
}
