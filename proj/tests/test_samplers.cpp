#include <cmath>
#include <limits>
#include <vector>

#include "clgas/diagnostics.hpp"
#include "clgas/error.hpp"
#include "clgas/samplers.hpp"
#include "doctest.h"

using namespace clgas;

namespace {

std::vector<double> ring_q(std::size_t n, double radius) {
  std::vector<double> q(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double th = 2 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    q[2 * i] = radius * std::cos(th);
    q[2 * i + 1] = radius * std::sin(th);
  }
  return q;
}

SystemParams gas(std::size_t n) {
  SystemParams sp;
  sp.N = n;
  sp.d = 2;
  return sp;
}

}  // namespace

TEST_CASE("acceptance probability") {
  CHECK(hmc_accept_probability(1.0, 0.0) == 1.0);
  CHECK(hmc_accept_probability(3.0, -5.0) == 1.0);
  CHECK(hmc_accept_probability(2.0, 0.5) == doctest::Approx(std::exp(-1.0)));
  CHECK(hmc_accept_probability(1.0, 800.0) < 1e-300);
  CHECK(hmc_accept_probability(1.0, std::numeric_limits<double>::infinity()) == 0.0);
  CHECK(hmc_accept_probability(1.0, std::nan("")) == 0.0);
}

TEST_CASE("leapfrog is reversible and second order") {
  const auto sp = gas(3);
  ParticleState s(3, 2);
  s.q = ring_q(3, 1.0);
  s.p = {0.3, -0.1, 0.2, 0.4, -0.5, 0.1};
  ParticleState t = s;
  leapfrog(sp, t, 0.01, 50);
  for (auto& v : t.p) v = -v;
  leapfrog(sp, t, 0.01, 50);
  for (std::size_t k = 0; k < s.q.size(); ++k) CHECK(t.q[k] == doctest::Approx(s.q[k]).epsilon(1e-10));

  auto energy_error = [&](double h) {
    ParticleState u = s;
    leapfrog(sp, u, h, static_cast<int>(std::lround(1.0 / h)));
    return std::abs(total_energy(sp, u) - total_energy(sp, s));
  };
  CHECK(energy_error(0.02) / energy_error(0.01) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("HMC, N = 16: acceptance in [0.5, 0.95] and equipartition") {
  const auto sp = gas(16);
  HmcConfig cfg{.leapfrog_steps = 10, .leapfrog_dt = 0.1, .seed = 3, .n_samples = 4000, .burn_in = 500};
  const auto chain = hmc_chain(sp, cfg, ring_q(16, 1.0));
  CHECK(chain.samples.size() == 4000);
  CHECK(chain.acceptance_rate() >= 0.5);
  CHECK(chain.acceptance_rate() <= 0.95);
  const auto eq = equipartition_stat(chain.samples);
  CHECK(std::abs(eq.mean - 1.0 / sp.beta) < 3 * eq.se);
  MESSAGE("acceptance " << chain.acceptance_rate() << ", |p|^2/(Nd) " << eq.mean << " ± " << eq.se);
}

TEST_CASE("property: HMC bookkeeping is consistent with the ΔH sample") {
  const auto sp = gas(8);
  HmcConfig cfg{.leapfrog_steps = 8, .leapfrog_dt = 0.12, .seed = 4, .n_samples = 6000, .burn_in = 500};
  const auto chain = hmc_chain(sp, cfg, ring_q(8, 1.0));
  const double n = static_cast<double>(chain.n_iterations);
  // Realized acceptances are Bernoulli(min(1, e^{-βΔH})) given ΔH.
  const double rate = chain.acceptance_rate(), bound = chain.mean_accept_prob();
  CHECK(rate >= bound - 3 * std::sqrt(bound * (1 - bound) / n));
  CHECK(std::abs(rate - bound) < 4 * std::sqrt(bound * (1 - bound) / n) + 1e-12);
  // At equilibrium E[e^{-βΔH}] = 1 for a volume-preserving reversible proposal.
  std::vector<double> w;
  for (double dh : chain.delta_H) w.push_back(std::exp(-sp.beta * dh));
  const auto m = batch_means(w);
  CHECK(std::abs(m.mean - 1.0) < 4 * m.se + 0.02);
}

TEST_CASE("HMC: partial refresh, thinning, determinism, errors") {
  const auto sp = gas(4);
  HmcConfig cfg{.leapfrog_steps = 5, .leapfrog_dt = 0.05, .momentum_refresh = 0.5, .seed = 5, .n_samples = 50,
                .burn_in = 10, .thin = 3};
  const auto a = hmc_chain(sp, cfg, ring_q(4, 1.0));
  const auto b = hmc_chain(sp, cfg, ring_q(4, 1.0));
  CHECK(a.samples == b.samples);
  CHECK(a.H == b.H);
  CHECK(a.samples.size() == 50);
  CHECK(a.n_iterations == 150);
  CHECK(a.iteration.front() == 12);
  CHECK(a.iteration.back() == 159);

  CHECK_THROWS_AS(hmc_chain(sp, HmcConfig{.leapfrog_steps = 0}, ring_q(4, 1.0)), Error);
  CHECK_THROWS_AS(hmc_chain(sp, HmcConfig{.momentum_refresh = 0.0}, ring_q(4, 1.0)), Error);
  CHECK_THROWS_AS(hmc_chain(sp, cfg, ring_q(3, 1.0)), Error);
  CHECK_THROWS_AS(hmc_chain(sp, cfg, std::vector<double>(8, 0.0)), Error);
}

TEST_CASE("HMC rejects colliding proposals and logs them") {
  // Two particles flung head-on with a huge step overshoot into non-finite or colliding states.
  const auto sp = gas(2);
  HmcConfig cfg{.leapfrog_steps = 1, .leapfrog_dt = 40.0, .seed = 6, .n_samples = 200, .burn_in = 0};
  const auto chain = hmc_chain(sp, cfg, std::vector<double>{-0.5, 0.0, 0.5, 0.0});
  for (const auto& s : chain.samples) CHECK(min_pair_distance(s) > 0.0);
  CHECK(chain.acceptance_rate() < 0.5);
}

TEST_CASE("overdamped: zero force gives Brownian increments of variance 2dt/β") {
  SystemParams sp;
  sp.N = 1;
  sp.d = 2;
  sp.beta = 4.0;
  sp.potential = ConfiningPotential::user([](std::span<const double>) { return 0.0; },
                                          [](std::span<const double>, std::span<double> g) {
                                            for (auto& v : g) v = 0.0;
                                          });
  const double dt = 0.01;
  const auto chain = overdamped_chain(sp, dt, 50000, std::vector<double>{0.0, 0.0}, 7);
  REQUIRE(chain.states.size() == 50001);
  double sum = 0, sum2 = 0, cross = 0;
  std::size_t m = 0;
  for (std::size_t k = 1; k < chain.states.size(); ++k) {
    const double dx = chain.states[k].q[0] - chain.states[k - 1].q[0];
    const double dy = chain.states[k].q[1] - chain.states[k - 1].q[1];
    sum += dx + dy;
    sum2 += dx * dx + dy * dy;
    cross += dx * dy;
    m += 2;
  }
  const double var = 2 * dt / sp.beta;
  CHECK(std::abs(sum / m) < 3 * std::sqrt(var / m));
  CHECK(std::abs(sum2 / m - var) < 3 * var * std::sqrt(2.0 / m));
  CHECK(std::abs(cross / (m / 2)) < 3 * var / std::sqrt(m / 2.0));
  CHECK(chain.total_halvings == 0);
}

TEST_CASE("overdamped: N = 2 log gas stays apart over 1e5 steps") {
  auto sp = gas(2);
  const auto chain = overdamped_chain(sp, 1e-3, 100000, std::vector<double>{-0.3, 0.0, 0.3, 0.0}, 8, 100);
  CHECK(chain.states.size() == 1001);
  for (const auto& s : chain.states) REQUIRE(min_pair_distance(s) > 0.0);
  CHECK(chain.times.back() == doctest::Approx(100.0));
}

TEST_CASE("overdamped: invalid arguments") {
  const auto sp = gas(2);
  const std::vector<double> q{-0.3, 0.0, 0.3, 0.0};
  try {
    overdamped_chain(sp, 0.0, 10, q, 1);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidConfig);
  }
  CHECK_THROWS_AS(overdamped_chain(sp, 0.01, 10, q, 1, 0), Error);
  const auto a = overdamped_chain(sp, 0.01, 100, q, 9);
  const auto b = overdamped_chain(sp, 0.01, 100, q, 9);
  CHECK(a.states == b.states);
}

TEST_CASE("ginibre preset") {
  const auto sp = ginibre_preset(64);
  CHECK(sp.d == 2);
  CHECK(sp.N == 64);
  CHECK(sp.beta == 128.0);
  CHECK(sp.kernel.family == KernelFamily::Coulomb);
  ParticleState s(1, 2);
  s.q = {1.0, 1.0};
  CHECK(sp.potential.value(s.qi(0)) == doctest::Approx(1.0));
  CHECK(ginibre_preset(10, 4.0).beta == 40.0);
  CHECK_THROWS_AS(ginibre_preset(10, 0.0), Error);
}
