#include <cmath>
#include <vector>

#include "clgas/error.hpp"
#include "clgas/potentials.hpp"
#include "clgas/rng.hpp"
#include "doctest.h"

using namespace clgas;

namespace {

const InequalityCheck& find_check(const AssumptionReport& report, const std::string& name) {
  for (const auto& c : report.checks) {
    if (c.name == name) return c;
  }
  FAIL("no check named " << name);
  return report.checks.front();
}

}  // namespace

TEST_CASE("potential values") {
  const auto dw = ConfiningPotential::double_well();
  const auto quad = ConfiningPotential::quadratic(1.0);
  CHECK(potential_value(dw, std::vector{1.0, 0.0}) == 0.0);
  CHECK(potential_value(dw, std::vector{0.0, 0.0}) == doctest::Approx(0.25));
  CHECK(potential_value(quad, std::vector{3.0, 4.0}) == doctest::Approx(25.0));
}

TEST_CASE("potential gradients") {
  const auto dw = ConfiningPotential::double_well();
  const auto quad = ConfiningPotential::quadratic(1.0);
  CHECK(potential_gradient(dw, std::vector{1.0, 0.0}) == std::vector{-0.0, -0.0});
  CHECK(potential_gradient(quad, std::vector{1.0, 2.0}) == std::vector{2.0, 4.0});
  CHECK(potential_gradient(dw, std::vector{0.0, 0.0}) == std::vector{-0.0, -0.0});
  CHECK_THROWS_AS(ConfiningPotential::quadratic(0.0), Error);
}

TEST_CASE("property: gradients match central differences for |q| <= 10") {
  StreamRng rng(21, 0);
  for (const auto& pot : {ConfiningPotential::quadratic(0.7), ConfiningPotential::double_well()}) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> q(3);
      for (auto& v : q) v = 10.0 * (2 * rng.uniform() - 1) / std::sqrt(3.0);
      const auto g = potential_gradient(pot, q);
      double gnorm = 0;
      for (double v : g) gnorm += v * v;
      gnorm = std::sqrt(gnorm);
      for (int i = 0; i < 3; ++i) {
        const double h = 1e-5;
        auto qp = q, qm = q;
        qp[i] += h;
        qm[i] -= h;
        const double fd = (potential_value(pot, qp) - potential_value(pot, qm)) / (2 * h);
        CHECK(std::abs(fd - g[i]) <= 1e-6 * std::max(gnorm, 1.0));
      }
    }
  }
}

TEST_CASE("verify_assumption: quadratic lower bound has slack M") {
  auto pot = ConfiningPotential::quadratic(1.0);
  AssumptionConstants ac = *pot.constants();
  ac.c1 = 1.0;
  ac.M = 0.01;
  pot.set_constants(ac);
  const auto report = verify_assumption(pot, 2, 5.0, 2000);
  const auto& lower = find_check(report, "V>=c1|q|^2-M");
  CHECK(lower.passed);
  CHECK(lower.min_slack >= 0.01);
  CHECK(report.all_passed());
}

TEST_CASE("verify_assumption: double well with c1 = 1, M = 0 fails just outside |q| = 1") {
  auto pot = ConfiningPotential::double_well();
  AssumptionConstants ac = *pot.constants();
  ac.c1 = 1.0;
  ac.M = 0.0;
  pot.set_constants(ac);
  const auto report = verify_assumption(pot, 2, 10.0, 4000);
  const auto& lower = find_check(report, "V>=c1|q|^2-M");
  CHECK_FALSE(lower.passed);
  // Oracle: with u = |q|^2 the slack (1-u)^2/4 - u is minimal at u = 3 (value -2),
  // just outside the V = 0 ring at |q| = 1.
  const double r = std::hypot(lower.witness[0], lower.witness[1]);
  CHECK(r > 1.0);
  CHECK(r == doctest::Approx(std::sqrt(3.0)).epsilon(0.05));
  CHECK(lower.min_slack == doctest::Approx(-2.0).epsilon(0.01));
}

TEST_CASE("verify_assumption: shipped double-well constants hold on the radius-10 ball") {
  const auto pot = ConfiningPotential::double_well();
  CHECK(pot.constants()->c1 == 0.125);
  CHECK(pot.constants()->M == 1.0);
  for (int d : {1, 2, 3}) {
    const auto report = verify_assumption(pot, d, 10.0, 20000);
    CHECK_MESSAGE(report.all_passed(), report.to_json());
  }
  // Brute-force oracle for V - r^2/8 + 1 on r in [0, 10].
  double worst = 1e300;
  for (int k = 0; k <= 1000000; ++k) {
    const double r = 10.0 * k / 1000000.0;
    worst = std::min(worst, 0.25 * (1 - r * r) * (1 - r * r) - r * r / 8 + 1);
  }
  CHECK(worst == doctest::Approx(0.859375).epsilon(1e-6));
}

TEST_CASE("verify_assumption errors") {
  const auto bare = ConfiningPotential::user([](std::span<const double>) { return 0.0; },
                                             [](std::span<const double>, std::span<double> g) {
                                               for (auto& v : g) v = 0.0;
                                             });
  CHECK_THROWS_AS(verify_assumption(bare, 2, 1.0, 10), Error);
  CHECK_THROWS_AS(verify_assumption(ConfiningPotential::double_well(), 2, 1.0, 0), Error);
}
