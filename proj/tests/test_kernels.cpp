#include <array>
#include <cmath>
#include <vector>

#include "clgas/error.hpp"
#include "clgas/kernels.hpp"
#include "clgas/rng.hpp"
#include "doctest.h"

using namespace clgas;

namespace {

std::vector<InteractionKernel> all_kernels() {
  std::vector<InteractionKernel> out;
  for (auto mode : {Normalization::Exact, Normalization::PaperConvention}) {
    for (int d : {2, 3, 4, 5}) out.push_back(InteractionKernel::coulomb(d, mode));
    out.push_back(InteractionKernel::riesz(1.0, 2, mode));
    out.push_back(InteractionKernel::riesz(0.5, 3, mode));
    out.push_back(InteractionKernel::riesz(2.5, 3, mode));
    out.push_back(InteractionKernel::log1d(mode));
  }
  return out;
}

std::vector<double> random_vector(StreamRng& rng, int d, double radius) {
  std::vector<double> x(d);
  double n2 = 0;
  for (auto& v : x) {
    v = rng.normal();
    n2 += v * v;
  }
  for (auto& v : x) v *= radius / std::sqrt(n2);
  return x;
}

}  // namespace

TEST_CASE("kernel_value examples") {
  CHECK(kernel_value(InteractionKernel::coulomb(2), std::vector{1.0, 0.0}) == 0.0);
  CHECK(kernel_value(InteractionKernel::coulomb(3), std::vector{2.0, 0.0, 0.0}) == doctest::Approx(0.5));
  CHECK(kernel_value(InteractionKernel::riesz(1.0, 2), std::vector{0.0, 3.0}) == doctest::Approx(1.0 / 3.0));
  CHECK(kernel_value(InteractionKernel::log1d(), std::vector{0.5}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("kernel_gradient examples") {
  for (auto mode : {Normalization::Exact, Normalization::PaperConvention}) {
    const auto g = kernel_gradient(InteractionKernel::coulomb(2, mode), std::vector{2.0, 0.0});
    CHECK(g[0] == doctest::Approx(-0.5));
    CHECK(g[1] == 0.0);
  }
  const auto exact = kernel_gradient(InteractionKernel::coulomb(4, Normalization::Exact), std::vector{1.0, 0.0, 0.0, 0.0});
  CHECK(exact == std::vector{-2.0, -0.0, -0.0, -0.0});
  const auto paper =
      kernel_gradient(InteractionKernel::coulomb(4, Normalization::PaperConvention), std::vector{1.0, 0.0, 0.0, 0.0});
  CHECK(paper == std::vector{-1.0, -0.0, -0.0, -0.0});
}

TEST_CASE("singularity_exponent") {
  CHECK(singularity_exponent(InteractionKernel::coulomb(3)) == 2.0);
  CHECK(singularity_exponent(InteractionKernel::riesz(1.0, 2)) == 2.0);
  CHECK(singularity_exponent(InteractionKernel::coulomb(2)) == 1.0);
  CHECK(singularity_exponent(InteractionKernel::log1d()) == 1.0);
  CHECK(lemma_exponent(InteractionKernel::riesz(1.5, 3)) == 3.5);
}

TEST_CASE("zero separation and invalid families") {
  CHECK_THROWS_AS(kernel_value(InteractionKernel::coulomb(2), std::vector{0.0, 0.0}), Error);
  CHECK_THROWS_AS(kernel_gradient(InteractionKernel::coulomb(3), std::vector{0.0, 0.0, 0.0}), Error);
  CHECK_THROWS_AS(InteractionKernel::coulomb(1), Error);
  CHECK_THROWS_AS(InteractionKernel::riesz(2.0, 2), Error);
  CHECK_THROWS_AS(InteractionKernel::riesz(0.0, 2), Error);
  CHECK_THROWS_AS(kernel_value(InteractionKernel::coulomb(3), std::vector{1.0, 0.0}), Error);
}

TEST_CASE("poisson constant metadata") {
  CHECK(poisson_constant(2) == doctest::Approx(2 * M_PI));
  // (d-2)|S^{d-1}| with |S^2| = 4π.
  CHECK(poisson_constant(3) == doctest::Approx(4 * M_PI));
}

TEST_CASE("property: repulsion, blow-up, normalization ratio") {
  StreamRng rng(11, 0);
  for (const auto& k : all_kernels()) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto x = random_vector(rng, k.dimension, std::exp(rng.uniform() * 6.0 - 3.0));
      const auto g = kernel_gradient(k, x);
      double gx = 0;
      for (int i = 0; i < k.dimension; ++i) gx += g[i] * x[i];
      CHECK(gx < 0.0);
    }
    double previous = k.value_at(1.0);
    for (double r : {1e-3, 1e-12, 1e-100, 1e-300}) {
      CHECK(k.value_at(r) > previous);
      previous = k.value_at(r);
    }
    CHECK(previous > k.value_at(1.0) + 600.0);
  }
  for (int d : {3, 4, 6}) {
    const auto ke = InteractionKernel::coulomb(d, Normalization::Exact);
    const auto kp = InteractionKernel::coulomb(d, Normalization::PaperConvention);
    const auto x = random_vector(rng, d, 0.7);
    const auto ge = kernel_gradient(ke, x), gp = kernel_gradient(kp, x);
    for (int i = 0; i < d; ++i) CHECK(ge[i] == doctest::Approx((d - 2.0) * gp[i]));
  }
}

TEST_CASE("property: exact gradient matches central differences") {
  StreamRng rng(12, 0);
  for (const auto& k : all_kernels()) {
    if (k.normalization != Normalization::Exact) continue;
    for (int trial = 0; trial < 40; ++trial) {
      const double radius = 0.1 * std::pow(100.0, rng.uniform());
      auto x = random_vector(rng, k.dimension, radius);
      const auto g = kernel_gradient(k, x);
      for (int i = 0; i < k.dimension; ++i) {
        const double h = 1e-6 * radius;
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (kernel_value(k, xp) - kernel_value(k, xm)) / (2 * h);
        const double gnorm = std::abs(k.gradient_factor_at(radius)) * radius;
        CHECK(std::abs(fd - g[i]) <= 1e-6 * gnorm);
      }
    }
  }
}

TEST_CASE("property: paper-convention energy is the antiderivative of its gradient") {
  StreamRng rng(13, 0);
  for (const auto& k : all_kernels()) {
    for (double r : {0.1, 0.5, 1.0, 3.0, 10.0}) {
      const double h = 1e-6 * r;
      const double fd = (k.energy_at(r + h) - k.energy_at(r - h)) / (2 * h);
      CHECK(fd == doctest::Approx(k.gradient_factor_at(r) * r).epsilon(1e-6));
    }
  }
}

TEST_CASE("property: rotational symmetry via permutations and sign flips") {
  StreamRng rng(14, 0);
  for (const auto& k : all_kernels()) {
    const int d = k.dimension;
    const auto x = random_vector(rng, d, 1.3);
    const auto g = kernel_gradient(k, x);
    std::vector<int> perm(d);
    for (int i = 0; i < d; ++i) perm[i] = (i + 1) % d;
    std::vector<double> rx(d);
    for (int i = 0; i < d; ++i) rx[perm[i]] = (i % 2 ? -1.0 : 1.0) * x[i];
    const auto rg = kernel_gradient(k, rx);
    CHECK(kernel_value(k, rx) == doctest::Approx(kernel_value(k, x)));
    for (int i = 0; i < d; ++i) CHECK(rg[perm[i]] == doctest::Approx((i % 2 ? -1.0 : 1.0) * g[i]));
  }
}
