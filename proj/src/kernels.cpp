#include "clgas/kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "clgas/error.hpp"

namespace clgas {

namespace {

double norm(std::span<const double> x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return std::sqrt(sum);
}

double checked_norm(const InteractionKernel& kernel, std::span<const double> x) {
  if (static_cast<int>(x.size()) != kernel.dimension) {
    throw Error(ErrorKind::DimensionMismatch, "vector has " + std::to_string(x.size()) +
                                                  " components, kernel dimension is " +
                                                  std::to_string(kernel.dimension));
  }
  const double r = norm(x);
  if (r == 0.0) throw Error(ErrorKind::ZeroSeparation, "kernel evaluated at zero separation");
  return r;
}

}  // namespace

InteractionKernel InteractionKernel::coulomb(int d, Normalization n) {
  InteractionKernel k{KernelFamily::Coulomb, d, 0.0, n};
  k.validate();
  return k;
}

InteractionKernel InteractionKernel::riesz(double s, int d, Normalization n) {
  InteractionKernel k{KernelFamily::Riesz, d, s, n};
  k.validate();
  return k;
}

InteractionKernel InteractionKernel::log1d(Normalization n) {
  return InteractionKernel{KernelFamily::Log1D, 1, 0.0, n};
}

void InteractionKernel::validate() const {
  switch (family) {
    case KernelFamily::Coulomb:
      if (dimension < 2) throw Error(ErrorKind::ValidationError, "kernel: coulomb requires dimension >= 2");
      break;
    case KernelFamily::Log1D:
      if (dimension != 1) throw Error(ErrorKind::ValidationError, "kernel: log1d requires dimension 1");
      break;
    case KernelFamily::Riesz:
      if (dimension < 1) throw Error(ErrorKind::ValidationError, "kernel: dimension must be >= 1");
      if (!(s > 0.0 && s < dimension)) {
        throw Error(ErrorKind::ValidationError, "kernel.s: riesz requires 0 < s < dimension");
      }
      break;
  }
}

double InteractionKernel::value_at(double r) const {
  switch (family) {
    case KernelFamily::Coulomb:
      return dimension == 2 ? -std::log(r) : std::pow(r, 2.0 - dimension);
    case KernelFamily::Riesz:
      return std::pow(r, -s);
    case KernelFamily::Log1D:
      return -std::log(r);
  }
  return 0.0;
}

double InteractionKernel::gradient_factor_at(double r) const {
  const bool exact = normalization == Normalization::Exact;
  switch (family) {
    case KernelFamily::Coulomb: {
      const double base = -std::pow(r, -static_cast<double>(dimension));
      return (exact && dimension > 2) ? (dimension - 2.0) * base : base;
    }
    case KernelFamily::Riesz: {
      const double base = -std::pow(r, -(s + 2.0));
      return exact ? s * base : base;
    }
    case KernelFamily::Log1D:
      return -1.0 / (r * r);
  }
  return 0.0;
}

double InteractionKernel::energy_at(double r) const {
  const double v = value_at(r);
  if (normalization == Normalization::Exact) return v;
  if (family == KernelFamily::Coulomb && dimension > 2) return v / (dimension - 2.0);
  if (family == KernelFamily::Riesz) return v / s;
  return v;
}

double kernel_value(const InteractionKernel& kernel, std::span<const double> x) {
  return kernel.value_at(checked_norm(kernel, x));
}

std::vector<double> kernel_gradient(const InteractionKernel& kernel, std::span<const double> x) {
  const double g = kernel.gradient_factor_at(checked_norm(kernel, x));
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v *= g;
  return out;
}

double singularity_exponent(const InteractionKernel& kernel) {
  switch (kernel.family) {
    case KernelFamily::Coulomb:
      return kernel.dimension - 1.0;
    case KernelFamily::Riesz:
      return kernel.s + 1.0;
    case KernelFamily::Log1D:
      return 1.0;
  }
  return 0.0;
}

double lemma_exponent(const InteractionKernel& kernel) { return singularity_exponent(kernel) + 1.0; }

double poisson_constant(int d) {
  if (d == 2) return 2.0 * std::numbers::pi;
  if (d < 2) throw Error(ErrorKind::ValidationError, "poisson constant defined for d >= 2");
  return d * (d - 2.0) * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(1.0 + d / 2.0);
}

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Coulomb:
      return "coulomb";
    case KernelFamily::Riesz:
      return "riesz";
    case KernelFamily::Log1D:
      return "log1d";
  }
  return "?";
}

std::string_view to_string(Normalization normalization) {
  return normalization == Normalization::Exact ? "exact" : "paper";
}

}  // namespace clgas
