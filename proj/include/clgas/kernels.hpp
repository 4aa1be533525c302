#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace clgas {

enum class KernelFamily { Coulomb, Riesz, Log1D };

/// How the gradient is normalized.
///
/// `Exact` returns the true gradient of `kernel_value`. `PaperConvention`
/// returns -x/|x|^d for Coulomb (dropping the (d-2) factor when d >= 3) and
/// -x/|x|^(s+2) for Riesz, which is the form the Lyapunov drift identities
/// are written in. The two coincide for d = 2, d = 3 Coulomb and Log1D.
enum class Normalization { Exact, PaperConvention };

struct InteractionKernel {
  KernelFamily family = KernelFamily::Coulomb;
  int dimension = 2;
  double s = 0.0;  // Riesz exponent only
  Normalization normalization = Normalization::PaperConvention;

  static InteractionKernel coulomb(int d, Normalization n = Normalization::PaperConvention);
  static InteractionKernel riesz(double s, int d, Normalization n = Normalization::PaperConvention);
  static InteractionKernel log1d(Normalization n = Normalization::PaperConvention);

  /// Throws ValidationError when the family/dimension/exponent combination is invalid.
  void validate() const;

  // Radial forms used by the O(N^2) loops. `r` must be > 0.

  /// K(r) as a function of separation.
  double value_at(double r) const;
  /// g(r) with kernel_gradient(x) = g(|x|) * x.
  double gradient_factor_at(double r) const;
  /// Pair energy whose exact gradient is kernel_gradient for the active
  /// normalization: equals K for Exact, K/(d-2) (Coulomb d >= 3) or K/s
  /// (Riesz) for PaperConvention.
  double energy_at(double r) const;
};

double kernel_value(const InteractionKernel& kernel, std::span<const double> x);
std::vector<double> kernel_gradient(const InteractionKernel& kernel, std::span<const double> x);

/// Exponent of the pair singularity in the drift bound: d-1 (Coulomb), s+1 (Riesz), 1 (Log1D).
double singularity_exponent(const InteractionKernel& kernel);

/// Exponent used in the J functional: d for Coulomb, s+2 for Riesz, 2 for Log1D.
double lemma_exponent(const InteractionKernel& kernel);

/// c_d in -ΔK = c_d δ_0 (Coulomb only). Metadata; no equation here uses it.
double poisson_constant(int d);

std::string_view to_string(KernelFamily family);
std::string_view to_string(Normalization normalization);

}  // namespace clgas
