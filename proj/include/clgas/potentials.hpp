#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clgas {

enum class PotentialForm { Quadratic, DoubleWell, UserTable };

/// Constants of the confinement assumptions on V:
///   V(q) >= c1|q|^2 - M
///   c2 V(q) - M <= ∇V(q)·q <= c3 V(q) + M
///   |∇V(q)| <= ε V(q) + M_ε   (tabulated for finitely many ε)
struct AssumptionConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double M = 0.0;
  std::map<double, double> eps_to_M;

  bool all_positive() const;
};

/// External confining potential V: R^d -> [0, ∞).
class ConfiningPotential {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;

  /// V(q) = ω|q|^2, with constants c1 = ω, c2 = c3 = 2, M = 0.01, M_ε = ω/ε.
  static ConfiningPotential quadratic(double omega);
  /// V(q) = (1 - |q|^2)^2 / 4 with a brute-force-verified constant set.
  static ConfiningPotential double_well();
  /// Caller-supplied V and ∇V; constants optional.
  static ConfiningPotential user(ValueFn value, GradientFn gradient,
                                 std::optional<AssumptionConstants> constants = std::nullopt);

  PotentialForm form() const { return form_; }
  double omega() const { return omega_; }
  const std::optional<AssumptionConstants>& constants() const { return constants_; }
  void set_constants(AssumptionConstants constants) { constants_ = std::move(constants); }

  double value(std::span<const double> q) const;
  /// Writes ∇V(q) into `out` (same length as q).
  void gradient(std::span<const double> q, std::span<double> out) const;

 private:
  PotentialForm form_ = PotentialForm::Quadratic;
  double omega_ = 1.0;
  ValueFn user_value_;
  GradientFn user_gradient_;
  std::optional<AssumptionConstants> constants_;
};

double potential_value(const ConfiningPotential& pot, std::span<const double> q);
std::vector<double> potential_gradient(const ConfiningPotential& pot, std::span<const double> q);

struct InequalityCheck {
  std::string name;
  bool passed = true;
  double min_slack = 0.0;       // worst (smallest) slack over samples
  std::vector<double> witness;  // argmin point
};

struct AssumptionReport {
  std::vector<InequalityCheck> checks;
  int n_samples = 0;
  double sample_radius = 0.0;

  bool all_passed() const;
  /// JSON-shaped text.
  std::string to_json() const;
};

/// Sampled (not symbolic) check of the confinement inequalities at Halton
/// points in the ball of radius `sample_radius`. A pass is evidence only.
AssumptionReport verify_assumption(const ConfiningPotential& pot, int dimension, double sample_radius,
                                   int n_samples);

std::string_view to_string(PotentialForm form);

}  // namespace clgas
