#include "clgas/potentials.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "clgas/error.hpp"

namespace clgas {

namespace {

double squared_norm(std::span<const double> q) {
  double sum = 0.0;
  for (double v : q) sum += v * v;
  return sum;
}

double radical_inverse(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

}  // namespace

bool AssumptionConstants::all_positive() const {
  if (!(c1 > 0 && c2 > 0 && c3 > 0 && M > 0)) return false;
  for (const auto& [eps, m] : eps_to_M) {
    if (!(eps > 0 && m > 0)) return false;
  }
  return true;
}

ConfiningPotential ConfiningPotential::quadratic(double omega) {
  if (!(omega > 0.0)) throw Error(ErrorKind::ValidationError, "potential.omega must be > 0");
  ConfiningPotential pot;
  pot.form_ = PotentialForm::Quadratic;
  pot.omega_ = omega;
  AssumptionConstants ac;
  ac.c1 = omega;
  ac.c2 = 2.0;
  ac.c3 = 2.0;
  ac.M = 0.01;
  // 2ω|q| <= εω|q|^2 + ω/ε  since  ω(√ε|q| - 1/√ε)^2 >= 0.
  for (double eps : {2.0, 1.0, 0.5, 0.25, 0.1, 0.05, 0.01}) ac.eps_to_M[eps] = omega / eps;
  pot.constants_ = ac;
  return pot;
}

ConfiningPotential ConfiningPotential::double_well() {
  ConfiningPotential pot;
  pot.form_ = PotentialForm::DoubleWell;
  AssumptionConstants ac;
  // With u = |q|^2:
  //   V - u/8 + 1 has minimum 0.859 at u = 1.25;
  //   (u-1)u - 2V + 1 = (u^2 + 1)/2 > 0;
  //   8V + 1 - (u-1)u = u^2 - 3u + 3 > 0.
  ac.c1 = 0.125;
  ac.c2 = 2.0;
  ac.c3 = 8.0;
  ac.M = 1.0;
  // M_ε = max_r |1-r^2| r - ε(1-r^2)^2/4, brute-forced on r in [0, 200]
  // (4e6 points) and rounded up; asymptotically 6.75/ε^3 at r = 3/ε.
  ac.eps_to_M = {{2.0, 1.6}, {1.0, 8.3}, {0.5, 57.0}, {0.25, 438.1}, {0.1, 6766.0}};
  pot.constants_ = ac;
  return pot;
}

ConfiningPotential ConfiningPotential::user(ValueFn value, GradientFn gradient,
                                            std::optional<AssumptionConstants> constants) {
  ConfiningPotential pot;
  pot.form_ = PotentialForm::UserTable;
  pot.user_value_ = std::move(value);
  pot.user_gradient_ = std::move(gradient);
  pot.constants_ = std::move(constants);
  return pot;
}

double ConfiningPotential::value(std::span<const double> q) const {
  switch (form_) {
    case PotentialForm::Quadratic:
      return omega_ * squared_norm(q);
    case PotentialForm::DoubleWell: {
      const double w = 1.0 - squared_norm(q);
      return 0.25 * w * w;
    }
    case PotentialForm::UserTable:
      return user_value_(q);
  }
  return 0.0;
}

void ConfiningPotential::gradient(std::span<const double> q, std::span<double> out) const {
  switch (form_) {
    case PotentialForm::Quadratic:
      for (std::size_t k = 0; k < q.size(); ++k) out[k] = 2.0 * omega_ * q[k];
      return;
    case PotentialForm::DoubleWell: {
      const double w = 1.0 - squared_norm(q);
      for (std::size_t k = 0; k < q.size(); ++k) out[k] = -w * q[k];
      return;
    }
    case PotentialForm::UserTable:
      user_gradient_(q, out);
      return;
  }
}

double potential_value(const ConfiningPotential& pot, std::span<const double> q) { return pot.value(q); }

std::vector<double> potential_gradient(const ConfiningPotential& pot, std::span<const double> q) {
  std::vector<double> out(q.size());
  pot.gradient(q, out);
  return out;
}

bool AssumptionReport::all_passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::string AssumptionReport::to_json() const {
  nlohmann::ordered_json j;
  j["n_samples"] = n_samples;
  j["sample_radius"] = sample_radius;
  j["all_passed"] = all_passed();
  j["note"] = "sampled check; a pass is evidence, not proof";
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"min_slack", c.min_slack},
                           {"witness", c.witness}});
  }
  return j.dump(2);
}

AssumptionReport verify_assumption(const ConfiningPotential& pot, int dimension, double sample_radius,
                                   int n_samples) {
  if (n_samples < 1) throw Error(ErrorKind::InvalidConfig, "n_samples must be >= 1");
  if (dimension < 1 || dimension > static_cast<int>(std::size(kPrimes))) {
    throw Error(ErrorKind::InvalidConfig, "verify_assumption supports dimensions 1..12");
  }
  if (!pot.constants()) throw Error(ErrorKind::MissingConstants, "potential has no assumption constants");
  const AssumptionConstants& ac = *pot.constants();
  if (!(ac.c1 > 0 && ac.c2 > 0 && ac.c3 > 0) || ac.M < 0) {
    throw Error(ErrorKind::MissingConstants, "c1, c2, c3 must be set (> 0) and M >= 0");
  }

  struct Rule {
    std::string name;
    std::function<double(double v, double r2, double gq, double gnorm)> slack;
  };
  std::vector<Rule> rules;
  rules.push_back({"V>=0", [](double v, double, double, double) { return v; }});
  rules.push_back({"V>=c1|q|^2-M", [&](double v, double r2, double, double) { return v - ac.c1 * r2 + ac.M; }});
  rules.push_back({"gradV.q>=c2V-M", [&](double v, double, double gq, double) { return gq - ac.c2 * v + ac.M; }});
  rules.push_back({"gradV.q<=c3V+M", [&](double v, double, double gq, double) { return ac.c3 * v + ac.M - gq; }});
  for (const auto& [eps, m_eps] : ac.eps_to_M) {
    std::ostringstream name;
    name << "|gradV|<=" << eps << "V+M_eps";
    const double e = eps, m = m_eps;
    rules.push_back({name.str(), [e, m](double v, double, double, double g) { return e * v + m - g; }});
  }

  AssumptionReport report;
  report.n_samples = n_samples;
  report.sample_radius = sample_radius;
  report.checks.resize(rules.size());
  for (std::size_t r = 0; r < rules.size(); ++r) {
    report.checks[r].name = rules[r].name;
    report.checks[r].min_slack = std::numeric_limits<double>::infinity();
  }

  const std::size_t d = static_cast<std::size_t>(dimension);
  std::vector<double> q(d), grad(d);
  int accepted = 0;
  for (std::uint64_t index = 1; accepted < n_samples; ++index) {
    for (std::size_t k = 0; k < d; ++k) q[k] = sample_radius * (2.0 * radical_inverse(index, kPrimes[k]) - 1.0);
    const double r2 = squared_norm(q);
    if (r2 > sample_radius * sample_radius) continue;
    ++accepted;
    const double v = pot.value(q);
    pot.gradient(q, grad);
    double gq = 0.0;
    for (std::size_t k = 0; k < d; ++k) gq += grad[k] * q[k];
    const double gnorm = std::sqrt(squared_norm(grad));
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const double slack = rules[r].slack(v, r2, gq, gnorm);
      if (slack < report.checks[r].min_slack) {
        report.checks[r].min_slack = slack;
        report.checks[r].witness = q;
      }
    }
  }
  for (auto& c : report.checks) c.passed = c.min_slack >= 0.0;
  return report;
}

std::string_view to_string(PotentialForm form) {
  switch (form) {
    case PotentialForm::Quadratic:
      return "quadratic";
    case PotentialForm::DoubleWell:
      return "double_well";
    case PotentialForm::UserTable:
      return "user";
  }
  return "?";
}

}  // namespace clgas
