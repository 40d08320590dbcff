#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace landscape {

/// One term c * |x|^r of the confinement.
struct PowerTerm {
  double coefficient;
  double exponent;
};

struct PotentialValue {
  double value;
  double first;
  double second;
};

/// Even confinement V(x) = sum_i c_i |x|^{r_i} together with the growth
/// parameters it is claimed to satisfy.
///
/// `q` is the exponent in x V'(x) >= q V(x); `q_hessian`, when present, is the
/// exponent used in x V''(x) >= (q-1) V'(x). Without it both conditions share q.
class Potential {
 public:
  Potential(std::vector<PowerTerm> terms, int p, double q, double q1, double q2, double c_bound,
            std::optional<double> q_hessian = std::nullopt);

  /// V, V', V'' at x. Derivatives of |x|^r are taken as 0 at x = 0 for r > 2.
  PotentialValue eval(double x) const;
  double value(double x) const { return eval(x).value; }
  double first(double x) const { return eval(x).first; }
  double second(double x) const { return eval(x).second; }

  const std::vector<PowerTerm>& terms() const { return terms_; }
  int p() const { return p_; }
  double q() const { return q_; }
  double q_hessian() const { return q_hessian_.value_or(q_); }
  bool has_separate_q_hessian() const { return q_hessian_.has_value(); }
  double q1() const { return q1_; }
  double q2() const { return q2_; }
  double c_bound() const { return c_bound_; }

  Potential with_c_bound(double c) const;

 private:
  std::vector<PowerTerm> terms_;
  int p_;
  double q_;
  double q1_;
  double q2_;
  double c_bound_;
  std::optional<double> q_hessian_;
};

/// x^4 - |x|^5 + x^6 with p = 2, q = 3, q1 = 4, q2 = 6.
Potential example_potential(double c_bound = 30.0);

struct ConditionCheck {
  std::string name;
  double worst_margin;
  double worst_x;
  std::string detail;  // which inequality attained the worst margin
  bool passed;
};

struct ValidationReport {
  std::vector<ConditionCheck> checks;
  double grid_min;
  double grid_max;
  std::size_t grid_points;

  bool passed() const;
};

struct ValidationGrid {
  double grid_max = 1e3;
  std::size_t grid_points = 10000;
  double grid_min = 1e-6;
};

/// Checks the bound, growth, and convexity conditions on a log-spaced grid of
/// (grid_min, grid_max]. Margins are normalized by |x|^q1 + |x|^q2 so that a
/// margin >= -1e-12 is scale free. Throws ValidationError for structurally
/// invalid potentials (an exponent <= p, q1 <= p, mismatched extremal terms).
ValidationReport validate_assumption1(const Potential& potential, const ValidationGrid& grid = {});

/// Smallest constant c for which the two-sided bound holds on the grid.
double minimal_bound_constant(const Potential& potential, const ValidationGrid& grid = {});

}  // namespace landscape
