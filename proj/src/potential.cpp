#include "landscape/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "landscape/error.hpp"

namespace landscape {

Potential::Potential(std::vector<PowerTerm> terms, int p, double q, double q1, double q2, double c_bound,
                     std::optional<double> q_hessian)
    : terms_(std::move(terms)), p_(p), q_(q), q1_(q1), q2_(q2), c_bound_(c_bound), q_hessian_(q_hessian) {
  if (terms_.empty()) throw ValidationError("potential has no terms");
  if (p_ < 2) throw ValidationError("interaction order p must be >= 2");
  if (!(c_bound_ > 0.0)) throw ValidationError("c_bound must be positive");
  for (const auto& t : terms_) {
    if (!(t.exponent >= 2.0)) throw ValidationError("term exponents must be >= 2");
    if (!std::isfinite(t.coefficient)) throw ValidationError("term coefficient is not finite");
  }
}

PotentialValue Potential::eval(double x) const {
  const double ax = std::fabs(x);
  const double sign = x < 0.0 ? -1.0 : 1.0;
  PotentialValue out{0.0, 0.0, 0.0};
  if (ax == 0.0) {
    for (const auto& t : terms_) {
      if (t.exponent == 2.0) out.second += 2.0 * t.coefficient;
    }
    return out;
  }
  for (const auto& t : terms_) {
    const double r = t.exponent;
    const double pow_r2 = std::pow(ax, r - 2.0);
    out.value += t.coefficient * pow_r2 * ax * ax;
    out.first += t.coefficient * r * pow_r2 * ax;
    out.second += t.coefficient * r * (r - 1.0) * pow_r2;
  }
  out.first *= sign;
  return out;
}

Potential Potential::with_c_bound(double c) const {
  return Potential(terms_, p_, q_, q1_, q2_, c, q_hessian_);
}

Potential example_potential(double c_bound) {
  return Potential({{1.0, 4.0}, {-1.0, 5.0}, {1.0, 6.0}}, 2, 3.0, 4.0, 6.0, c_bound);
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ConditionCheck& c) { return c.passed; });
}

namespace {

constexpr double kMarginTolerance = -1e-12;

void check_structure(const Potential& v) {
  const double p = v.p();
  if (!(v.q1() > p)) throw ValidationError("q1 must exceed p");
  if (v.q2() < v.q1()) throw ValidationError("q2 must be >= q1");
  if (!(v.q() > p) || !(v.q_hessian() > p)) throw ValidationError("q must exceed p");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& t : v.terms()) {
    if (t.exponent <= p) {
      std::ostringstream msg;
      msg << "term exponent " << t.exponent << " <= p = " << v.p() << " (requires p < q1)";
      throw ValidationError(msg.str());
    }
    lo = std::min(lo, t.exponent);
    hi = std::max(hi, t.exponent);
  }
  if (lo != v.q1() || hi != v.q2()) throw ValidationError("extremal exponents must equal q1 and q2");
}

std::vector<double> log_grid(const ValidationGrid& g) {
  if (g.grid_points < 100) throw ValidationError("validation grid needs at least 100 points");
  if (!(g.grid_max > 0.0) || !(g.grid_min > 0.0) || g.grid_min >= g.grid_max)
    throw ValidationError("validation grid bounds must satisfy 0 < grid_min < grid_max");
  std::vector<double> xs(g.grid_points);
  const double a = std::log(g.grid_min);
  const double b = std::log(g.grid_max);
  for (std::size_t i = 0; i < xs.size(); ++i)
    xs[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(xs.size() - 1));
  xs.back() = g.grid_max;
  return xs;
}

struct Worst {
  double margin = std::numeric_limits<double>::infinity();
  double x = 0.0;
  std::string detail;
  void update(double m, double at, const char* what) {
    if (m < margin) {
      margin = m;
      x = at;
      detail = what;
    }
  }
};

}  // namespace

ValidationReport validate_assumption1(const Potential& v, const ValidationGrid& grid) {
  check_structure(v);
  const auto xs = log_grid(grid);
  const double c = v.c_bound();
  const double q = v.q();
  const double qh = v.q_hessian();

  Worst bound, growth, convexity;
  for (double x : xs) {
    const auto e = v.eval(x);
    const double scale = std::pow(x, v.q1()) + std::pow(x, v.q2());
    const double fv = e.value / scale;
    const double fd = x * e.first / scale;
    const double fdd = x * x * e.second / scale;
    bound.update(fv - 1.0 / c, x, "V lower");
    bound.update(c - fv, x, "V upper");
    bound.update(fd - 1.0 / c, x, "xV' lower");
    bound.update(c - fd, x, "xV' upper");
    bound.update(fdd - 1.0 / c, x, "x^2V'' lower");
    bound.update(c - fdd, x, "x^2V'' upper");
    growth.update((x * e.first - q * e.value) / scale, x, "xV' - qV");
    convexity.update(x * (x * e.second - (qh - 1.0) * e.first) / scale, x, "xV'' - (q-1)V'");
  }

  ValidationReport report{{}, xs.front(), xs.back(), xs.size()};
  auto push = [&](const char* name, const Worst& w) {
    report.checks.push_back({name, w.margin, w.x, w.detail, w.margin >= kMarginTolerance});
  };
  push("bound", bound);
  push("growth", growth);
  push("convexity", convexity);
  return report;
}

double minimal_bound_constant(const Potential& v, const ValidationGrid& grid) {
  check_structure(v);
  double c = 0.0;
  for (double x : log_grid(grid)) {
    const auto e = v.eval(x);
    const double scale = std::pow(x, v.q1()) + std::pow(x, v.q2());
    for (double f : {e.value / scale, x * e.first / scale, x * x * e.second / scale}) {
      if (!(f > 0.0)) return std::numeric_limits<double>::infinity();
      c = std::max({c, f, 1.0 / f});
    }
  }
  return c;
}

}  // namespace landscape
