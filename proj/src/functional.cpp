#include "landscape/functional.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "landscape/constants.hpp"
#include "landscape/error.hpp"

namespace landscape {

namespace {

double base_constant(int p) { return 0.5 * std::log(static_cast<double>(p - 1)) + 0.5; }

double radial(double t) { return 0.5 * (1.0 - t * t + 2.0 * std::log(t)); }

DiscreteMeasure unscaled_pushforward(const GridMeasure& mu, const Potential& potential, double t) {
  const double c1 = model_constants(potential.p()).hessian_scale;
  const double scale = c1 * std::pow(t, 2.0 - potential.p());
  const auto x = mu.nodes();
  const auto w = mu.weights();
  std::vector<Atom> atoms(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) atoms[i] = {scale * potential.second(x[i]), w[i]};
  return DiscreteMeasure(std::move(atoms));
}

}  // namespace

double semicircle_log_potential(const DiscreteMeasure& nu, const FunctionalConfig& config) {
  if (config.method == LogPotentialMethod::Subordination) {
    return log_potential_at_origin(nu, config.freeconv).value;
  }
  return convolve_semicircle(nu.compressed(), config.freeconv).log_potential;
}

PhiValue phi(double t, const GridMeasure& mu, const Potential& potential, double K, const FunctionalConfig& config) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("phi requires t >= 0");
  if (t == 0.0) return {0.0, 0.0, -0.5};
  const int p = potential.p();
  const double c3 = model_constants(p).exponent_scale;
  const auto x = mu.nodes();
  const auto w = mu.weights();
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double d1 = potential.first(t * x[i]);
    a += w[i] * x[i] * d1;
    b += w[i] * d1 * d1;
  }
  const double tpow = std::pow(t, 2.0 - 2.0 * p);
  PhiValue out;
  out.phi1 = c3 * (p - 1) * tpow * a * a;
  out.phi2 = c3 * p * tpow * b;
  out.phi3 = semicircle_log_potential(pushforward_gt(mu, potential, t, K), config);
  return out;
}

FunctionalValue functional_IK(double t, const GridMeasure& mu, const Potential& potential, double K,
                              const FunctionalConfig& config) {
  const auto ph = phi(t, mu, potential, K, config);
  FunctionalValue out;
  out.phi1 = ph.phi1;
  out.phi2 = ph.phi2;
  out.phi3 = ph.phi3;
  out.kl = kl_divergence(mu);
  out.radial_term = 0.0;
  out.t = t;
  out.K = K;
  out.total = base_constant(potential.p()) + ph.total() - out.kl;
  return out;
}

FunctionalValue functional_I_t(double t, const GridMeasure& mu, const Potential& potential,
                               const FunctionalConfig& config) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("I(t, mu) requires t > 0");
  const int p = potential.p();
  const double c3 = model_constants(p).exponent_scale;
  const auto x = mu.nodes();
  const auto w = mu.weights();
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double d1 = potential.first(x[i]);
    a += w[i] * x[i] * d1;
    b += w[i] * d1 * d1;
  }
  FunctionalValue out;
  out.t = t;
  out.phi1 = c3 * (p - 1) * std::pow(t, -2.0 * p) * a * a;
  out.phi2 = c3 * p * std::pow(t, 2.0 - 2.0 * p) * b;
  out.phi3 = semicircle_log_potential(unscaled_pushforward(mu, potential, t), config);
  out.kl = kl_divergence(mu);
  out.radial_term = radial(t);
  out.total = base_constant(p) + out.phi1 - out.phi2 + out.phi3 - out.kl - out.radial_term;
  return out;
}

FunctionalValue complexity_I(const GridMeasure& mu, const Potential& potential, const FunctionalConfig& config) {
  const double m2 = mu.cell_second_moment();
  if (!(m2 > 0.0)) throw ValidationError("I(mu) requires a positive second moment");
  const double t = std::sqrt(m2);
  const auto direct = functional_I_t(t, mu, potential, config);
  const auto reduced = functional_IK(t, dilate(mu, 1.0 / t), potential, kNoTruncation, config);
  const double gap = std::fabs(direct.total - reduced.total);
  if (!(gap <= config.reduction_tolerance * std::max(1.0, std::fabs(direct.total)))) {
    std::ostringstream msg;
    msg << "dilation reduction mismatch: direct=" << direct.total << " reduced=" << reduced.total;
    throw std::logic_error(msg.str());
  }
  return direct;
}

FunctionalGradient complexity_I_with_gradient(const GridMeasure& mu, const Potential& potential,
                                              const FunctionalConfig& config, Complex guess) {
  const int p = potential.p();
  const auto consts = model_constants(p);
  const double c3 = consts.exponent_scale;
  const auto x = mu.nodes();
  const auto w = mu.weights();
  const std::size_t n = x.size();
  const double h = mu.cell_width();
  const double m2 = mu.cell_second_moment();
  if (!(m2 > 0.0)) throw ValidationError("I(mu) requires a positive second moment");
  const double t = std::sqrt(m2);

  std::vector<double> d1(n);
  std::vector<double> d2(n);
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = potential.eval(x[i]);
    d1[i] = e.first;
    d2[i] = e.second;
    a += w[i] * x[i] * e.first;
    b += w[i] * e.first * e.first;
  }
  const double m2_p = std::pow(m2, -static_cast<double>(p));
  const double atom_scale = consts.hessian_scale * std::pow(t, 2.0 - p);
  std::vector<Atom> atoms(n);
  for (std::size_t i = 0; i < n; ++i) atoms[i] = {atom_scale * d2[i], w[i]};
  const DiscreteMeasure nu(std::move(atoms));
  const auto lp = log_potential_at_origin(nu, config.freeconv, true, guess);

  FunctionalGradient out;
  out.origin_G = lp.G;
  auto& v = out.value;
  v.t = t;
  v.phi1 = c3 * (p - 1) * m2_p * a * a;
  v.phi2 = c3 * p * m2_p * m2 * b;
  v.phi3 = lp.value;
  v.kl = kl_divergence(mu);
  v.radial_term = radial(t);
  v.total = base_constant(p) + v.phi1 - v.phi2 + v.phi3 - v.kl - v.radial_term;

  // Sensitivity of phi3 to m2 through the atom locations.
  double dphi3_dm2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    dphi3_dm2 += lp.location_gradient[j] * nu.atoms()[j].location * (2.0 - p) / (2.0 * m2);
  }
  const double cell_var = h * h / 12.0;
  out.gradient.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x2 = x[i] * x[i];
    const double g1 = c3 * (p - 1) * (2.0 * a * m2_p * x[i] * d1[i] - p * a * a * m2_p / m2 * x2);
    const double g2 = c3 * p * (m2_p * m2 * d1[i] * d1[i] + (1.0 - p) * b * m2_p * x2);
    const double g3 = lp.mass_gradient[i] + dphi3_dm2 * x2;
    const double gkl = w[i] > 0.0 ? std::log(w[i] / h) + 1.0 + kLogSqrtTwoPi + 0.5 * (x2 + cell_var)
                                  : 0.0;
    const double grad_radial = 0.5 * (1.0 / m2 - 1.0) * x2;
    out.gradient[i] = g1 - g2 + g3 - gkl - grad_radial;
  }
  return out;
}

double constraint_integrand(const Potential& potential, double x) {
  const auto e = potential.eval(x);
  return x * e.first / potential.p() - e.value;
}

double constraint_value(const GridMeasure& mu, const Potential& potential) {
  return mu.expect([&](double x) { return constraint_integrand(potential, x); });
}

double scaled_constraint_value(double t, const GridMeasure& mu, const Potential& potential) {
  if (!(t >= 0.0)) throw ValidationError("scale t must be >= 0");
  return mu.expect([&](double x) { return constraint_integrand(potential, t * x); });
}

double psi(double t, double x, const Potential& potential) {
  if (!(t >= 0.0)) throw ValidationError("psi requires t >= 0");
  if (t == 0.0) return 0.0;
  const int p = potential.p();
  const double d1 = potential.first(t * x);
  return model_constants(p).exponent_scale * p * std::pow(t, 2.0 - 2.0 * p) * d1 * d1;
}

double w_bound(double x, const Potential& potential) {
  if (!(x >= 0.0)) throw ValidationError("w(x) requires x >= 0");
  const double c = potential.c_bound();
  const double p = potential.p();
  return -x / (2.0 * c * c * p * p) + 0.5 * std::log(8.0 * c * c * x / (p * (p - 1.0)) + 4.0);
}

double w_bound_sup(const Potential& potential) {
  const double c = potential.c_bound();
  const double p = potential.p();
  const double slope = 8.0 * c * c / (p * (p - 1.0));
  const double x_star = c * c * p * p - 4.0 / slope;
  return x_star > 0.0 ? w_bound(x_star, potential) : w_bound(0.0, potential);
}

double w_bound_argument(const GridMeasure& mu, const Potential& potential) {
  const double t2 = mu.cell_second_moment();
  const double p = potential.p();
  return std::pow(t2, 1.0 - p) * (mu.moment(2.0 * potential.q1() - 2.0) + mu.moment(2.0 * potential.q2() - 2.0));
}

double functional_upper_cap(const Potential& potential) {
  return base_constant(potential.p()) + w_bound_sup(potential);
}

}  // namespace landscape
