#include "landscape/freeconv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "landscape/error.hpp"

namespace landscape {

namespace {

struct TransformPair {
  Complex value;
  Complex derivative;
};

TransformPair stieltjes_with_derivative(const DiscreteMeasure& nu, Complex w) {
  Complex g{0.0, 0.0};
  Complex dg{0.0, 0.0};
  for (const auto& atom : nu.atoms()) {
    if (atom.mass == 0.0) continue;
    const Complex inv = 1.0 / (atom.location - w);
    g += atom.mass * inv;
    dg += atom.mass * inv * inv;
  }
  return {g, dg};
}

bool admissible(Complex G, double eta) { return eta > 0.0 ? G.imag() > 0.0 : G.imag() >= 0.0; }

// Antiderivatives of log|x| and x log|x|, continuous at 0.
double log_antiderivative(double x) { return x == 0.0 ? 0.0 : x * std::log(std::fabs(x)) - x; }
double xlog_antiderivative(double x) {
  return x == 0.0 ? 0.0 : 0.5 * x * x * std::log(std::fabs(x)) - 0.25 * x * x;
}

std::vector<double> origin_schedule(const FreeConvConfig& config) {
  std::vector<double> etas = config.eta_schedule;
  double last = etas.empty() ? 1.0 : etas.back();
  while (last > 1.5e-10) {
    last *= 0.1;
    etas.push_back(last);
  }
  return etas;
}

}  // namespace

Complex stieltjes(const DiscreteMeasure& nu, Complex z) { return stieltjes_with_derivative(nu, z).value; }

SubordinationPoint solve_subordination(const DiscreteMeasure& nu, Complex z, Complex guess,
                                       const FreeConvConfig& config) {
  const double eta = z.imag();
  if (eta < 0.0) throw ValidationError("subordination requires Im z >= 0");
  Complex G = guess;
  if (!admissible(G, eta) || G == Complex{0.0, 0.0}) G = Complex{0.0, 1.0};

  auto tp = stieltjes_with_derivative(nu, z + G);
  Complex h = G - tp.value;
  double residual = std::abs(h);
  int it = 0;
  for (; it < config.max_iterations; ++it) {
    if (residual <= config.tolerance * std::max(1.0, std::abs(G))) break;
    const Complex slope = 1.0 - tp.derivative;
    bool accepted = false;
    if (std::abs(slope) > 1e-300) {
      const Complex step = -h / slope;
      double scale = 1.0;
      for (int k = 0; k < 40; ++k, scale *= 0.5) {
        const Complex trial = G + scale * step;
        if (!admissible(trial, eta)) continue;
        const auto tp_trial = stieltjes_with_derivative(nu, z + trial);
        const Complex h_trial = trial - tp_trial.value;
        if (std::abs(h_trial) < residual) {
          G = trial;
          tp = tp_trial;
          h = h_trial;
          residual = std::abs(h);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      const Complex trial = (1.0 - config.damping) * G + config.damping * tp.value;
      if (!admissible(trial, eta)) break;
      G = trial;
      tp = stieltjes_with_derivative(nu, z + G);
      h = G - tp.value;
      residual = std::abs(h);
    }
  }
  if (!(residual <= config.tolerance * std::max(1.0, std::abs(G))) || !std::isfinite(residual)) {
    std::ostringstream msg;
    msg << "subordination did not converge at lambda=" << z.real() << " eta=" << eta << " residual=" << residual;
    throw ConvergenceError(msg.str());
  }
  return {G, z + G, it, residual};
}

SubordinationPoint solve_subordination_continued(const DiscreteMeasure& nu, Complex z,
                                                 const FreeConvConfig& config) {
  Complex guess{0.0, 1.0};
  for (double eta : config.eta_schedule) {
    if (eta <= z.imag()) break;
    guess = solve_subordination(nu, Complex{z.real(), eta}, guess, config).G;
  }
  return solve_subordination(nu, z, guess, config);
}

namespace {

// Real omega with omega - G_nu(omega) = x and 1 - int nu(da)/(a - omega)^2 > 0,
// which certifies that x lies outside the support of nu boxplus semicircle.
std::optional<double> real_subordination(const DiscreteMeasure& nu, double x, double omega) {
  for (int it = 0; it < 60; ++it) {
    double g = 0.0;
    double dg = 0.0;
    for (const auto& atom : nu.atoms()) {
      const double r = 1.0 / (atom.location - omega);
      g += atom.mass * r;
      dg += atom.mass * r * r;
    }
    if (!std::isfinite(g)) return std::nullopt;
    const double f = omega - g - x;
    const double slope = 1.0 - dg;
    if (std::fabs(f) <= 1e-13 * (1.0 + std::fabs(x))) {
      if (slope > 0.0) return g;
      return std::nullopt;
    }
    if (!(slope > 0.0)) return std::nullopt;
    omega -= f / slope;
  }
  return std::nullopt;
}

}  // namespace

FreeConvResult convolve_semicircle(const DiscreteMeasure& nu, const FreeConvConfig& config) {
  if (config.lambda_points < 3) throw ValidationError("lambda grid needs at least 3 points");
  if (config.eta_schedule.empty()) throw ValidationError("eta schedule must be nonempty");
  const double lo0 = nu.min_location() - 2.0;
  const double hi0 = nu.max_location() + 2.0;
  const double pad = config.support_margin * (hi0 - lo0);
  const double lo = lo0 - pad;
  const double hi = hi0 + pad;
  const std::size_t n = config.lambda_points;
  const double h = (hi - lo) / static_cast<double>(n - 1);
  const double eta = config.eta_schedule.back();

  FreeConvResult out;
  out.lambda_nodes.resize(n);
  out.density.resize(n);
  out.stieltjes.eta = eta;
  out.stieltjes.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.lambda_nodes[k] = lo + h * static_cast<double>(k);

  const long long count = static_cast<long long>(n);
  std::string failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (long long k = 0; k < count; ++k) {
    try {
      const auto sol = solve_subordination_continued(nu, Complex{out.lambda_nodes[k], eta}, config);
      out.stieltjes.values[k] = sol.G;
      out.density[k] = sol.G.imag() / std::numbers::pi;
      // Outside the support the eta-smoothed value is a Lorentzian tail; the
      // boundary value there is real.
      if (sol.G.imag() < 1e-2) {
        if (const auto g = real_subordination(nu, out.lambda_nodes[k], sol.omega.real())) {
          out.stieltjes.values[k] = Complex{*g, 0.0};
          out.density[k] = 0.0;
        }
      }
    } catch (const ConvergenceError& e) {
#pragma omp critical
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw ConvergenceError(failure);

  double mass = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) mass += 0.5 * h * (out.density[k] + out.density[k + 1]);
  out.mass = mass;
  for (double& f : out.density) f /= mass;
  out.cdf.assign(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k)
    out.cdf[k + 1] = out.cdf[k] + 0.5 * h * (out.density[k] + out.density[k + 1]);
  out.support_bound = nu.max_abs() + 2.0;
  out.stieltjes.lambda_nodes = out.lambda_nodes;
  out.log_potential = log_potential(out);
  return out;
}

double log_potential(const FreeConvResult& result) {
  const auto& x = result.lambda_nodes;
  const auto& f = result.density;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double a = x[k];
    const double b = x[k + 1];
    const double slope = (f[k + 1] - f[k]) / (b - a);
    const double intercept = f[k] - slope * a;
    acc += intercept * (log_antiderivative(b) - log_antiderivative(a)) +
           slope * (xlog_antiderivative(b) - xlog_antiderivative(a));
  }
  return acc;
}

double density_moment(const FreeConvResult& result, double s) {
  if (!(s > 0.0)) throw ValidationError("moment order must be positive");
  const auto& x = result.lambda_nodes;
  const auto& f = result.density;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    acc += 0.5 * (x[k + 1] - x[k]) *
           (f[k] * std::pow(std::fabs(x[k]), s) + f[k + 1] * std::pow(std::fabs(x[k + 1]), s));
  }
  return acc;
}

double density_cdf(const FreeConvResult& result, double x) {
  const auto& xs = result.lambda_nodes;
  const auto& f = result.density;
  if (x <= xs.front()) return 0.0;
  if (x >= xs.back()) return 1.0;
  const std::size_t k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
  double base = 0.0;
  if (result.cdf.size() == xs.size()) {
    base = result.cdf[k];
  } else {
    for (std::size_t j = 0; j < k; ++j) base += 0.5 * (xs[j + 1] - xs[j]) * (f[j] + f[j + 1]);
  }
  const double a = xs[k];
  const double fx = f[k] + (f[k + 1] - f[k]) * (x - a) / (xs[k + 1] - a);
  return std::clamp(base + 0.5 * (x - a) * (f[k] + fx), 0.0, 1.0);
}

OriginLogPotential log_potential_at_origin(const DiscreteMeasure& nu, const FreeConvConfig& config,
                                           bool with_gradient, Complex guess) {
  const auto schedule = origin_schedule(config);
  bool warm = false;
  if (guess.imag() > 0.0) {
    try {
      const auto sol = solve_subordination(nu, Complex{0.0, schedule.back()}, guess, config);
      if (sol.G.imag() > 0.0) {
        guess = sol.G;
        warm = true;
      }
    } catch (const ConvergenceError&) {
    }
  }
  if (!warm) {
    guess = Complex{0.0, 1.0};
    for (double eta : schedule) guess = solve_subordination(nu, Complex{0.0, eta}, guess, config).G;
  }
  Complex G = guess;
  try {
    const auto exact = solve_subordination(nu, Complex{0.0, 0.0}, guess, config);
    if (std::abs(exact.G - guess) < 1e-6 * std::max(1.0, std::abs(guess))) G = exact.G;
  } catch (const ConvergenceError&) {
    // keep the smallest-eta solution
  }
  const Complex omega = G;  // z + G at z = 0
  OriginLogPotential out{0.0, G, omega, {}, {}};
  double acc = 0.0;
  for (const auto& atom : nu.atoms()) {
    if (atom.mass > 0.0) acc += atom.mass * std::log(std::abs(omega - atom.location));
  }
  out.value = acc + 0.5 * (G * G).real();
  if (with_gradient) {
    out.mass_gradient.reserve(nu.size());
    out.location_gradient.reserve(nu.size());
    for (const auto& atom : nu.atoms()) {
      const Complex d = omega - atom.location;
      out.mass_gradient.push_back(std::log(std::abs(d)));
      out.location_gradient.push_back(-atom.mass * (1.0 / d).real());
    }
  }
  return out;
}

double semicircle_moment(double s) {
  if (!(s > 0.0)) throw ValidationError("moment order must be positive");
  return std::pow(2.0, s + 2.0) / std::numbers::pi * 0.5 * std::beta(0.5 * (s + 1.0), 1.5);
}

double semicircle_density(double x) {
  return std::fabs(x) >= 2.0 ? 0.0 : std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi);
}

MomentBound moment_bound_check(const DiscreteMeasure& nu, double s, const FreeConvConfig& config) {
  const auto conv = convolve_semicircle(nu, config);
  const double lhs = density_moment(conv, s);
  const double rhs = std::pow(2.0, s) * (nu.moment(s) + semicircle_moment(s));
  return {lhs, rhs};
}

}  // namespace landscape
