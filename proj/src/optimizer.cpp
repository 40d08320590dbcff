#include "landscape/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <sstream>

#include "landscape/error.hpp"

namespace landscape {

namespace {

constexpr double kLogFloor = 700.0;  // weights kept above max * e^-700
constexpr double kMaxStep = 4.0;

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

std::vector<double> softmax(const std::vector<double>& logw) {
  const double lse = log_sum_exp(logw);
  std::vector<double> w(logw.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logw[i] - lse);
  return w;
}

void floor_logs(std::vector<double>& logw) {
  const double m = *std::max_element(logw.begin(), logw.end());
  for (double& x : logw) x = std::max(x, m - kLogFloor);
}

std::vector<double> integrands(const GridMeasure& mu, const Potential& potential) {
  std::vector<double> c(mu.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = constraint_integrand(potential, mu.nodes()[i]);
  return c;
}

struct TiltMoments {
  double mean;
  double variance;
};

TiltMoments tilted_moments(const std::vector<double>& logw, const std::vector<double>& c, double lambda) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logw.size(); ++i) m = std::max(m, logw[i] + lambda * c[i]);
  double z = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    const double e = std::exp(logw[i] + lambda * c[i] - m);
    z += e;
    s1 += e * c[i];
    s2 += e * c[i] * c[i];
  }
  const double mean = s1 / z;
  return {mean, std::max(0.0, s2 / z - mean * mean)};
}

// Tilts log-weights by lambda * c, lambda >= 0 minimal, so that the constraint
// mean is at least u (and within a relative 1e-12 of it when tilted).
std::vector<double> tilt_to_constraint(std::vector<double> logw, const std::vector<double>& c, double u) {
  if (tilted_moments(logw, c, 0.0).mean >= u) {
    floor_logs(logw);
    return logw;
  }
  const double cmax = *std::max_element(c.begin(), c.end());
  if (!(cmax > u)) {
    std::ostringstream msg;
    msg << "level u=" << u << " is not reachable on the grid (max integrand " << cmax
        << "); increase grid_max";
    throw ValidationError(msg.str());
  }
  const double cscale = std::max(1.0, *std::max_element(c.begin(), c.end(), [](double a, double b) {
    return std::fabs(a) < std::fabs(b);
  }));
  const double slack = 1e-12 * std::max(1.0, std::fabs(u));
  double lo = 0.0;
  double hi = 1.0 / cscale;
  int guard = 0;
  while (tilted_moments(logw, c, hi).mean < u) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 2000) throw ConvergenceError("constraint tilting failed to bracket");
  }
  // Safeguarded Newton: the tilted mean is increasing with slope = variance.
  double lambda = hi;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const auto mom = tilted_moments(logw, c, lambda);
    const double f = mom.mean - u;
    if (f >= 0.0) {
      hi = lambda;
      if (f <= slack) break;
    } else {
      lo = lambda;
    }
    double next = mom.variance > 0.0 ? lambda - f / mom.variance : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    lambda = next;
  }
  for (std::size_t i = 0; i < logw.size(); ++i) logw[i] += hi * c[i];
  const double lse = log_sum_exp(logw);
  for (double& x : logw) x -= lse;
  floor_logs(logw);
  return logw;
}

std::vector<double> logs_of(const GridMeasure& mu) {
  std::vector<double> out(mu.size());
  double m = 0.0;
  for (double w : mu.weights()) m = std::max(m, w);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double w = mu.weights()[i];
    out[i] = w > 0.0 ? std::log(w) : std::log(m) - kLogFloor;
  }
  floor_logs(out);
  return out;
}

double constraint_mean(std::span<const double> w, const std::vector<double>& c) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * c[i];
  return acc;
}

struct AscentResult {
  GridMeasure measure;
  double value;
  int iterations;
};

AscentResult mirror_ascent(const GridMeasure& start, const Potential& potential, double u,
                           const std::vector<double>& c, const SolverConfig& config) {
  auto logw = tilt_to_constraint(logs_of(start), c, u);
  GridMeasure mu = start.with_weights(softmax(logw));
  auto current = complexity_I_with_gradient(mu, potential, config.functional);
  double step = 0.5;
  int small_gains = 0;
  int it = 0;
  for (; it < config.max_iterations; ++it) {
    const auto& g = current.gradient;
    const auto& w = mu.weights();
    double gbar = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gbar += w[i] * g[i];
    bool accepted = false;
    while (step > 1e-12) {
      std::vector<double> trial(logw.size());
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = logw[i] + step * (g[i] - gbar);
      try {
        trial = tilt_to_constraint(std::move(trial), c, u);
        GridMeasure candidate = start.with_weights(softmax(trial));
        if (constraint_mean(candidate.weights(), c) < u - 1e-12 * std::max(1.0, u)) {
          step *= 0.5;
          continue;
        }
        auto next = complexity_I_with_gradient(candidate, potential, config.functional, current.origin_G);
        if (std::isfinite(next.value.total) && next.value.total >= current.value.total) {
          const double gain = next.value.total - current.value.total;
          small_gains = gain < config.tol ? small_gains + 1 : 0;
          logw = std::move(trial);
          mu = std::move(candidate);
          current = std::move(next);
          step = std::min(kMaxStep, step * 1.5);
          accepted = true;
          break;
        }
      } catch (const ConvergenceError&) {
      }
      step *= 0.5;
    }
    if (!accepted || small_gains >= 5) break;
  }
  return {mu, current.value.total, it};
}

}  // namespace

GridMeasure solver_grid_gaussian(const SolverConfig& config, double scale) {
  return GridMeasure::gaussian(config.grid_max, config.grid_points, scale);
}

std::vector<std::pair<std::string, GridMeasure>> starting_measures(const SolverConfig& config) {
  std::vector<std::pair<std::string, GridMeasure>> out;
  const int random_starts = config.restarts >= 4 ? 2 : 0;
  const int gaussian_starts = std::max(1, config.restarts - random_starts);
  const double t_lo = 0.1;
  const double t_hi = std::min(2.0, config.grid_max / 4.0);
  for (int k = 0; k < gaussian_starts; ++k) {
    const double frac = gaussian_starts == 1 ? 0.5 : static_cast<double>(k) / (gaussian_starts - 1);
    const double t = t_lo * std::pow(t_hi / t_lo, frac);
    std::ostringstream id;
    id << "gaussian(t=" << t << ")";
    out.emplace_back(id.str(), solver_grid_gaussian(config, t));
  }
  const auto base = solver_grid_gaussian(config, 1.0);
  for (int k = 0; k < random_starts; ++k) {
    std::mt19937_64 rng(config.seed + 7919ULL * static_cast<std::uint64_t>(k + 1));
    std::gamma_distribution<double> gamma(1.0, 1.0);
    std::vector<double> w(base.size());
    for (double& x : w) x = gamma(rng);
    std::ostringstream id;
    id << "dirichlet(" << k << ")";
    out.emplace_back(id.str(), base.with_weights(std::move(w)));
  }
  return out;
}

GridMeasure project_to_constraint(const GridMeasure& mu, const Potential& potential, double u) {
  const auto c = integrands(mu, potential);
  return mu.with_weights(softmax(tilt_to_constraint(logs_of(mu), c, u)));
}

ComplexityReport maximize_sigma(double u, const Potential& potential, const SolverConfig& config,
                                const std::vector<GridMeasure>& warm_starts) {
  if (!(u >= 0.0) || !std::isfinite(u)) throw ValidationError("u must be finite and >= 0");
  auto starts = starting_measures(config);
  for (std::size_t k = 0; k < warm_starts.size(); ++k) {
    if (warm_starts[k].size() != config.grid_points)
      throw ValidationError("warm start does not live on the solver grid");
    starts.emplace_back("warm(" + std::to_string(k) + ")", warm_starts[k]);
  }
  const auto c = integrands(starts.front().second, potential);
  const double cmax = *std::max_element(c.begin(), c.end());
  if (!(cmax > u)) {
    std::ostringstream msg;
    msg << "level u=" << u << " is not reachable on the grid (max integrand " << cmax << "); increase grid_max";
    throw ValidationError(msg.str());
  }

  std::vector<std::optional<AscentResult>> results(starts.size());
  const long long count = static_cast<long long>(starts.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long k = 0; k < count; ++k) {
    try {
      results[k] = mirror_ascent(starts[k].second, potential, u, c, config);
    } catch (const ConvergenceError&) {
    }
  }

  std::vector<CertificateEntry> certificate;
  int best = -1;
  int total_iterations = 0;
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (!results[k]) continue;
    certificate.push_back({starts[k].first, results[k]->value});
    total_iterations += results[k]->iterations;
    if (best < 0 || results[k]->value > results[best]->value) best = static_cast<int>(k);
  }
  if (best < 0) throw ConvergenceError("every optimizer start failed");

  const GridMeasure& measure = results[best]->measure;
  const auto value = complexity_I(measure, potential, config.functional);
  return {u,
          value.total,
          measure,
          value,
          constraint_value(measure, potential) - u,
          total_iterations,
          static_cast<int>(starts.size()),
          std::move(certificate)};
}

std::vector<ComplexityReport> sigma_curve(std::vector<double> us, const Potential& potential,
                                          const SolverConfig& config) {
  std::sort(us.begin(), us.end());
  std::vector<ComplexityReport> out;
  for (double u : us) {
    std::vector<GridMeasure> warm;
    if (!out.empty()) warm.push_back(out.back().best_measure);
    out.push_back(maximize_sigma(u, potential, config, warm));
  }
  // A maximizer at a larger level is feasible for every smaller level.
  for (std::size_t k = out.size(); k-- > 1;) {
    auto& lower = out[k - 1];
    const auto& upper = out[k];
    if (upper.sigma > lower.sigma) {
      lower.best_measure = upper.best_measure;
      lower.value = upper.value;
      lower.sigma = upper.sigma;
      lower.feasibility_slack = constraint_value(lower.best_measure, potential) - lower.u;
      lower.certificate.push_back({"from u=" + std::to_string(upper.u), upper.sigma});
    }
  }
  return out;
}

CriticalLevelReport find_uc(const Potential& potential, const SolverConfig& config) {
  int solves = 1;
  const auto zero = maximize_sigma(0.0, potential, config);
  if (!(zero.sigma >= 0.0)) {
    std::ostringstream msg;
    msg << "Sigma(0) = " << zero.sigma << " < 0; the critical level is 0 or the solver failed";
    throw ConvergenceError(msg.str());
  }
  double u_lo = 0.0;
  double s_lo = zero.sigma;
  GridMeasure m_lo = zero.best_measure;
  double u_hi = std::max(config.u_initial, config.uc_tolerance);
  std::optional<ComplexityReport> hi;
  while (true) {
    if (u_hi > config.u_max_cap) throw ConvergenceError("Sigma(u) >= 0 up to u_max_cap; enlarge the grid");
    auto r = maximize_sigma(u_hi, potential, config, {m_lo});
    ++solves;
    if (r.sigma < 0.0) {
      hi = std::move(r);
      break;
    }
    u_lo = u_hi;
    s_lo = r.sigma;
    m_lo = r.best_measure;
    u_hi *= 2.0;
  }
  double s_hi = hi->sigma;
  GridMeasure m_hi = hi->best_measure;
  while (u_hi - u_lo > config.uc_tolerance) {
    const double mid = 0.5 * (u_lo + u_hi);
    auto r = maximize_sigma(mid, potential, config, {m_lo, m_hi});
    ++solves;
    if (r.sigma < 0.0) {
      u_hi = mid;
      s_hi = r.sigma;
      m_hi = r.best_measure;
    } else {
      u_lo = mid;
      s_lo = r.sigma;
      m_lo = r.best_measure;
    }
  }
  return {0.5 * (u_lo + u_hi), {u_lo, u_hi}, s_lo, s_hi, config.uc_tolerance, zero.sigma, solves};
}

}  // namespace landscape
