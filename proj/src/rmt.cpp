#include "landscape/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "landscape/error.hpp"

namespace landscape {

namespace {

constexpr double kSingularLogDet = -690.0;  // |det| below about 1e-300

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Eigen::MatrixXd shifted_goe(const std::vector<double>& diagonal, std::uint64_t seed) {
  const int n = static_cast<int>(diagonal.size());
  Eigen::MatrixXd m = sample_goe(n, n, seed).matrix;
  for (int i = 0; i < n; ++i) m(i, i) += diagonal[i];
  return m;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

GoeSample sample_goe(int n, int ambient_n, std::uint64_t seed) {
  if (n < 1 || ambient_n < n) throw ValidationError("sample_goe requires 1 <= n <= ambient_n");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double off = 1.0 / std::sqrt(static_cast<double>(ambient_n));
  const double diag = std::sqrt(2.0) * off;
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j) {
    m(j, j) = diag * normal(rng);
    for (int i = j + 1; i < n; ++i) {
      const double g = off * normal(rng);
      m(i, j) = g;
      m(j, i) = g;
    }
  }
  return {n, ambient_n, std::move(m), seed};
}

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver failed");
  return solver.eigenvalues();
}

double log_abs_det(const Eigen::MatrixXd& m) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const auto& u = lu.matrixLU();
  double acc = 0.0;
  for (int i = 0; i < u.rows(); ++i) acc += std::log(std::fabs(u(i, i)));
  return acc;
}

LogDetExperiment log_det_experiment(const std::vector<double>& diagonal, int samples, std::uint64_t seed,
                                    const FreeConvConfig& config) {
  if (diagonal.empty()) throw ValidationError("diagonal must be nonempty");
  if (samples < 2) throw ValidationError("need at least 2 samples");
  for (double d : diagonal)
    if (!(std::fabs(d) <= 50.0)) throw ValidationError("diagonal entries must satisfy |d| <= 50");
  const double n = static_cast<double>(diagonal.size());
  std::vector<double> values(samples);
  std::vector<int> redraws(samples, 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (int s = 0; s < samples; ++s) {
    std::uint64_t index = static_cast<std::uint64_t>(s);
    double ld = log_abs_det(shifted_goe(diagonal, derive_seed(seed, index)));
    while (!(ld > kSingularLogDet) && redraws[s] < 100) {
      ++redraws[s];
      index += 0x100000000ULL;
      ld = log_abs_det(shifted_goe(diagonal, derive_seed(seed, index)));
    }
    values[s] = ld / n;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= samples;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (samples - 1);
  int resampled = 0;
  for (int r : redraws) resampled += r;
  const auto conv = convolve_semicircle(empirical_measure(diagonal).compressed(), config);
  return {mean, conv.log_potential, std::sqrt(var / samples), resampled};
}

std::vector<double> pooled_spectrum(const std::vector<double>& diagonal, int samples, std::uint64_t seed) {
  const std::size_t n = diagonal.size();
  std::vector<double> pooled(n * static_cast<std::size_t>(samples));
#pragma omp parallel for schedule(dynamic, 1)
  for (int s = 0; s < samples; ++s) {
    const auto ev = eigenvalues(shifted_goe(diagonal, derive_seed(seed, static_cast<std::uint64_t>(s))));
    std::copy(ev.data(), ev.data() + n, pooled.begin() + static_cast<std::ptrdiff_t>(n * s));
  }
  std::sort(pooled.begin(), pooled.end());
  return pooled;
}

DiscreteMeasure empirical_measure(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("empirical measure needs values");
  const double mass = 1.0 / static_cast<double>(values.size());
  std::vector<Atom> atoms;
  atoms.reserve(values.size());
  for (double v : values) atoms.push_back({v, mass});
  return DiscreteMeasure(std::move(atoms));
}

double wasserstein1(const std::vector<double>& sorted_sample, const FreeConvResult& density) {
  if (sorted_sample.empty()) throw ValidationError("empty sample");
  const double lo = std::min(sorted_sample.front(), density.lambda_nodes.front());
  const double hi = std::max(sorted_sample.back(), density.lambda_nodes.back());
  const std::size_t steps = 20000;
  const double h = (hi - lo) / static_cast<double>(steps);
  const double inv = 1.0 / static_cast<double>(sorted_sample.size());
  // Running CDF of the density, advanced interval by interval.
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double x = lo + h * static_cast<double>(k);
    const auto count = std::upper_bound(sorted_sample.begin(), sorted_sample.end(), x) - sorted_sample.begin();
    const double diff = std::fabs(static_cast<double>(count) * inv - density_cdf(density, x));
    if (k > 0) acc += 0.5 * h * (prev + diff);
    prev = diff;
  }
  return acc;
}

double semicircle_cdf(double x) {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 + (x * std::sqrt(4.0 - x * x) / 4.0 + std::asin(x / 2.0)) / std::numbers::pi;
}

double ks_to_semicircle(const std::vector<double>& sorted_sample) {
  const double n = static_cast<double>(sorted_sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_sample.size(); ++i) {
    const double f = semicircle_cdf(sorted_sample[i]);
    d = std::max({d, std::fabs(f - static_cast<double>(i) / n), std::fabs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

WegnerReport wegner_check(const std::vector<double>& diagonal, double a, double b, int samples,
                          std::uint64_t seed, const std::vector<double>& probe_widths) {
  if (!(b > a)) throw ValidationError("wegner_check requires b > a");
  if (samples < 1) throw ValidationError("need at least 1 sample");
  const double n = static_cast<double>(diagonal.size());
  const double centre = 0.5 * (a + b);
  std::vector<double> main_counts(samples, 0.0);
  std::vector<std::vector<double>> probe_counts(probe_widths.size(), std::vector<double>(samples, 0.0));
#pragma omp parallel for schedule(dynamic, 1)
  for (int s = 0; s < samples; ++s) {
    const auto ev = eigenvalues(shifted_goe(diagonal, derive_seed(seed, static_cast<std::uint64_t>(s))));
    auto count_in = [&](double lo, double hi) {
      const auto first = std::lower_bound(ev.data(), ev.data() + ev.size(), lo);
      const auto last = std::upper_bound(ev.data(), ev.data() + ev.size(), hi);
      return static_cast<double>(last - first);
    };
    main_counts[s] = count_in(a, b);
    for (std::size_t k = 0; k < probe_widths.size(); ++k) {
      probe_counts[k][s] = count_in(centre - 0.5 * probe_widths[k], centre + 0.5 * probe_widths[k]);
    }
  }
  auto mean_of = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
  };
  WegnerReport out;
  out.mean_count = mean_of(main_counts);
  out.fitted_c = 0.0;
  for (std::size_t k = 0; k < probe_widths.size(); ++k) {
    const double m = mean_of(probe_counts[k]);
    const double ratio = m / (n * probe_widths[k]);
    out.widths.push_back({probe_widths[k], m, ratio});
    out.fitted_c = std::max(out.fitted_c, ratio);
  }
  out.bound = out.fitted_c * n * (b - a);
  return out;
}

}  // namespace landscape
