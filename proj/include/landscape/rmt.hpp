#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "landscape/freeconv.hpp"

namespace landscape {

/// Stream seed for sample `index` of an experiment seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

struct GoeSample {
  int n;
  int ambient_n;
  Eigen::MatrixXd matrix;
  std::uint64_t seed;
};

/// Symmetric n x n matrix with diagonal N(0, 2/ambient_n) and off-diagonal
/// N(0, 1/ambient_n) entries.
GoeSample sample_goe(int n, int ambient_n, std::uint64_t seed);

/// Ascending eigenvalues of a symmetric matrix.
Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& symmetric);

/// log|det| through a partial-pivoting LU factorization.
double log_abs_det(const Eigen::MatrixXd& m);

struct LogDetExperiment {
  double empirical;  // (1/N) mean of log|det(D + GOE_N)|
  double predicted;  // log-potential of mu_D boxplus semicircle
  double standard_error;
  int resampled;  // singular draws replaced
};

LogDetExperiment log_det_experiment(const std::vector<double>& diagonal, int samples, std::uint64_t seed,
                                    const FreeConvConfig& config = {});

/// Eigenvalues of diag(d) + GOE_N pooled over samples, sorted.
std::vector<double> pooled_spectrum(const std::vector<double>& diagonal, int samples, std::uint64_t seed);

/// Empirical spectral measure of diagonal values, as atoms of equal mass.
DiscreteMeasure empirical_measure(const std::vector<double>& values);

/// W1 distance between a sorted sample and a sampled density.
double wasserstein1(const std::vector<double>& sorted_sample, const FreeConvResult& density);
/// Kolmogorov distance between a sorted sample and the semicircle law.
double ks_to_semicircle(const std::vector<double>& sorted_sample);
double semicircle_cdf(double x);

struct WegnerWidth {
  double width;
  double mean_count;
  double ratio;  // mean_count / (N * width)
};

struct WegnerReport {
  double mean_count;  // in [a, b]
  double fitted_c;  // largest ratio over the probe widths
  double bound;  // fitted_c * N * (b - a)
  std::vector<WegnerWidth> widths;  // probes centred on (a + b) / 2
};

WegnerReport wegner_check(const std::vector<double>& diagonal, double a, double b, int samples,
                          std::uint64_t seed, const std::vector<double>& probe_widths = {1e-1, 1e-2, 1e-3});

}  // namespace landscape
