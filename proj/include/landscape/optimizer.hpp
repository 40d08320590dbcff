#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "landscape/functional.hpp"
#include "landscape/measure.hpp"
#include "landscape/potential.hpp"

namespace landscape {

struct SolverConfig {
  double grid_max = 8.0;
  std::size_t grid_points = 2001;
  int restarts = 8;  // Gaussian starts plus two random starts
  std::uint64_t seed = 20240601;
  double tol = 1e-9;  // stop when the per-step gain stays below this
  int max_iterations = 400;
  double K = kNoTruncation;
  double uc_tolerance = 1e-2;
  double u_initial = 0.05;  // first trial level when expanding for u_c
  double u_max_cap = 1e6;
  FunctionalConfig functional{};
};

struct CertificateEntry {
  std::string start;
  double value;
};

struct ComplexityReport {
  double u;
  double sigma;
  GridMeasure best_measure;
  FunctionalValue value;
  double feasibility_slack;
  int iterations;
  int restarts;
  std::vector<CertificateEntry> certificate;
};

struct CriticalLevelReport {
  double u_c;
  std::pair<double, double> bracket;
  double sigma_low;
  double sigma_high;
  double tolerance;
  double sigma_zero;
  int solves;
};

/// Symmetric grid used by the optimizer.
GridMeasure solver_grid_gaussian(const SolverConfig& config, double scale);

/// Starting measures: discretized N(0, t^2) for log-spaced t, plus two
/// Dirichlet-random weight vectors.
std::vector<std::pair<std::string, GridMeasure>> starting_measures(const SolverConfig& config);

/// KL projection of `mu` onto {constraint_value >= u}: exponential tilting of
/// the weights by the constraint integrand. Throws ValidationError when no
/// measure on the grid reaches u.
GridMeasure project_to_constraint(const GridMeasure& mu, const Potential& potential, double u);

/// Maximizes I over grid measures with constraint_value >= u by entropic mirror
/// ascent from every start (and `warm_starts`), returning the best.
ComplexityReport maximize_sigma(double u, const Potential& potential, const SolverConfig& config = {},
                                const std::vector<GridMeasure>& warm_starts = {});

/// Sigma at each u (sorted ascending), warm-started along the grid and made
/// nonincreasing by reusing maximizers of larger u, which are feasible for
/// smaller u.
std::vector<ComplexityReport> sigma_curve(std::vector<double> us, const Potential& potential,
                                          const SolverConfig& config = {});

/// Expands u geometrically until Sigma(u) < 0, then bisects.
CriticalLevelReport find_uc(const Potential& potential, const SolverConfig& config = {});

}  // namespace landscape
