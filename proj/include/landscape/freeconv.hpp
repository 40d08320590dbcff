#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "landscape/measure.hpp"

namespace landscape {

using Complex = std::complex<double>;

struct FreeConvConfig {
  std::size_t lambda_points = 4001;
  std::vector<double> eta_schedule{1.0, 1e-1, 1e-2, 1e-3, 1e-4};
  double damping = 0.5;
  int max_iterations = 500;
  double tolerance = 1e-13;
  double support_margin = 0.05;  // relative padding of the lambda window
};

/// Stieltjes transform G(z) = integral of nu(da) / (a - z), Im z > 0.
Complex stieltjes(const DiscreteMeasure& nu, Complex z);

struct SubordinationPoint {
  Complex G;  // Stieltjes transform of nu boxplus semicircle at z
  Complex omega;  // subordination function z + G
  int iterations;
  double residual;
};

/// Solves G = G_nu(z + G) with Im G > 0 by guarded Newton steps, falling back to
/// damped fixed-point iteration, at a single z with Im z >= 0. `guess` seeds the
/// iteration; pass 0 to start from i. Throws ConvergenceError with (z, residual)
/// if the tolerance is not reached.
SubordinationPoint solve_subordination(const DiscreteMeasure& nu, Complex z, Complex guess,
                                       const FreeConvConfig& config = {});

/// Same, continuing along the eta schedule from eta_schedule.front() down to
/// Im z, so that the solution stays on the physical branch.
SubordinationPoint solve_subordination_continued(const DiscreteMeasure& nu, Complex z,
                                                 const FreeConvConfig& config = {});

struct StieltjesGrid {
  std::vector<double> lambda_nodes;
  double eta;
  std::vector<Complex> values;
};

struct FreeConvResult {
  std::vector<double> lambda_nodes;
  std::vector<double> density;
  double support_bound;  // m_inf(nu) + 2
  double mass;  // trapezoid mass before normalization
  double log_potential;
  std::vector<double> cdf;  // trapezoid CDF at the nodes
  StieltjesGrid stieltjes;
};

/// Density of nu boxplus semicircle on an equispaced window covering
/// [min nu - 2, max nu + 2] plus margin, read off as Im G / pi at the final eta.
FreeConvResult convolve_semicircle(const DiscreteMeasure& nu, const FreeConvConfig& config = {});

/// Integral of log|lambda| against the sampled density. The density is taken
/// piecewise linear between nodes and log|lambda| is integrated exactly on each
/// piece, so the singularity at 0 carries no quadrature error.
double log_potential(const FreeConvResult& result);

/// Integral of |lambda|^s against the sampled density (trapezoid rule).
double density_moment(const FreeConvResult& result, double s);

/// CDF of the sampled density at x.
double density_cdf(const FreeConvResult& result, double x);

struct OriginLogPotential {
  double value;
  Complex G;
  Complex omega;
  /// d value / d mass_j (up to an additive constant): log|omega - a_j|.
  std::vector<double> mass_gradient;
  /// d value / d a_j: -mass_j Re(1 / (omega - a_j)).
  std::vector<double> location_gradient;
};

/// Integral of log|lambda| against nu boxplus semicircle, from the subordination
/// solution at z = 0:
///   integral log|omega(0) - a| nu(da) + Re(G(0)^2) / 2.
/// A nonzero `guess` (a previous G(0) for a nearby nu) is tried first at a tiny
/// eta; the full eta continuation runs only if that fails.
OriginLogPotential log_potential_at_origin(const DiscreteMeasure& nu, const FreeConvConfig& config = {},
                                           bool with_gradient = false, Complex guess = {});

/// m_s of the semicircle law.
double semicircle_moment(double s);
double semicircle_density(double x);

struct MomentBound {
  double lhs;  // m_s(nu boxplus sc)
  double rhs;  // 2^s (m_s(nu) + m_s(sc))
  bool holds() const { return lhs <= rhs; }
};

MomentBound moment_bound_check(const DiscreteMeasure& nu, double s, const FreeConvConfig& config = {});

}  // namespace landscape
