#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace landscape {

class Potential;

/// Probability measure with a piecewise-constant density: weight w_i spread
/// uniformly over the cell of width `cell_width` centred at node x_i. The node
/// set is symmetric about 0.
class GridMeasure {
 public:
  GridMeasure(std::vector<double> nodes, std::vector<double> weights, double cell_width);

  /// Equispaced nodes on [-half_width, half_width], weights proportional to
  /// density(x_i).
  static GridMeasure from_density(double half_width, std::size_t points,
                                  const std::function<double(double)>& density);
  /// Discretized N(0, scale^2).
  static GridMeasure gaussian(double half_width, std::size_t points, double scale = 1.0);

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  double cell_width() const { return cell_width_; }
  std::size_t size() const { return nodes_.size(); }

  /// Same nodes, new weights (renormalized).
  GridMeasure with_weights(std::vector<double> weights) const;

  /// m_s by the midpoint rule, sum_i w_i |x_i|^s.
  double moment(double s) const;
  /// Exact second moment of the cell density, sum_i w_i x_i^2 + cell_width^2 / 12.
  double cell_second_moment() const;
  /// E[f(X)] by the midpoint rule.
  double expect(const std::function<double(double)>& f) const;

  bool weights_symmetric(double tol = 1e-12) const;
  /// Averages the weights at x and -x.
  GridMeasure symmetrized() const;
  /// Index of the node mirrored through 0.
  std::size_t mirror_index(std::size_t i) const { return nodes_.size() - 1 - i; }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  double cell_width_;
};

struct Atom {
  double location;
  double mass;
};

class DiscreteMeasure {
 public:
  explicit DiscreteMeasure(std::vector<Atom> atoms);
  static DiscreteMeasure dirac(double location) { return DiscreteMeasure({{location, 1.0}}); }

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  double moment(double s) const;
  /// sup |x| over atoms with positive mass.
  double max_abs() const;
  double min_location() const;
  double max_location() const;
  double cdf(double x) const;
  /// Sorted by location, equal locations merged, zero masses dropped.
  DiscreteMeasure compressed() const;

 private:
  std::vector<Atom> atoms_;
};

/// S_alpha: nodes and cell width scaled by alpha, weights unchanged.
GridMeasure dilate(const GridMeasure& measure, double alpha);

/// KL divergence of the cell density against the standard Gaussian. The
/// Gaussian log-density is integrated exactly over each cell, so the value is
/// the true divergence of the piecewise-constant density and is never negative.
double kl_divergence(const GridMeasure& measure);

/// (g_{t,K})_* mu with g_{t,K}(x) = c1 * min(t^{2-p} V''(t x), K); delta_0 when
/// t = 0. Pass K = infinity for the untruncated map.
DiscreteMeasure pushforward_gt(const GridMeasure& measure, const Potential& potential, double t, double K);

/// Kolmogorov-Smirnov distance between two atomic measures.
double ks_distance(const DiscreteMeasure& a, const DiscreteMeasure& b);

}  // namespace landscape
