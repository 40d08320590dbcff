#include "landscape/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "landscape/constants.hpp"
#include "landscape/error.hpp"
#include "landscape/potential.hpp"

namespace landscape {

namespace {

constexpr double kMassTolerance = 1e-9;

std::vector<double> normalized(std::vector<double> w) {
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("weights must be finite and nonnegative");
    total += x;
  }
  if (!(total > 0.0)) throw ValidationError("weights must have positive total mass");
  for (double& x : w) x /= total;
  return w;
}

}  // namespace

GridMeasure::GridMeasure(std::vector<double> nodes, std::vector<double> weights, double cell_width)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), cell_width_(cell_width) {
  if (nodes_.empty() || nodes_.size() != weights_.size())
    throw ValidationError("grid measure needs matching, nonempty nodes and weights");
  if (!(cell_width_ > 0.0)) throw ValidationError("cell width must be positive");
  const double scale = std::max(std::fabs(nodes_.front()), std::fabs(nodes_.back()));
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (i > 0 && !(nodes_[i] > nodes_[i - 1])) throw ValidationError("grid nodes must be ascending");
    if (std::fabs(nodes_[i] + nodes_[mirror_index(i)]) > 1e-12 * std::max(1.0, scale))
      throw ValidationError("grid nodes must be symmetric about 0");
  }
  double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::fabs(total - 1.0) > kMassTolerance) throw ValidationError("grid weights must sum to 1");
  weights_ = normalized(std::move(weights_));
}

GridMeasure GridMeasure::from_density(double half_width, std::size_t points,
                                      const std::function<double(double)>& density) {
  if (points < 3) throw ValidationError("grid needs at least 3 points");
  if (!(half_width > 0.0)) throw ValidationError("grid half width must be positive");
  const double h = 2.0 * half_width / static_cast<double>(points - 1);
  std::vector<double> nodes(points);
  std::vector<double> weights(points);
  for (std::size_t i = 0; i < points; ++i) {
    // Built from both ends so that x_i = -x_{n-1-i} exactly.
    const double k = static_cast<double>(i) - 0.5 * static_cast<double>(points - 1);
    nodes[i] = k * h;
  }
  for (std::size_t i = 0; i < points; ++i) weights[i] = density(nodes[i]);
  return GridMeasure(std::move(nodes), normalized(std::move(weights)), h);
}

GridMeasure GridMeasure::gaussian(double half_width, std::size_t points, double scale) {
  if (!(scale > 0.0)) throw ValidationError("gaussian scale must be positive");
  return from_density(half_width, points, [scale](double x) {
    const double y = x / scale;
    return std::exp(-0.5 * y * y);
  });
}

GridMeasure GridMeasure::with_weights(std::vector<double> weights) const {
  return GridMeasure(nodes_, normalized(std::move(weights)), cell_width_);
}

double GridMeasure::moment(double s) const {
  if (!(s > 0.0)) throw ValidationError("moment order must be positive");
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    acc += weights_[i] * std::pow(std::fabs(nodes_[i]), s);
  }
  return acc;
}

double GridMeasure::cell_second_moment() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * nodes_[i] * nodes_[i];
  return acc + cell_width_ * cell_width_ / 12.0;
}

double GridMeasure::expect(const std::function<double(double)>& f) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (weights_[i] != 0.0) acc += weights_[i] * f(nodes_[i]);
  }
  return acc;
}

bool GridMeasure::weights_symmetric(double tol) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (std::fabs(weights_[i] - weights_[mirror_index(i)]) > tol) return false;
  }
  return true;
}

GridMeasure GridMeasure::symmetrized() const {
  std::vector<double> w(weights_.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * (weights_[i] + weights_[mirror_index(i)]);
  return GridMeasure(nodes_, std::move(w), cell_width_);
}

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw ValidationError("discrete measure needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (!(a.mass >= 0.0) || !std::isfinite(a.location)) throw ValidationError("invalid atom");
    total += a.mass;
  }
  if (std::fabs(total - 1.0) > kMassTolerance) throw ValidationError("atom masses must sum to 1");
  for (auto& a : atoms_) a.mass /= total;
}

double DiscreteMeasure::moment(double s) const {
  if (!(s > 0.0)) throw ValidationError("moment order must be positive");
  double acc = 0.0;
  for (const auto& a : atoms_) acc += a.mass * std::pow(std::fabs(a.location), s);
  return acc;
}

double DiscreteMeasure::max_abs() const {
  double m = 0.0;
  for (const auto& a : atoms_)
    if (a.mass > 0.0) m = std::max(m, std::fabs(a.location));
  return m;
}

double DiscreteMeasure::min_location() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& a : atoms_)
    if (a.mass > 0.0) m = std::min(m, a.location);
  return m;
}

double DiscreteMeasure::max_location() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& a : atoms_)
    if (a.mass > 0.0) m = std::max(m, a.location);
  return m;
}

double DiscreteMeasure::cdf(double x) const {
  double acc = 0.0;
  for (const auto& a : atoms_)
    if (a.location <= x) acc += a.mass;
  return std::min(acc, 1.0);
}

DiscreteMeasure DiscreteMeasure::compressed() const {
  std::vector<Atom> sorted(atoms_.begin(), atoms_.end());
  std::sort(sorted.begin(), sorted.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
  std::vector<Atom> out;
  out.reserve(sorted.size());
  for (const auto& a : sorted) {
    if (a.mass == 0.0) continue;
    if (!out.empty() && out.back().location == a.location) {
      out.back().mass += a.mass;
    } else {
      out.push_back(a);
    }
  }
  return DiscreteMeasure(std::move(out));
}

GridMeasure dilate(const GridMeasure& measure, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("dilation factor must be positive");
  std::vector<double> nodes(measure.nodes().begin(), measure.nodes().end());
  for (double& x : nodes) x *= alpha;
  std::vector<double> weights(measure.weights().begin(), measure.weights().end());
  return GridMeasure(std::move(nodes), std::move(weights), measure.cell_width() * alpha);
}

double kl_divergence(const GridMeasure& measure) {
  const double h = measure.cell_width();
  const double cell_var = h * h / 12.0;
  double acc = 0.0;
  const auto x = measure.nodes();
  const auto w = measure.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    // -(1/h) * integral over the cell of log phi = log sqrt(2 pi) + (x^2 + h^2/12) / 2
    acc += w[i] * (std::log(w[i] / h) + kLogSqrtTwoPi + 0.5 * (x[i] * x[i] + cell_var));
  }
  return acc;
}

DiscreteMeasure pushforward_gt(const GridMeasure& measure, const Potential& potential, double t, double K) {
  if (!(t >= 0.0)) throw ValidationError("pushforward scale t must be >= 0");
  if (!(K > 0.0)) throw ValidationError("truncation level K must be positive");
  if (t == 0.0) return DiscreteMeasure::dirac(0.0);
  const double c1 = model_constants(potential.p()).hessian_scale;
  const double scale = std::pow(t, 2.0 - potential.p());
  const auto x = measure.nodes();
  const auto w = measure.weights();
  std::vector<Atom> atoms(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double g = scale * potential.second(t * x[i]);
    atoms[i] = {c1 * std::min(g, K), w[i]};
  }
  return DiscreteMeasure(std::move(atoms));
}

double ks_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<double> xs;
  for (const auto& at : a.atoms()) xs.push_back(at.location);
  for (const auto& at : b.atoms()) xs.push_back(at.location);
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (double x : xs) d = std::max(d, std::fabs(a.cdf(x) - b.cdf(x)));
  return d;
}

}  // namespace landscape
