#include "landscape/kacrice.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "landscape/constants.hpp"
#include "landscape/error.hpp"
#include "landscape/rmt.hpp"

namespace landscape {

namespace {

constexpr int kBatches = 20;

struct Rule {
  std::vector<double> nodes;  // on [-1, 1]
  std::vector<double> weights;
};

template <unsigned Order>
Rule make_rule() {
  using G = boost::math::quadrature::gauss<double, Order>;
  Rule r;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  // Boost stores the nonnegative half of the symmetric rule.
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      r.nodes.push_back(0.0);
      r.weights.push_back(w[i]);
    } else {
      r.nodes.push_back(x[i]);
      r.weights.push_back(w[i]);
      r.nodes.push_back(-x[i]);
      r.weights.push_back(w[i]);
    }
  }
  return r;
}

const Rule& gauss_rule(int order) {
  static const Rule r8 = make_rule<8>();
  static const Rule r10 = make_rule<10>();
  static const Rule r16 = make_rule<16>();
  static const Rule r20 = make_rule<20>();
  static const Rule r30 = make_rule<30>();
  switch (order) {
    case 8: return r8;
    case 10: return r10;
    case 16: return r16;
    case 20: return r20;
    case 30: return r30;
    default: throw ValidationError("quadrature order must be one of 8, 10, 16, 20, 30");
  }
}

// Composite rule on [a, b] with `panels` equal panels.
void composite(const Rule& rule, double a, double b, int panels, std::vector<double>& x, std::vector<double>& w) {
  x.clear();
  w.clear();
  const double h = (b - a) / panels;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * h;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      x.push_back(lo + 0.5 * h * (rule.nodes[i] + 1.0));
      w.push_back(0.5 * h * rule.weights[i]);
    }
  }
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

double abs_det(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  if (n == 0) return 1.0;
  if (n == 1) return std::fabs(m(0, 0));
  if (n == 2) return std::fabs(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0));
  return std::fabs(m.partialPivLu().determinant());
}

double omega_value(const Eigen::VectorXd& sigma, const Potential& potential) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) acc += constraint_integrand(potential, sigma[i]);
  return acc / static_cast<double>(sigma.size());
}

double exponent_value(const Eigen::VectorXd& sigma, const Potential& potential) {
  const int N = static_cast<int>(sigma.size());
  const int p = potential.p();
  const double nn = normalized_norm(sigma);
  double sv = 0.0;
  double vv = 0.0;
  for (int i = 0; i < N; ++i) {
    const double d1 = potential.first(sigma[i]);
    sv += sigma[i] * d1;
    vv += d1 * d1;
  }
  const double fN = (1.0 - p) * sv * sv / (double(N) * N * std::pow(nn, 2.0 * p)) +
                    p * (vv / N) / std::pow(nn, 2.0 * p - 2.0);
  return model_constants(p).exponent_scale * N * fN;
}

// Smallest r >= r0 with g(r) >= target, g nondecreasing along the ray.
template <class F>
double ray_crossing(F g, double r0, double target) {
  double hi = std::max(r0, 1e-3);
  int guard = 0;
  while (g(hi) < target) {
    hi *= 2.0;
    if (++guard > 200) throw ConvergenceError("radial search did not terminate");
  }
  double lo = std::max(r0, hi * 0.5);
  if (g(lo) >= target) return lo;
  for (int it = 0; it < 100 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::vector<Eigen::Vector3d> draw_goe2(int samples, int ambient, std::uint64_t seed) {
  std::vector<Eigen::Vector3d> out(samples);
  for (int s = 0; s < samples; ++s) {
    const auto g = sample_goe(2, ambient, derive_seed(seed, static_cast<std::uint64_t>(s))).matrix;
    out[s] = Eigen::Vector3d(g(0, 0), g(1, 1), g(0, 1));
  }
  return out;
}

}  // namespace

double normalized_norm(const Eigen::VectorXd& x) { return x.norm() / std::sqrt(static_cast<double>(x.size())); }

KacRiceIntegrand kac_rice_integrand(const Eigen::VectorXd& sigma, const Potential& potential) {
  const int N = static_cast<int>(sigma.size());
  if (N < 1) throw ValidationError("sigma must be nonempty");
  const double nn = normalized_norm(sigma);
  if (!(nn > 0.0)) throw ValidationError("Kac-Rice integrand requires sigma != 0");
  const int p = potential.p();
  const auto c = model_constants(p);
  KacRiceIntegrand out;
  out.sigma = sigma;
  out.v.resize(N);
  double sv = 0.0;
  double vv = 0.0;
  double vsum = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto e = potential.eval(sigma[i]);
    out.v[i] = c.hessian_scale * sigma[i] * e.second - c.gradient_scale * e.first;
    sv += sigma[i] * e.first;
    vv += e.first * e.first;
    vsum += e.value;
  }
  out.inner = sigma.dot(out.v);
  out.f_N = (1.0 - p) * sv * sv / (double(N) * N * std::pow(nn, 2.0 * p)) + p * (vv / N) / std::pow(nn, 2.0 * p - 2.0);
  const double front = std::pow((p - 1.0) / (2.0 * std::numbers::pi), 0.5 * N) / std::sqrt(double(p));
  out.prefactor = front * std::fabs(out.inner) / (N * std::pow(nn, double(N + p))) *
                  std::exp(-c.exponent_scale * N * out.f_N);
  out.omega_membership = (sv / p - vsum) / N;
  return out;
}

Eigen::MatrixXd orthonormal_completion(const Eigen::VectorXd& sigma, Completion method) {
  const auto N = sigma.size();
  const double norm = sigma.norm();
  if (!(norm > 0.0)) throw ValidationError("completion requires sigma != 0");
  const Eigen::VectorXd u = sigma / norm;
  if (method == Completion::Householder) {
    Eigen::VectorXd w = u;
    const double s = u[0] >= 0.0 ? 1.0 : -1.0;
    w[0] += s;
    const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(N, N) - 2.0 * w * w.transpose() / w.squaredNorm();
    return h.rightCols(N - 1);
  }
  std::vector<Eigen::Index> order(N);
  for (Eigen::Index i = 0; i < N; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::fabs(u[a]) < std::fabs(u[b]);
  });
  std::vector<Eigen::VectorXd> frame{u};
  for (Eigen::Index k : order) {
    if (static_cast<Eigen::Index>(frame.size()) == N) break;
    Eigen::VectorXd e = Eigen::VectorXd::Unit(N, k);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& f : frame) e -= f.dot(e) * f;
    const double len = e.norm();
    if (len > 1e-6) frame.push_back(e / len);
  }
  Eigen::MatrixXd basis(N, N - 1);
  for (Eigen::Index j = 1; j < N; ++j) basis.col(j - 1) = frame[j];
  return basis;
}

HessianModel build_hessian_model(const Eigen::VectorXd& sigma, const Potential& potential, double K,
                                 Completion method) {
  const int N = static_cast<int>(sigma.size());
  const auto integrand = kac_rice_integrand(sigma, potential);
  if (integrand.inner == 0.0) throw ValidationError("<sigma, v(sigma)> vanishes");
  const int p = potential.p();
  const auto c = model_constants(p);
  const double scale = std::pow(normalized_norm(sigma), p - 2.0);
  Eigen::MatrixXd inner_matrix = -integrand.v * integrand.v.transpose() / (integrand.inner * scale);
  for (int i = 0; i < N; ++i) {
    inner_matrix(i, i) += c.hessian_scale * std::min(potential.second(sigma[i]) / scale, K);
  }
  HessianModel model;
  model.N = N;
  model.sigma = sigma;
  model.basis = orthonormal_completion(sigma, method);
  model.mean_part = model.basis.transpose() * inner_matrix * model.basis;
  model.mean_part = 0.5 * (model.mean_part + model.mean_part.transpose()).eval();
  model.K = K;
  return model;
}

Eigen::MatrixXd projector(const Eigen::VectorXd& sigma) {
  const auto N = sigma.size();
  const double s2 = sigma.squaredNorm();
  if (!(s2 > 0.0)) return Eigen::MatrixXd::Identity(N, N);
  return Eigen::MatrixXd::Identity(N, N) - sigma * sigma.transpose() / s2;
}

Eigen::MatrixXd conditional_mean_matrix(const Eigen::VectorXd& sigma, const Potential& potential) {
  const auto N = sigma.size();
  const double s2 = sigma.squaredNorm();
  if (!(s2 > 0.0)) return Eigen::MatrixXd::Zero(N, N);
  const int p = potential.p();
  const auto c = model_constants(p);
  Eigen::VectorXd d1(N);
  Eigen::VectorXd d2(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto e = potential.eval(sigma[i]);
    d1[i] = e.first;
    d2[i] = e.second;
  }
  Eigen::MatrixXd a = c.hessian_scale * d2.asDiagonal().toDenseMatrix();
  a += c.gradient_scale * (sigma.dot(d1) / (s2 * s2) * sigma * sigma.transpose() -
                           (sigma * d1.transpose() + d1 * sigma.transpose()) / s2);
  return std::pow(normalized_norm(sigma), 2.0 - p) * a;
}

double folded_normal_mean(double m, double s) {
  if (!(s > 0.0)) return std::fabs(m);
  const double z = m / s;
  const double tail = 0.5 * std::erfc(z / std::numbers::sqrt2);  // Phi(-z)
  const double dens = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return m * (1.0 - 2.0 * tail) + 2.0 * s * dens;
}

AbsDetEstimate expected_abs_det(const HessianModel& model, int samples, std::uint64_t seed) {
  if (samples < 100) throw ValidationError("expected_abs_det needs at least 100 samples");
  const int n = model.N - 1;
  std::vector<double> values(samples);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < samples; ++s) {
    if (n == 0) {
      values[s] = 1.0;
      continue;
    }
    const auto g = sample_goe(n, model.N, derive_seed(seed, static_cast<std::uint64_t>(s))).matrix;
    values[s] = abs_det(model.mean_part + g);
  }
  const int per = samples / kBatches;
  std::vector<double> batch(kBatches, 0.0);
  for (int b = 0; b < kBatches; ++b) {
    for (int s = b * per; s < (b + 1) * per; ++s) batch[b] += values[s];
    batch[b] /= per;
  }
  AbsDetEstimate out;
  out.mean = mean_of(values);
  out.stderr_ = std::sqrt(sample_variance(batch) / kBatches);
  out.samples = samples;
  out.closed_form = std::numeric_limits<double>::quiet_NaN();
  out.closed_form_agrees = true;
  if (model.N == 2) {
    out.closed_form = folded_normal_mean(model.mean_part(0, 0), std::sqrt(2.0 / model.N));
    out.closed_form_agrees = std::fabs(out.mean - out.closed_form) <= 3.0 * out.stderr_;
  }
  return out;
}

KacRiceEstimate expected_crt(int N, const Potential& potential, double u, const QuadSpec& spec, int mc_samples,
                             std::uint64_t seed) {
  if (N != 2 && N != 3) throw ValidationError("expected_crt supports N = 2 or N = 3");
  if (!(u >= 0.0)) throw ValidationError("u must be >= 0");
  if (N == 3 && mc_samples < 2) throw ValidationError("N = 3 needs Monte Carlo samples");
  const Rule& rule = gauss_rule(spec.order);
  const std::vector<Eigen::Vector3d> draws = N == 3 ? draw_goe2(mc_samples, N, seed) : std::vector<Eigen::Vector3d>{};
  const int S = N == 3 ? mc_samples : 1;

  auto radial_window = [&](const Eigen::VectorXd& dir) {
    const double r_lo =
        u > 0.0 ? ray_crossing([&](double r) { return omega_value(r * dir, potential); }, 0.0, u) : 0.0;
    const double r_hi = ray_crossing([&](double r) { return exponent_value(r * dir, potential); },
                                     std::max(r_lo, 1e-6), spec.exponent_cutoff);
    return std::make_pair(r_lo, std::max(r_hi, r_lo));
  };

  // Integral along one ray, accumulated per Monte Carlo draw.
  auto ray_integral = [&](const Eigen::VectorXd& dir, int panels, double weight, std::vector<double>& acc,
                          long long& nodes) {
    const auto [r_lo, r_hi] = radial_window(dir);
    if (!(r_hi > r_lo)) return;
    std::vector<double> rs;
    std::vector<double> ws;
    composite(rule, r_lo, r_hi, panels, rs, ws);
    for (std::size_t k = 0; k < rs.size(); ++k) {
      const Eigen::VectorXd sigma = rs[k] * dir;
      const auto integrand = kac_rice_integrand(sigma, potential);
      if (integrand.prefactor == 0.0) continue;
      const auto model = build_hessian_model(sigma, potential);
      const double base = weight * ws[k] * std::pow(rs[k], N - 1) * integrand.prefactor;
      ++nodes;
      if (N == 2) {
        acc[0] += base * folded_normal_mean(model.mean_part(0, 0), std::sqrt(2.0 / N));
      } else {
        const double a = model.mean_part(0, 0);
        const double c = model.mean_part(1, 1);
        const double b = model.mean_part(0, 1);
        for (int s = 0; s < S; ++s) {
          const auto& g = draws[s];
          acc[s] += base * std::fabs((a + g[0]) * (c + g[1]) - (b + g[2]) * (b + g[2]));
        }
      }
    }
  };

  auto integrate = [&](int level, long long& nodes) {
    const int panels_r = spec.radial_panels << level;
    const int panels_a = spec.angular_panels << level;
    std::vector<double> theta;
    std::vector<double> wtheta;
    composite(rule, 0.0, 0.5 * std::numbers::pi, panels_a, theta, wtheta);
    std::vector<double> acc(S, 0.0);
    nodes = 0;
    if (N == 2) {
      for (std::size_t i = 0; i < theta.size(); ++i) {
        Eigen::VectorXd dir(2);
        dir << std::cos(theta[i]), std::sin(theta[i]);
        ray_integral(dir, panels_r, 4.0 * wtheta[i], acc, nodes);
      }
    } else {
      const std::size_t m = theta.size();
      std::vector<std::vector<double>> partial(m * m, std::vector<double>(S, 0.0));
      std::vector<long long> partial_nodes(m * m, 0);
      const long long total = static_cast<long long>(m * m);
#pragma omp parallel for schedule(dynamic, 4)
      for (long long idx = 0; idx < total; ++idx) {
        const std::size_t i = static_cast<std::size_t>(idx) / m;
        const std::size_t j = static_cast<std::size_t>(idx) % m;
        const double th = theta[i];
        const double ph = theta[j];
        Eigen::VectorXd dir(3);
        dir << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
        ray_integral(dir, panels_r, 8.0 * wtheta[i] * wtheta[j] * std::sin(th), partial[idx], partial_nodes[idx]);
      }
      for (std::size_t idx = 0; idx < partial.size(); ++idx) {
        for (int s = 0; s < S; ++s) acc[s] += partial[idx][s];
        nodes += partial_nodes[idx];
      }
    }
    return acc;
  };

  long long nodes = 0;
  auto coarse = integrate(0, nodes);
  double gap = std::numeric_limits<double>::infinity();
  for (int level = 1; level <= spec.max_refinements; ++level) {
    long long fine_nodes = 0;
    auto fine = integrate(level, fine_nodes);
    const double vc = mean_of(coarse);
    const double vf = mean_of(fine);
    gap = std::fabs(vf - vc) / std::max(std::fabs(vf), 1e-300);
    coarse = std::move(fine);
    nodes = fine_nodes;
    if (gap <= spec.relative_gap || vf == 0.0) {
      if (vf == 0.0) gap = 0.0;
      KacRiceEstimate out;
      out.N = N;
      out.u = u;
      out.value = vf;
      out.stderr_ = S > 1 ? std::sqrt(sample_variance(coarse) / S) : 0.0;
      out.richardson_gap = gap;
      out.nodes = nodes;
      out.mc_samples = N == 3 ? mc_samples : 0;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "Kac-Rice quadrature did not converge: relative gap " << gap << " after " << spec.max_refinements
      << " refinements";
  throw ConvergenceError(msg.str());
}

CountResult count_critical_points_1d(double g, const Potential& potential) {
  if (potential.p() != 2) throw ValidationError("direct counting requires p = 2");
  CountResult out{1, true, 0, {Eigen::VectorXd::Zero(1)}};
  if (g <= 0.0) return out;
  // V'(x)/x increases from 0, so 2 g x = V'(x) has one positive root.
  auto ratio = [&](double x) { return potential.first(x) / x; };
  const double x = ray_crossing(ratio, 1e-12, 2.0 * g);
  out.count = 3;
  out.roots.push_back(Eigen::VectorXd::Constant(1, x));
  out.roots.push_back(Eigen::VectorXd::Constant(1, -x));
  return out;
}

double critical_point_radius(const Eigen::MatrixXd& b, const Potential& potential) {
  const double N = static_cast<double>(b.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
  const double op = es.eigenvalues().cwiseAbs().maxCoeff();
  if (op == 0.0) return 0.0;
  const double c = potential.c_bound();
  double r = std::numeric_limits<double>::infinity();
  for (double q : {potential.q1(), potential.q2()}) {
    r = std::min(r, std::pow(c * std::pow(N, 0.5 * q - 1.0) * op, 1.0 / (q - 2.0)));
  }
  return r;
}

CountResult count_critical_points_2d(const Eigen::Matrix2d& g, const Potential& potential, const CountConfig& config) {
  if (potential.p() != 2) throw ValidationError("direct counting requires p = 2");
  const Eigen::Matrix2d b = (g + g.transpose()) / std::numbers::sqrt2;
  const double radius = 1.05 * critical_point_radius(b, potential);
  auto residual = [&](const Eigen::Vector2d& s) {
    return Eigen::Vector2d(b * s - Eigen::Vector2d(potential.first(s[0]), potential.first(s[1])));
  };
  auto jacobian = [&](const Eigen::Vector2d& s) {
    Eigen::Matrix2d j = b;
    j(0, 0) -= potential.second(s[0]);
    j(1, 1) -= potential.second(s[1]);
    return j;
  };
  std::vector<Eigen::Vector2d> starts{Eigen::Vector2d::Zero()};
  for (int i = 0; i < config.grid; ++i) {
    for (int j = 0; j < config.grid; ++j) {
      const double x = -radius + 2.0 * radius * (i + 0.5) / config.grid;
      const double y = -radius + 2.0 * radius * (j + 0.5) / config.grid;
      starts.emplace_back(x, y);
    }
  }
  CountResult out{0, true, 0, {}};
  for (const auto& start : starts) {
    Eigen::Vector2d s = start;
    Eigen::Vector2d f = residual(s);
    double fn = f.norm();
    bool converged = fn <= config.residual_tol;
    for (int it = 0; it < config.max_newton && !converged; ++it) {
      const Eigen::Matrix2d j = jacobian(s);
      const double det = j.determinant();
      if (det == 0.0) break;
      const Eigen::Vector2d step = -j.inverse() * f;
      double scale = 1.0;
      bool moved = false;
      for (int k = 0; k < 40; ++k, scale *= 0.5) {
        const Eigen::Vector2d trial = s + scale * step;
        const Eigen::Vector2d ft = residual(trial);
        if (ft.norm() < fn) {
          s = trial;
          f = ft;
          fn = ft.norm();
          moved = true;
          break;
        }
      }
      if (!moved) break;
      converged = fn <= config.residual_tol;
    }
    if (!converged) continue;
    // Two polishing steps, kept only if they do not increase the residual.
    for (int k = 0; k < 2; ++k) {
      const Eigen::Matrix2d j = jacobian(s);
      if (j.determinant() == 0.0) break;
      const Eigen::Vector2d trial = s - j.inverse() * f;
      const Eigen::Vector2d ft = residual(trial);
      if (ft.norm() <= fn) {
        s = trial;
        f = ft;
        fn = ft.norm();
      }
    }
    bool duplicate = false;
    for (const auto& r : out.roots) {
      if ((r - s).norm() <= config.dedup_tol) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    const Eigen::Matrix2d j = jacobian(s);
    if (std::fabs(j.determinant()) < 1e-10 * std::max(1.0, j.squaredNorm())) {
      ++out.degenerate;
      out.reliable = false;
    }
    out.roots.push_back(s);
  }
  out.count = static_cast<int>(out.roots.size());
  return out;
}

CountEnsemble count_ensemble(int N, const Potential& potential, int trials, std::uint64_t seed,
                             const CountConfig& config) {
  if (N != 1 && N != 2) throw ValidationError("direct counting supports N = 1 or N = 2");
  if (trials < 2) throw ValidationError("need at least 2 trials");
  std::vector<int> counts(trials);
  std::vector<int> unreliable(trials, 0);
#pragma omp parallel for schedule(dynamic, 8)
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::normal_distribution<double> normal(0.0, 1.0);
    if (N == 1) {
      counts[t] = count_critical_points_1d(normal(rng), potential).count;
    } else {
      Eigen::Matrix2d g;
      g(0, 0) = normal(rng);
      g(0, 1) = normal(rng);
      g(1, 0) = normal(rng);
      g(1, 1) = normal(rng);
      const auto r = count_critical_points_2d(g, potential, config);
      counts[t] = r.count;
      unreliable[t] = r.reliable ? 0 : 1;
    }
  }
  std::vector<double> as_double(counts.begin(), counts.end());
  CountEnsemble out;
  out.mean = mean_of(as_double);
  out.stderr_ = std::sqrt(sample_variance(as_double) / trials);
  out.trials = trials;
  out.unreliable = 0;
  for (int u : unreliable) out.unreliable += u;
  out.counts = std::move(counts);
  return out;
}

double CovarianceEntry::z() const {
  const double diff = empirical - predicted;
  if (stderr_ > 0.0) return diff / stderr_;
  return std::fabs(diff) <= 1e-12 * std::max(1.0, std::fabs(predicted)) ? 0.0
                                                                         : std::numeric_limits<double>::infinity();
}

CovarianceReport covariance_test(int N, const Eigen::VectorXd& sigma, const Potential& potential, int samples,
                                 std::uint64_t seed) {
  if (N < 1 || N > 6) throw ValidationError("covariance_test supports 1 <= N <= 6");
  if (sigma.size() != N) throw ValidationError("sigma must have length N");
  if (samples < 10000) throw ValidationError("covariance_test needs at least 1e4 samples");
  if (!(sigma.squaredNorm() > 0.0)) throw ValidationError("covariance_test requires sigma != 0");
  const int p = potential.p();
  long long tensor_size = 1;
  for (int k = 0; k < p; ++k) tensor_size *= N;
  if (tensor_size > 200000) throw ValidationError("coupling tensor too large");

  // Features: H, grad (N), Hessian upper triangle (N(N+1)/2); each is linear in
  // the coupling tensor.
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) pairs.emplace_back(i, j);
  const int dim = 1 + N + static_cast<int>(pairs.size());
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(dim, tensor_size);
  const double scale = std::pow(double(N), -0.5 * (p - 1));
  std::vector<int> index(p, 0);
  Eigen::MatrixXd hess_coef(N, N);
  for (long long t = 0; t < tensor_size; ++t) {
    long long rem = t;
    for (int m = 0; m < p; ++m) {
      index[m] = static_cast<int>(rem % N);
      rem /= N;
    }
    double prod = 1.0;
    for (int m = 0; m < p; ++m) prod *= sigma[index[m]];
    map(0, t) = scale * prod;
    for (int m = 0; m < p; ++m) {
      double others = 1.0;
      for (int k = 0; k < p; ++k)
        if (k != m) others *= sigma[index[k]];
      map(1 + index[m], t) += scale * others;
    }
    hess_coef.setZero();
    for (int m = 0; m < p; ++m) {
      for (int n = 0; n < p; ++n) {
        if (n == m) continue;
        double others = 1.0;
        for (int k = 0; k < p; ++k)
          if (k != m && k != n) others *= sigma[index[k]];
        hess_coef(index[m], index[n]) += scale * others;
      }
    }
    for (std::size_t a = 0; a < pairs.size(); ++a) map(1 + N + a, t) = hess_coef(pairs[a].first, pairs[a].second);
  }

  Eigen::VectorXd mean(dim);
  mean[0] = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto e = potential.eval(sigma[i]);
    mean[0] -= e.value;
    mean[1 + i] = -e.first;
  }
  for (std::size_t a = 0; a < pairs.size(); ++a) {
    const auto [i, j] = pairs[a];
    mean[1 + N + a] = i == j ? -potential.second(sigma[i]) : 0.0;
  }

  Eigen::MatrixXd y(samples, dim);
  {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd g(tensor_size);
    for (int s = 0; s < samples; ++s) {
      for (long long t = 0; t < tensor_size; ++t) g[t] = normal(rng);
      y.row(s) = (map * g + mean).transpose();
    }
  }

  // Closed-form moments.
  const double s2 = sigma.squaredNorm();
  const double nn = normalized_norm(sigma);
  const double base = std::pow(double(N), 1.0 - p) * p * (p - 1);
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  auto cov_h_h = [&]() { return std::pow(double(N), 1.0 - p) * std::pow(s2, p); };
  auto cov_g_g = [&](int i, int j) {
    return p * std::pow(nn, 2.0 * (p - 2)) * ((p - 1) * sigma[i] * sigma[j] + s2 * delta(i, j)) / N;
  };
  auto cov_h_g = [&](int i) { return std::pow(double(N), 1.0 - p) * p * std::pow(s2, p - 1.0) * sigma[i]; };
  auto cov_h_hess = [&](int j, int k) { return base * std::pow(s2, p - 2.0) * sigma[j] * sigma[k]; };
  auto cov_g_hess = [&](int i, int j, int k) {
    return base * std::pow(s2, p - 3.0) *
           ((p - 2) * sigma[i] * sigma[j] * sigma[k] + s2 * (delta(i, k) * sigma[j] + delta(i, j) * sigma[k]));
  };
  auto cov_hess_hess = [&](int i, int j, int k, int l) {
    return base * std::pow(s2, p - 4.0) *
           ((p - 2) * (p - 3) * sigma[i] * sigma[j] * sigma[k] * sigma[l] +
            s2 * (p - 2) *
                (delta(i, k) * sigma[j] * sigma[l] + delta(i, l) * sigma[j] * sigma[k] +
                 delta(j, k) * sigma[i] * sigma[l] + delta(j, l) * sigma[i] * sigma[k]) +
            s2 * s2 * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k)));
  };
  auto feature_name = [&](int a) {
    if (a == 0) return std::string("H");
    if (a <= N) return "dH" + std::to_string(a - 1);
    const auto [i, j] = pairs[a - 1 - N];
    return "d2H" + std::to_string(i) + std::to_string(j);
  };
  auto predicted_cov = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    if (a == 0 && b == 0) return cov_h_h();
    if (a == 0 && b <= N) return cov_h_g(b - 1);
    if (a == 0) return cov_h_hess(pairs[b - 1 - N].first, pairs[b - 1 - N].second);
    if (a <= N && b <= N) return cov_g_g(a - 1, b - 1);
    if (a <= N) return cov_g_hess(a - 1, pairs[b - 1 - N].first, pairs[b - 1 - N].second);
    const auto [i, j] = pairs[a - 1 - N];
    const auto [k, l] = pairs[b - 1 - N];
    return cov_hess_hess(i, j, k, l);
  };

  CovarianceReport report;
  report.samples = samples;
  const Eigen::VectorXd emp_mean = y.colwise().mean().transpose();
  const Eigen::MatrixXd centered = y.rowwise() - emp_mean.transpose();
  const double S = samples;
  for (int a = 0; a < dim; ++a) {
    const double sd = std::sqrt(centered.col(a).squaredNorm() / (S - 1));
    report.entries.push_back({"mean(" + feature_name(a) + ")", emp_mean[a], mean[a], sd / std::sqrt(S)});
  }
  for (int a = 0; a < dim; ++a) {
    for (int b = a; b < dim; ++b) {
      const Eigen::ArrayXd prod = centered.col(a).array() * centered.col(b).array();
      const double c = prod.sum() / (S - 1);
      const double var = (prod - prod.mean()).square().sum() / (S - 1);
      report.entries.push_back(
          {"cov(" + feature_name(a) + "," + feature_name(b) + ")", c, predicted_cov(a, b), std::sqrt(var / S)});
    }
  }

  // Regression on the gradient: conditional mean and covariance.
  const Eigen::MatrixXd gx = centered.middleCols(1, N);
  const Eigen::MatrixXd sxx = gx.transpose() * gx / (S - 1);
  const Eigen::LDLT<Eigen::MatrixXd> solver(sxx);
  const Eigen::MatrixXd others_idx = Eigen::MatrixXd::Zero(0, 0);
  std::vector<int> targets{0};
  for (int a = 1 + N; a < dim; ++a) targets.push_back(a);
  Eigen::MatrixXd residuals(samples, static_cast<Eigen::Index>(targets.size()));
  Eigen::VectorXd intercept(static_cast<Eigen::Index>(targets.size()));
  const Eigen::VectorXd x0 = -emp_mean.segment(1, N);  // grad = 0 in centered coordinates
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const Eigen::VectorXd sxy = gx.transpose() * centered.col(targets[k]) / (S - 1);
    const Eigen::VectorXd beta = solver.solve(sxy);
    residuals.col(static_cast<Eigen::Index>(k)) = centered.col(targets[k]) - gx * beta;
    intercept[static_cast<Eigen::Index>(k)] = emp_mean[targets[k]] + x0.dot(beta);
  }
  const double var_h = centered.col(0).squaredNorm() / (S - 1);
  const double res_h = residuals.col(0).squaredNorm() / (S - 1);
  report.conditional_residual_ratio = res_h / var_h;

  const Eigen::MatrixXd a_mat = conditional_mean_matrix(sigma, potential);
  const double hess_scale = std::sqrt(double(p) * (p - 1)) * std::pow(nn, p - 2.0);
  const Eigen::MatrixXd proj = projector(sigma);
  const double leverage = 1.0 / S + x0.dot(solver.solve(x0)) / (S - 1);
  for (std::size_t k = 1; k < targets.size(); ++k) {
    const auto [i, j] = pairs[k - 1];
    const double rvar = residuals.col(static_cast<Eigen::Index>(k)).squaredNorm() / (S - 1 - N);
    report.entries.push_back({"cond_mean(" + feature_name(targets[k]) + ")", intercept[static_cast<Eigen::Index>(k)],
                              -hess_scale * a_mat(i, j), std::sqrt(rvar * leverage)});
  }
  const double cond_scale = p * (p - 1) * std::pow(nn, 2.0 * (p - 2)) / N;
  for (std::size_t k = 1; k < targets.size(); ++k) {
    for (std::size_t m = k; m < targets.size(); ++m) {
      const auto [i, j] = pairs[k - 1];
      const auto [kk, l] = pairs[m - 1];
      const Eigen::ArrayXd prod = residuals.col(static_cast<Eigen::Index>(k)).array() *
                                  residuals.col(static_cast<Eigen::Index>(m)).array();
      const double c = prod.sum() / (S - 1 - N);
      const double var = (prod - prod.mean()).square().sum() / (S - 1);
      const double predicted = cond_scale * (proj(i, kk) * proj(j, l) + proj(i, l) * proj(j, kk));
      report.entries.push_back({"cond_cov(" + feature_name(targets[k]) + "," + feature_name(targets[m]) + ")", c,
                                predicted, std::sqrt(var / S)});
    }
  }
  report.max_abs_z = 0.0;
  for (const auto& e : report.entries) report.max_abs_z = std::max(report.max_abs_z, std::fabs(e.z()));
  (void)others_idx;
  return report;
}

double ReductionCheck::z() const {
  const double se = std::hypot(full_stderr, reduced_stderr);
  return se > 0.0 ? (full - reduced) / se : 0.0;
}

ReductionCheck determinant_reduction_check(const Eigen::VectorXd& sigma, const Potential& potential, int samples,
                                           std::uint64_t seed) {
  const int N = static_cast<int>(sigma.size());
  if (N < 2) throw ValidationError("reduction check needs N >= 2");
  if (samples < 100) throw ValidationError("reduction check needs at least 100 samples");
  const Eigen::MatrixXd a = conditional_mean_matrix(sigma, potential);
  const Eigen::MatrixXd proj = projector(sigma);
  std::vector<double> values(samples);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < samples; ++s) {
    const auto g = sample_goe(N, N, derive_seed(seed, static_cast<std::uint64_t>(s))).matrix;
    values[s] = abs_det(-a + proj * g * proj);
  }
  const auto integrand = kac_rice_integrand(sigma, potential);
  const double factor =
      std::fabs(integrand.inner) / (N * std::pow(normalized_norm(sigma), double(potential.p())));
  const auto reduced = expected_abs_det(build_hessian_model(sigma, potential), samples, derive_seed(seed, 1ULL << 40));
  ReductionCheck out;
  out.full = mean_of(values);
  out.full_stderr = std::sqrt(sample_variance(values) / samples);
  out.reduced = factor * reduced.mean;
  out.reduced_stderr = factor * reduced.stderr_;
  return out;
}

double omega_inclusion_constant(const Potential& potential) {
  return (potential.q() / potential.p() - 1.0) / potential.c_bound();
}

}  // namespace landscape
