#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "landscape/functional.hpp"
#include "landscape/potential.hpp"

namespace landscape {

/// |||x|||_2 = ||x||_2 / sqrt(N).
double normalized_norm(const Eigen::VectorXd& x);

/// The pieces of the Kac-Rice integrand at a single sigma.
struct KacRiceIntegrand {
  Eigen::VectorXd sigma;
  double f_N;
  Eigen::VectorXd v;  // c1 sigma V''(sigma) - c2 V'(sigma)
  double inner;  // <sigma, v>
  double prefactor;  // everything except E|det M_{N-1}|
  double omega_membership;  // (p^{-1}<sigma, V'> - <1, V>) / N
};

KacRiceIntegrand kac_rice_integrand(const Eigen::VectorXd& sigma, const Potential& potential);

enum class Completion { Householder, GramSchmidt };

struct HessianModel {
  int N;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd mean_part;  // (N-1) x (N-1)
  Eigen::MatrixXd basis;  // N x (N-1), orthonormal columns orthogonal to sigma
  double K;
};

/// N x (N-1) orthonormal completion of sigma / ||sigma||.
Eigen::MatrixXd orthonormal_completion(const Eigen::VectorXd& sigma, Completion method = Completion::Householder);

HessianModel build_hessian_model(const Eigen::VectorXd& sigma, const Potential& potential,
                                 double K = kNoTruncation, Completion method = Completion::Householder);

/// P(sigma) = I - sigma sigma^T / ||sigma||^2.
Eigen::MatrixXd projector(const Eigen::VectorXd& sigma);
/// A_N(sigma), the conditional mean of the Hessian up to scale.
Eigen::MatrixXd conditional_mean_matrix(const Eigen::VectorXd& sigma, const Potential& potential);

/// E|m + xi| for xi ~ N(0, s^2).
double folded_normal_mean(double m, double s);

struct AbsDetEstimate {
  double mean;
  double stderr_;
  double closed_form;  // NaN unless N == 2
  bool closed_form_agrees;  // within 3 standard errors (true when N != 2)
  int samples;
};

/// Monte Carlo E|det(mean_part + G_{N-1})| with G_{N-1} drawn at ambient
/// dimension N; standard error from 20 batch means.
AbsDetEstimate expected_abs_det(const HessianModel& model, int samples, std::uint64_t seed);

struct QuadSpec {
  int order = 20;  // Gauss-Legendre points per panel
  int radial_panels = 4;
  int angular_panels = 4;
  double relative_gap = 0.01;  // accept when successive panel doublings agree
  int max_refinements = 4;
  double exponent_cutoff = 60.0;  // radial window ends where c3 N f_N exceeds this
};

struct KacRiceEstimate {
  int N;
  double u;
  double value;
  double stderr_;
  double richardson_gap;
  long long nodes;
  int mc_samples;
};

/// E Crt_N([Nu, inf)) by quadrature of the Kac-Rice integral in polar (N = 2)
/// or spherical (N = 3) coordinates. N = 2 uses the closed-form E|det|; N = 3
/// uses `mc_samples` common GOE draws at every node. The isolated critical
/// point at sigma = 0 is not part of the integral.
KacRiceEstimate expected_crt(int N, const Potential& potential, double u, const QuadSpec& spec = {},
                             int mc_samples = 2000, std::uint64_t seed = 1);

struct CountConfig {
  int grid = 40;
  double dedup_tol = 1e-6;
  double residual_tol = 1e-9;
  int max_newton = 100;
};

struct CountResult {
  int count;
  bool reliable;
  int degenerate;
  std::vector<Eigen::VectorXd> roots;
};

/// Critical points of H(s) = g s^2 - V(s) (N = 1, p = 2).
CountResult count_critical_points_1d(double g, const Potential& potential);

/// Critical points of H(s) = s^T g s / sqrt(2) - V(s_1) - V(s_2), found by
/// multi-start Newton on a grid over the a-priori box.
CountResult count_critical_points_2d(const Eigen::Matrix2d& g, const Potential& potential,
                                     const CountConfig& config = {});

/// Box half-width containing every critical point for the symmetric coupling
/// matrix b = (g + g^T)/sqrt(N).
double critical_point_radius(const Eigen::MatrixXd& b, const Potential& potential);

struct CountEnsemble {
  double mean;
  double stderr_;
  int trials;
  int unreliable;
  std::vector<int> counts;
};

CountEnsemble count_ensemble(int N, const Potential& potential, int trials, std::uint64_t seed,
                             const CountConfig& config = {});

struct CovarianceEntry {
  std::string name;
  double empirical;
  double predicted;
  double stderr_;
  double z() const;
};

struct CovarianceReport {
  std::vector<CovarianceEntry> entries;
  double conditional_residual_ratio;  // Var(H | grad H) / Var(H)
  double max_abs_z;
  int samples;
};

/// Samples the coupling tensor and compares the empirical law of
/// (H, grad H, Hess H) at sigma with the closed-form means and covariances,
/// including the Hessian covariance conditional on the gradient.
CovarianceReport covariance_test(int N, const Eigen::VectorXd& sigma, const Potential& potential, int samples,
                                 std::uint64_t seed);

struct ReductionCheck {
  double full;  // E|det(-A_N + P G_N P)|
  double full_stderr;
  double reduced;  // <sigma, v> / (N |||sigma|||^p) E|det M_{N-1}|
  double reduced_stderr;
  double z() const;
};

ReductionCheck determinant_reduction_check(const Eigen::VectorXd& sigma, const Potential& potential, int samples,
                                           std::uint64_t seed);

/// c4 = (q/p - 1) / c_bound, the constant in the inclusion
/// {|||sigma|||_2 >= (u / c4)^{1/q1}} subset of Omega(u).
double omega_inclusion_constant(const Potential& potential);

}  // namespace landscape
