#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "landscape/constants.hpp"
#include "landscape/error.hpp"
#include "landscape/kacrice.hpp"
#include "landscape/rmt.hpp"
#include "oracles.hpp"

using namespace landscape;

namespace {

const Potential& quartic() {
  static const Potential v({{1.0, 4.0}}, 2, 4.0, 4.0, 4.0, 6.0);
  return v;
}

Eigen::VectorXd random_sigma(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s[i] = normal(rng);
  return s;
}

}  // namespace

TEST_CASE("integrand pieces by hand for V = x^4 at (sqrt2, sqrt2)") {
  Eigen::VectorXd s(2);
  s << std::sqrt(2.0), std::sqrt(2.0);
  const auto k = kac_rice_integrand(s, quartic());
  CHECK(normalized_norm(s) == doctest::Approx(std::sqrt(2.0)));
  CHECK(k.v[0] == doctest::Approx(16.0));
  CHECK(k.v[1] == doctest::Approx(16.0));
  CHECK(k.inner == doctest::Approx(32.0 * std::sqrt(2.0)));
  // omega = (x V'/2 - V) averaged = x^4 = 4
  CHECK(k.omega_membership == doctest::Approx(4.0));
  // B = (1, -1)/sqrt2: B^T c1 diag(24) B = 24/sqrt2; the rank-one part vanishes.
  const auto model = build_hessian_model(s, quartic());
  REQUIRE(model.mean_part.rows() == 1);
  CHECK(model.mean_part(0, 0) == doctest::Approx(12.0 * std::sqrt(2.0)));
  // Truncation caps the diagonal.
  const auto capped = build_hessian_model(s, quartic(), 10.0);
  CHECK(capped.mean_part(0, 0) == doctest::Approx(10.0 / std::sqrt(2.0)));
}

TEST_CASE("f_N sandwich and positivity of <sigma, v>") {
  std::mt19937_64 rng(4);
  const auto& v = example_potential();
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 4;
    const auto s = random_sigma(rng, n, 0.2 + 0.1 * (trial % 7));
    const auto k = kac_rice_integrand(s, v);
    double vv = 0.0;
    for (int i = 0; i < n; ++i) vv += v.first(s[i]) * v.first(s[i]);
    const double lower = (vv / n) / std::pow(normalized_norm(s), 2.0 * v.p() - 2.0);
    CHECK(k.inner > 0.0);
    CHECK(k.f_N >= lower * (1 - 1e-12));
    CHECK(k.f_N <= v.p() * lower * (1 + 1e-12));
    CHECK(k.prefactor >= 0.0);
  }
}

TEST_CASE("orthonormal completion") {
  std::mt19937_64 rng(8);
  for (int n : {2, 3, 5, 8}) {
    const auto s = random_sigma(rng, n, 1.0);
    for (auto method : {Completion::Householder, Completion::GramSchmidt}) {
      const auto b = orthonormal_completion(s, method);
      CHECK(b.cols() == n - 1);
      CHECK((b.transpose() * b - Eigen::MatrixXd::Identity(n - 1, n - 1)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((b.transpose() * s).cwiseAbs().maxCoeff() < 1e-12 * s.norm());
    }
  }
  Eigen::VectorXd e(3);
  e << -1.0, 0.0, 0.0;
  CHECK((orthonormal_completion(e).transpose() * e).norm() < 1e-15);
}

TEST_CASE("mean part is invariant under the choice of completion") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = random_sigma(rng, 5, 0.8);
    const auto a = build_hessian_model(s, example_potential(), kNoTruncation, Completion::Householder);
    const auto b = build_hessian_model(s, example_potential(), kNoTruncation, Completion::GramSchmidt);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(a.mean_part), eb(b.mean_part);
    CHECK((ea.eigenvalues() - eb.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10 * (1 + ea.eigenvalues().cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("smallest eigenvalue of the mean part") {
  std::mt19937_64 rng(23);
  const auto& v = example_potential();
  const auto c = model_constants(v.p());
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 5;
    const auto s = random_sigma(rng, n, 0.3 + 0.05 * (trial % 10));
    const auto model = build_hessian_model(s, v);
    double ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) ratio = std::min(ratio, v.first(s[i]) / s[i]);
    const double bound = c.gradient_scale * std::pow(normalized_norm(s), 2.0 - v.p()) * ratio;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.mean_part);
    CHECK(es.eigenvalues()[0] >= bound - 1e-9);
  }
}

TEST_CASE("folded normal") {
  CHECK(folded_normal_mean(0.0, 1.0) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)));
  for (double m : {-2.0, 0.5, 3.0}) CHECK(folded_normal_mean(m, 1.0) == doctest::Approx(oracle::folded_normal(m, 1.0)).epsilon(1e-10));
  CHECK(folded_normal_mean(3.0, 1.0) == doctest::Approx(3.000766).epsilon(1e-6));
  CHECK(folded_normal_mean(1.3, 0.4) == doctest::Approx(oracle::folded_normal(1.3, 0.4)).epsilon(1e-10));
}

TEST_CASE("Monte Carlo E|det| agrees with the closed form at N = 2") {
  HessianModel model{2, Eigen::VectorXd::Ones(2), Eigen::MatrixXd::Constant(1, 1, 3.0), Eigen::MatrixXd(), kNoTruncation};
  const auto r = expected_abs_det(model, 20000, 3);
  CHECK(std::isfinite(r.closed_form));
  CHECK(r.closed_form_agrees);
  CHECK(std::fabs(r.mean - 3.000766) <= 3 * r.stderr_);
  model.mean_part(0, 0) = 0.0;
  const auto z = expected_abs_det(model, 20000, 4);
  CHECK(z.closed_form == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)));
  CHECK(z.closed_form_agrees);
  CHECK_THROWS_AS(expected_abs_det(model, 10, 1), ValidationError);
}

TEST_CASE("large mean part: E|det| is close to the product of eigenvalues") {
  const int n = 4;
  Eigen::VectorXd lam(n - 1);
  lam << 10.0, 12.0, 15.0;
  HessianModel model{n, Eigen::VectorXd::Ones(n), lam.asDiagonal().toDenseMatrix(), Eigen::MatrixXd(), kNoTruncation};
  const auto r = expected_abs_det(model, 2000, 5);
  double lower = 1.0;
  for (int i = 0; i < n - 1; ++i) lower *= lam[i] - 9.0;
  CHECK(r.mean >= lower);
  CHECK(std::isnan(r.closed_form));
  CHECK(r.mean == doctest::Approx(lam.prod()).epsilon(0.05));
}

TEST_CASE("direct counting against the quartic oracle") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 150; ++trial) {
    Eigen::Matrix2d g;
    g << normal(rng), normal(rng), normal(rng), normal(rng);
    const Eigen::Matrix2d b = (g + g.transpose()) / std::numbers::sqrt2;
    const auto r = count_critical_points_2d(g, quartic());
    CHECK(r.count == oracle::quartic_critical_points(b));
    const double radius = critical_point_radius(b, quartic());
    for (const auto& root : r.roots) CHECK(root.norm() <= radius * (1 + 1e-9));
  }
  CHECK(count_critical_points_1d(1.0, quartic()).count == 3);
  CHECK(count_critical_points_1d(0.0, quartic()).count == 1);
  CHECK(count_critical_points_1d(-0.5, quartic()).count == 1);
  bool unit_root = false;
  for (const auto& root : count_critical_points_1d(2.0, quartic()).roots) unit_root |= std::fabs(root[0] - 1.0) < 1e-9;
  CHECK(unit_root);
  CHECK(count_critical_points_2d(Eigen::Matrix2d::Zero(), quartic()).count == 1);
  CHECK_THROWS_AS(count_critical_points_1d(1.0, Potential({{1.0, 4.0}}, 3, 4.0, 4.0, 4.0, 6.0)), ValidationError);
}

TEST_CASE("N = 1 ensemble: mean count is 1 + 2 P(g > 0) = 2") {
  const auto e = count_ensemble(1, quartic(), 4000, 7);
  CHECK(std::fabs(e.mean - 2.0) <= 3 * e.stderr_);
  CHECK(e.unreliable == 0);
}

TEST_CASE("Kac-Rice integral decreases to 0 as u grows") {
  double prev = std::numeric_limits<double>::infinity();
  for (double u : {0.0, 0.5, 2.0, 8.0, 40.0}) {
    const auto r = expected_crt(2, quartic(), u);
    CHECK(r.value <= prev * (1 + 1e-6));
    CHECK(r.richardson_gap <= 0.01);
    prev = r.value;
  }
  CHECK(prev < 1e-3);
  CHECK_THROWS_AS(expected_crt(4, quartic(), 0.0), ValidationError);
}

TEST_CASE("radial slice of the integrand vanishes like r^(q1 - p - 1)") {
  auto slice = [](double r) {
    Eigen::VectorXd s(2);
    s << r * std::cos(0.4), r * std::sin(0.4);
    const auto k = kac_rice_integrand(s, example_potential());
    const auto model = build_hessian_model(s, example_potential());
    return r * k.prefactor * folded_normal_mean(model.mean_part(0, 0), 1.0);
  };
  const double slope = std::log(slice(2e-4) / slice(1e-4)) / std::log(2.0);
  CHECK(slope == doctest::Approx(4.0 - 2.0 - 1.0).epsilon(0.02));
}

TEST_CASE("covariance structure at N = 2") {
  Eigen::VectorXd s(2);
  s << 0.7, -0.4;
  const auto r = covariance_test(2, s, example_potential(), 20000, 77);
  CHECK(r.max_abs_z <= 4.5);
  CHECK(r.conditional_residual_ratio <= 1e-2);
  CHECK_THROWS_AS(covariance_test(7, Eigen::VectorXd::Ones(7), example_potential(), 20000, 1), ValidationError);
}

TEST_CASE("determinant reduction identity at N = 3") {
  Eigen::VectorXd s(3);
  s << 0.9, -0.5, 0.3;
  const auto r = determinant_reduction_check(s, example_potential(), 20000, 13);
  CHECK(std::fabs(r.z()) <= 3.0);
  CHECK(r.full == doctest::Approx(r.reduced).epsilon(0.05));
}

TEST_CASE("large configurations belong to Omega(u)") {
  const auto& v = example_potential();
  const double c4 = omega_inclusion_constant(v);
  CHECK(c4 == doctest::Approx((3.0 / 2.0 - 1.0) / 30.0));
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  int tested = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    Eigen::VectorXd s(3);
    for (int i = 0; i < 3; ++i) s[i] = unif(rng);
    for (double u : {0.01, 0.1, 1.0}) {
      if (normalized_norm(s) >= std::pow(u / c4, 1.0 / v.q1())) {
        ++tested;
        CHECK(kac_rice_integrand(s, v).omega_membership >= u);
      }
    }
  }
  CHECK(tested > 100);
}
