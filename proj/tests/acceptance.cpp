// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "landscape/freeconv.hpp"
#include "landscape/functional.hpp"
#include "landscape/kacrice.hpp"
#include "landscape/measure.hpp"
#include "landscape/optimizer.hpp"
#include "landscape/potential.hpp"
#include "landscape/rmt.hpp"
#include "oracles.hpp"

using namespace landscape;

namespace {

constexpr std::uint64_t kMasterSeed = 20240601;

struct Outcome {
  bool passed;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Potential quartic() { return Potential({{1.0, 4.0}}, 2, 4.0, 4.0, 4.0, 6.0); }
Potential quartic_sextic() { return Potential({{1.0, 4.0}, {1.0, 6.0}}, 3, 4.0, 4.0, 6.0, 30.0); }

GridMeasure unit_second_moment(const GridMeasure& mu) { return dilate(mu, 1.0 / std::sqrt(mu.cell_second_moment())); }

Outcome free_convolution_identity() {
  const auto r = convolve_semicircle(DiscreteMeasure::dirac(0.0));
  double sup = 0.0;
  for (std::size_t i = 0; i < r.lambda_nodes.size(); ++i) {
    const double x = r.lambda_nodes[i];
    if (std::fabs(x) > 1.9) continue;
    sup = std::max(sup, std::fabs(r.density[i] - std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi)));
  }
  const double lp = log_potential(r);
  return {sup <= 1e-3 && std::fabs(lp + 0.5) <= 1e-3, fmt("sup error %.2e, log-potential %.6f", sup, lp)};
}

Outcome spectral_match() {
  std::vector<double> diag(2000);
  for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = i % 2 == 0 ? -2.0 : 2.0;
  const auto spectrum = pooled_spectrum(diag, 50, derive_seed(kMasterSeed, 2));
  const auto density = convolve_semicircle(DiscreteMeasure({{-2.0, 0.5}, {2.0, 0.5}}));
  const double w1 = wasserstein1(spectrum, density);
  return {w1 <= 0.05, fmt("W1 %.2e", w1)};
}

Outcome determinant_asymptotics() {
  const int n = 400;
  std::vector<std::pair<std::string, std::vector<double>>> cases;
  cases.emplace_back("zero", std::vector<double>(n, 0.0));
  std::vector<double> alt(n);
  for (int i = 0; i < n; ++i) alt[i] = i % 2 == 0 ? 2.0 : -2.0;
  cases.emplace_back("alternating 2", alt);
  cases.emplace_back("constant 10", std::vector<double>(n, 10.0));
  bool ok = true;
  std::string detail;
  std::uint64_t k = 0;
  for (const auto& [name, diag] : cases) {
    const auto r = log_det_experiment(diag, 100, derive_seed(kMasterSeed, 30 + k++));
    const double gap = std::fabs(r.empirical - r.predicted);
    ok = ok && gap <= 0.05;
    detail += fmt("%s gap %.1e; ", name.c_str(), gap);
  }
  return {ok, detail};
}

Outcome small_t_limit() {
  const auto mu = dilate(GridMeasure::gaussian(8.0, 2001), 1e-2);
  const double value = complexity_I(mu, quartic_sextic()).total;
  const double target = 0.5 * std::log(2.0);
  return {std::fabs(value - target) <= 0.05, fmt("I = %.6f vs %.6f", value, target)};
}

Outcome kl_cancellation() {
  const auto base = GridMeasure::gaussian(8.0, 2001);
  bool ok = true;
  std::string detail;
  for (double t : {0.25, 0.5, 2.0, 4.0}) {
    const double gap = std::fabs(kl_divergence(dilate(base, t)) - oracle::gaussian_kl(t));
    ok = ok && gap <= 1e-3;
    detail += fmt("t=%g gap %.1e; ", t, gap);
  }
  return {ok, detail};
}

Outcome kac_rice_oracle() {
  const auto v = quartic();
  const auto kr = expected_crt(2, v, 0.0);
  const auto count = count_ensemble(2, v, 2000, derive_seed(kMasterSeed, 6));
  // The integral excludes the isolated critical point at the origin.
  const double direct = count.mean - 1.0;
  const double quad_err = kr.richardson_gap * kr.value;
  const double se = std::sqrt(kr.stderr_ * kr.stderr_ + quad_err * quad_err + count.stderr_ * count.stderr_);
  const double z = (kr.value - direct) / se;
  return {std::fabs(z) <= 3.0 && count.unreliable == 0,
          fmt("Kac-Rice %.4f vs counting %.4f +- %.4f (z = %.2f, %d unreliable)", kr.value, direct, se, z,
              count.unreliable)};
}

Outcome covariance_suite() {
  Eigen::VectorXd s(3);
  s << 0.9, -0.5, 0.3;
  const auto r = covariance_test(3, s, example_potential(), 100000, derive_seed(kMasterSeed, 7));
  return {r.max_abs_z <= 4.0 && r.conditional_residual_ratio <= 1e-2,
          fmt("%zu entries, max |z| %.2f, residual ratio %.1e", r.entries.size(), r.max_abs_z,
              r.conditional_residual_ratio)};
}

Outcome variational_sanity() {
  const auto v = example_potential();
  const SolverConfig config;
  const auto curve = sigma_curve({0.0, 0.1, 0.2, 0.3, 0.4}, v, config);
  bool monotone = true;
  for (std::size_t i = 1; i < curve.size(); ++i) monotone = monotone && curve[i].sigma <= curve[i - 1].sigma + 1e-12;
  double best_start = -std::numeric_limits<double>::infinity();
  for (const auto& [name, mu] : starting_measures(config)) best_start = std::max(best_start, complexity_I(mu, v).total);
  const double s0 = curve.front().sigma;
  const bool zero_ok = std::isfinite(s0) && s0 >= best_start - 1e-12;
  const auto uc = find_uc(v, config);
  const bool uc_ok = uc.u_c > 0.0 && std::isfinite(uc.u_c) && uc.sigma_low >= 0.0 && uc.sigma_high < 0.0;
  std::string values;
  for (const auto& r : curve) values += fmt("%.4f ", r.sigma);
  return {monotone && zero_ok && uc_ok,
          fmt("Sigma on u grid [%s], Sigma(0) %.6f vs best start %.6f, u_c %.4f in [%.4f, %.4f]", values.c_str(), s0,
              best_start, uc.u_c, uc.bracket.first, uc.bracket.second)};
}

Outcome truncation_convergence() {
  const double half = 8.0;
  const std::size_t pts = 2001;
  std::vector<std::pair<std::string, GridMeasure>> measures;
  measures.emplace_back("gaussian", GridMeasure::gaussian(half, pts));
  measures.emplace_back("uniform", unit_second_moment(GridMeasure::from_density(
                                       half, pts, [](double x) { return std::fabs(x) <= std::sqrt(3.0) ? 1.0 : 0.0; })));
  measures.emplace_back("bimodal", unit_second_moment(GridMeasure::from_density(half, pts, [](double x) {
                          return std::exp(-8.0 * (x - 0.97) * (x - 0.97)) + std::exp(-8.0 * (x + 0.97) * (x + 0.97));
                        })));
  struct Pair {
    std::size_t measure;
    double t;
  };
  const std::vector<Pair> pairs{{0, 0.25}, {0, 0.5}, {1, 0.5}, {2, 0.5}, {2, 1.0}};
  bool ok = true;
  double worst = 0.0;
  int count = 0;
  for (const auto& v : {example_potential(), quartic_sextic()}) {
    for (const auto& [m, t] : pairs) {
      const auto& mu = measures[m].second;
      const double exact = phi(t, mu, v).phi3;
      auto gap = [&](double K) { return std::fabs(phi(t, mu, v, K).phi3 - exact); };
      const double g10 = gap(10.0);
      const double g50 = gap(50.0);
      const double g250 = gap(250.0);
      const double extrapolated = g10 > 0.0 ? g50 * g50 / g10 : 0.0;
      ok = ok && g250 <= 2.0 * extrapolated + 1e-12 && g250 <= 1e-2;
      worst = std::max(worst, g250);
      ++count;
    }
  }
  return {ok, fmt("%d pairs, worst gap at K=250 %.2e", count, worst)};
}

Outcome invariant_suite() {
  std::stringstream list(LANDSCAPE_UNIT_TESTS);
  std::string path;
  std::vector<std::string> failed;
  int ran = 0;
  while (std::getline(list, path, ',')) {
    ++ran;
    const std::string cmd = "\"" + path + "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) failed.push_back(path.substr(path.find_last_of('/') + 1));
  }
  std::string detail = fmt("%d suites", ran);
  for (const auto& f : failed) detail += " failed:" + f;
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double time_limit;  // seconds
    std::function<Outcome()> run;
  };
  const double no_limit = std::numeric_limits<double>::infinity();
  const std::vector<Criterion> criteria{
      {1, "free convolution of delta_0", 10.0, free_convolution_identity},
      {2, "spectrum of diag(+-2) + GOE_2000", 120.0, spectral_match},
      {3, "log-determinant asymptotics at N = 400", 300.0, determinant_asymptotics},
      {4, "small-t limit of I", 60.0, small_t_limit},
      {5, "KL of dilated Gaussian", no_limit, kl_cancellation},
      {6, "Kac-Rice vs direct counting", 600.0, kac_rice_oracle},
      {7, "covariance suite at N = 3", no_limit, covariance_suite},
      {8, "variational sanity", no_limit, variational_sanity},
      {9, "truncation convergence", no_limit, truncation_convergence},
      {10, "invariant suites", no_limit, invariant_suite},
  };
  const auto total_start = std::chrono::steady_clock::now();
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = elapsed_since(start);
    bool passed = o.passed && secs <= c.time_limit;
    if (c.id == 10) {
      const double total = elapsed_since(total_start);
      passed = passed && total <= 1200.0;
      o.detail += fmt(", acceptance total %.0f s", total);
    }
    if (!passed) ++failures;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", passed ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures;
}
