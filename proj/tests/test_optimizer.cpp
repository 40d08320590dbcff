#include <doctest.h>

#include <cmath>

#include "landscape/error.hpp"
#include "landscape/optimizer.hpp"

using namespace landscape;

namespace {

SolverConfig small_config() {
  SolverConfig c;
  c.grid_points = 801;
  c.restarts = 4;
  c.max_iterations = 200;
  return c;
}

}  // namespace

TEST_CASE("starting measures") {
  const auto cfg = small_config();
  const auto starts = starting_measures(cfg);
  CHECK(starts.size() == 4);
  for (const auto& [id, mu] : starts) {
    CHECK(mu.size() == cfg.grid_points);
    CHECK_FALSE(id.empty());
  }
  CHECK(starts.back().first.find("dirichlet") != std::string::npos);
  // Same seed, same random start.
  const auto again = starting_measures(cfg);
  CHECK(again.back().second.weights()[100] == starts.back().second.weights()[100]);
}

TEST_CASE("projection reaches the constraint") {
  const auto& v = example_potential();
  const auto mu = GridMeasure::gaussian(8.0, 801, 0.3);
  const double u = 2.0;
  CHECK(constraint_value(mu, v) < u);
  const auto proj = project_to_constraint(mu, v, u);
  CHECK(constraint_value(proj, v) >= u - 1e-9);
  CHECK(constraint_value(proj, v) <= u + 1e-6);
  // Already feasible measures are left alone.
  const auto same = project_to_constraint(proj, v, 0.0);
  CHECK(same.weights()[400] == doctest::Approx(proj.weights()[400]));
  CHECK_THROWS_AS(project_to_constraint(mu, v, 1e12), ValidationError);
}

TEST_CASE("maximize_sigma report invariants") {
  const auto& v = example_potential();
  const auto cfg = small_config();
  const auto r = maximize_sigma(0.5, v, cfg);
  CHECK(r.feasibility_slack >= -1e-9);
  CHECK(r.sigma == doctest::Approx(complexity_I(r.best_measure, v).total).epsilon(1e-9));
  CHECK(r.restarts == 4);
  CHECK(r.certificate.size() == 4);
  for (const auto& entry : r.certificate) CHECK(r.sigma >= entry.value - 1e-9);
  CHECK(r.sigma <= functional_upper_cap(v));
}

TEST_CASE("maximizer beats every start and its symmetrization is no better") {
  const auto& v = example_potential();
  const auto cfg = small_config();
  const auto r = maximize_sigma(0.0, v, cfg);
  for (const auto& [id, mu] : starting_measures(cfg)) CHECK(r.sigma >= complexity_I(mu, v).total - 1e-9);
  const auto sym = r.best_measure.symmetrized();
  CHECK(complexity_I(sym, v).total >= r.sigma - 1e-6);
}

TEST_CASE("sigma is nonincreasing in u") {
  const auto cfg = small_config();
  const auto curve = sigma_curve({1.0, 0.0, 0.5}, example_potential(), cfg);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].u == 0.0);
  CHECK(curve[2].u == 1.0);
  for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k].sigma <= curve[k - 1].sigma + 1e-12);
  for (const auto& r : curve) CHECK(r.feasibility_slack >= -1e-9);
}

TEST_CASE("invalid levels") {
  CHECK_THROWS_AS(maximize_sigma(-1.0, example_potential(), small_config()), ValidationError);
  CHECK_THROWS_AS(maximize_sigma(1e12, example_potential(), small_config()), ValidationError);
}
