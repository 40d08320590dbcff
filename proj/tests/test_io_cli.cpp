#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "landscape/cli.hpp"
#include "landscape/error.hpp"
#include "landscape/io.hpp"

using namespace landscape;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "landscape");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "landscape_io_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("potential JSON round trip") {
  const auto v = example_potential();
  const auto back = potential_from_json(potential_to_json(v));
  CHECK(back.p() == v.p());
  CHECK(back.q1() == v.q1());
  CHECK(back.c_bound() == v.c_bound());
  REQUIRE(back.terms().size() == v.terms().size());
  for (double x : {-1.3, 0.2, 0.9}) CHECK(back.value(x) == v.value(x));
  CHECK(potential_to_json(back) == potential_to_json(v));
}

TEST_CASE("malformed potentials are rejected") {
  CHECK_THROWS_AS(potential_from_json(Json{{"terms", 3}}), ValidationError);
  CHECK_THROWS_AS(potential_from_json(Json::parse(R"({"terms":[[1,4]],"p":2,"q":4,"q1":4,"q2":4})")), ValidationError);
  CHECK_THROWS_AS(load_potential(scratch("missing.json")), ValidationError);
}

TEST_CASE("solver config JSON") {
  SolverConfig c;
  c.grid_points = 401;
  c.restarts = 3;
  const auto j = solver_config_to_json(c);
  CHECK(j.at("K").is_null());
  const auto back = solver_config_from_json(j);
  CHECK(back.grid_points == 401);
  CHECK(back.restarts == 3);
  CHECK(std::isinf(back.K));
  CHECK_THROWS_AS(solver_config_from_json(Json{{"bogus", 1}}), ValidationError);
  CHECK_THROWS_AS(solver_config_from_json(Json{{"grid_points", 400}}), ValidationError);
  CHECK(solver_config_from_json(Json{{"K", 5.0}}).K == 5.0);
}

TEST_CASE("config hash is stable and key-order independent") {
  const Json a = Json::parse(R"({"x":1,"y":[1,2]})");
  const Json b = Json::parse(R"({"y":[1,2],"x":1})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) != config_hash(Json::parse(R"({"x":2,"y":[1,2]})")));
}

TEST_CASE("CSV layout") {
  const auto text = make_csv(Json{{"a", 1}}, {"u", "sigma"}, {{0.1, 1.0 / 3.0}});
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == std::string("# landscape ") + version() + " config " + config_hash(Json{{"a", 1}}));
  std::getline(in, line);
  CHECK(line == "u,sigma");
  std::getline(in, line);
  CHECK(line == "0.10000000000000001,0.33333333333333331");
}

TEST_CASE("atomic write replaces the target and leaves no temporary") {
  const auto p = scratch("atomic.txt");
  write_atomic(p, "first");
  write_atomic(p, "second");
  CHECK(slurp(p) == "second");
  for (const auto& e : fs::directory_iterator(p.parent_path())) CHECK(e.path().extension() != ".tmp");
}

TEST_CASE("exit codes") {
  CHECK(run_cli({"selftest"}) == cli::kExitOk);
  CHECK(run_cli({"no-such-command"}) == cli::kExitUsage);
  CHECK(run_cli({"rmt-logdet", "--n", "0"}) == cli::kExitUsage);
  const auto bad = scratch("bad_potential.json");
  std::ofstream(bad) << R"({"terms":[[1,4]],"p":2,"q":4,"q1":4,"q2":4,"c_bound":1})";
  CHECK(run_cli({"validate-potential", "--potential", bad.string()}) == cli::kExitValidation);
  const auto good = scratch("good_potential.json");
  std::ofstream(good) << R"({"terms":[[1,4]],"p":2,"q":4,"q1":4,"q2":4,"c_bound":6})";
  CHECK(run_cli({"validate-potential", "--potential", good.string()}) == cli::kExitOk);
}

TEST_CASE("same seed gives byte-identical output") {
  const auto a = scratch("rmt_a.csv");
  const auto b = scratch("rmt_b.csv");
  const auto c = scratch("rmt_c.csv");
  REQUIRE(run_cli({"rmt-logdet", "--n", "40", "--samples", "10", "--seed", "11", "--out", a.string()}) == 0);
  REQUIRE(run_cli({"rmt-logdet", "--n", "40", "--samples", "10", "--seed", "11", "--out", b.string()}) == 0);
  REQUIRE(run_cli({"rmt-logdet", "--n", "40", "--samples", "10", "--seed", "12", "--out", c.string()}) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));
  const auto f1 = scratch("fc_a.json");
  const auto f2 = scratch("fc_b.json");
  REQUIRE(run_cli({"freeconv", "--atoms", "-1:1,1:1", "--points", "201", "--format", "json", "--out", f1.string()}) == 0);
  REQUIRE(run_cli({"freeconv", "--atoms", "-1:1,1:1", "--points", "201", "--format", "json", "--out", f2.string()}) == 0);
  CHECK(slurp(f1) == slurp(f2));
  CHECK(Json::parse(slurp(f1)).is_object());
}

TEST_CASE("sigma emits one nonincreasing row per level") {
  SolverConfig c;
  c.grid_points = 801;
  c.restarts = 4;
  c.max_iterations = 200;
  const auto config = scratch("solver.json");
  std::ofstream(config) << solver_config_to_json(c).dump();
  const auto out = scratch("sigma.csv");
  REQUIRE(run_cli({"sigma", "--u", "0,1,2", "--config", config.string(), "--out", out.string()}) == cli::kExitOk);
  std::istringstream in(slurp(out));
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# landscape ", 0) == 0);
  std::getline(in, line);
  const auto header = line;
  const auto column = static_cast<int>(std::count(header.begin(), header.begin() + header.find("sigma"), ','));
  std::vector<double> sigma;
  while (std::getline(in, line)) {
    std::stringstream row(line);
    std::string cell;
    for (int k = 0; k <= column; ++k) std::getline(row, cell, ',');
    sigma.push_back(std::stod(cell));
  }
  REQUIRE(sigma.size() == 3);
  CHECK(sigma[1] <= sigma[0]);
  CHECK(sigma[2] <= sigma[1]);
}
