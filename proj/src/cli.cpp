#include "landscape/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "landscape/error.hpp"
#include "landscape/freeconv.hpp"
#include "landscape/functional.hpp"
#include "landscape/io.hpp"
#include "landscape/kacrice.hpp"
#include "landscape/measure.hpp"
#include "landscape/optimizer.hpp"
#include "landscape/potential.hpp"
#include "landscape/rmt.hpp"

namespace landscape::cli {

namespace {

constexpr std::uint64_t kMasterSeed = 20240601;

struct Common {
  std::string potential_path;
  std::string config_path;
  std::string out;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

std::optional<std::uint64_t> env_seed() {
  if (const char* s = std::getenv("LANDSCAPE_SEED"); s && *s) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ValidationError(std::string("LANDSCAPE_SEED is not an unsigned integer: ") + s);
    }
  }
  return std::nullopt;
}

std::uint64_t master_seed(const Common& c) {
  if (c.seed) return *c.seed;
  if (auto s = env_seed()) return *s;
  return kMasterSeed;
}

void apply_threads(const Common& c) {
  int threads = c.threads;
  if (threads <= 0) {
    if (const char* s = std::getenv("LANDSCAPE_THREADS"); s && *s) threads = std::atoi(s);
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

Potential potential_of(const Common& c) {
  return c.potential_path.empty() ? example_potential() : load_potential(c.potential_path);
}

SolverConfig solver_of(const Common& c) {
  SolverConfig cfg;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw ValidationError("cannot open config file " + c.config_path);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ValidationError("cannot parse " + c.config_path + ": " + e.what());
    }
    cfg = solver_config_from_json(j, cfg);
  }
  if (c.seed || env_seed()) cfg.seed = master_seed(c);
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool outputs) {
  app->add_option("--potential", c.potential_path, "Potential JSON file (default: x^4 - |x|^5 + x^6)")
      ->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Master seed (overrides LANDSCAPE_SEED)");
  app->add_option("--threads", c.threads, "Thread count (overrides LANDSCAPE_THREADS)");
  if (outputs) {
    app->add_option("--out", c.out, "Output file (written atomically)");
    app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  }
}

// Writes rows as CSV or JSON records when an output path is given.
void emit(const Common& c, const Json& config, const std::vector<std::string>& header,
          const std::vector<std::vector<double>>& rows, Json& summary) {
  summary["config_hash"] = config_hash(config);
  summary["version"] = version();
  if (c.out.empty()) return;
  if (c.format == "csv") {
    write_atomic(c.out, make_csv(config, header, rows));
  } else {
    Json records = Json::array();
    for (const auto& row : rows) {
      Json r;
      for (std::size_t i = 0; i < header.size(); ++i) r[header[i]] = row[i];
      records.push_back(r);
    }
    Json doc{{"version", version()}, {"config_hash", config_hash(config)}, {"config", config}, {"rows", records}};
    write_atomic(c.out, doc.dump(2) + "\n");
  }
  summary["output"] = c.out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("not a number: \"" + item + "\"");
    }
  }
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

Json value_json(const FunctionalValue& v) {
  return {{"phi1", v.phi1}, {"phi2", v.phi2}, {"phi3", v.phi3}, {"kl", v.kl},
          {"radial_term", v.radial_term}, {"total", v.total}, {"t", v.t}};
}

int cmd_validate(const Common& c) {
  const Potential pot = potential_of(c);
  const auto report = validate_assumption1(pot);
  Json checks = Json::array();
  for (const auto& ch : report.checks) {
    checks.push_back({{"name", ch.name},
                      {"worst_margin", ch.worst_margin},
                      {"worst_x", ch.worst_x},
                      {"detail", ch.detail},
                      {"passed", ch.passed}});
  }
  Json summary{{"command", "validate-potential"},
               {"potential", potential_to_json(pot)},
               {"passed", report.passed()},
               {"checks", checks},
               {"minimal_c_bound", minimal_bound_constant(pot)},
               {"version", version()}};
  std::cout << summary.dump(2) << std::endl;
  return report.passed() ? kExitOk : kExitValidation;
}

int cmd_sigma(const Common& c, const std::string& u_text) {
  const Potential pot = potential_of(c);
  const SolverConfig cfg = solver_of(c);
  const auto us = parse_list(u_text);
  const auto reports = sigma_curve(us, pot, cfg);
  Json config{{"command", "sigma"}, {"potential", potential_to_json(pot)}, {"solver", solver_config_to_json(cfg)},
              {"u", us}};
  std::vector<std::vector<double>> rows;
  Json points = Json::array();
  for (const auto& r : reports) {
    rows.push_back({r.u, r.sigma, r.feasibility_slack, r.value.phi1, r.value.phi2, r.value.phi3, r.value.kl,
                    r.value.t, double(r.iterations)});
    points.push_back({{"u", r.u}, {"sigma", r.sigma}, {"feasibility_slack", r.feasibility_slack},
                      {"value", value_json(r.value)}, {"iterations", r.iterations}});
  }
  Json summary{{"command", "sigma"}, {"points", points}};
  emit(c, config, {"u", "sigma", "feasibility_slack", "phi1", "phi2", "phi3", "kl", "t", "iterations"}, rows,
       summary);
  std::cout << summary.dump(2) << std::endl;
  return kExitOk;
}

int cmd_uc(const Common& c) {
  const Potential pot = potential_of(c);
  const SolverConfig cfg = solver_of(c);
  const auto r = find_uc(pot, cfg);
  Json config{{"command", "uc"}, {"potential", potential_to_json(pot)}, {"solver", solver_config_to_json(cfg)}};
  Json summary{{"command", "uc"},
               {"u_c", r.u_c},
               {"bracket", {r.bracket.first, r.bracket.second}},
               {"sigma_low", r.sigma_low},
               {"sigma_high", r.sigma_high},
               {"sigma_zero", r.sigma_zero},
               {"tolerance", r.tolerance},
               {"solves", r.solves}};
  emit(c, config, {"u_low", "u_high", "sigma_low", "sigma_high", "u_c"},
       {{r.bracket.first, r.bracket.second, r.sigma_low, r.sigma_high, r.u_c}}, summary);
  std::cout << summary.dump(2) << std::endl;
  return kExitOk;
}

DiscreteMeasure parse_atoms(const std::string& text) {
  std::vector<Atom> atoms;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      atoms.push_back({parse_list(item).at(0), 1.0});
    } else {
      atoms.push_back({parse_list(item.substr(0, colon)).at(0), parse_list(item.substr(colon + 1)).at(0)});
    }
  }
  double total = 0.0;
  for (const auto& a : atoms) total += a.mass;
  if (!(total > 0.0)) throw ValidationError("atom masses must sum to a positive value");
  for (auto& a : atoms) a.mass /= total;
  return DiscreteMeasure(std::move(atoms));
}

int cmd_freeconv(const Common& c, const std::string& atoms_text, std::size_t points) {
  const auto nu = parse_atoms(atoms_text);
  FreeConvConfig fc;
  fc.lambda_points = points;
  const auto r = convolve_semicircle(nu, fc);
  Json atoms = Json::array();
  for (const auto& a : nu.atoms()) atoms.push_back({a.location, a.mass});
  Json config{{"command", "freeconv"}, {"atoms", atoms}, {"lambda_points", points}};
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < r.lambda_nodes.size(); ++i) rows.push_back({r.lambda_nodes[i], r.density[i]});
  Json summary{{"command", "freeconv"},
               {"log_potential", r.log_potential},
               {"mass", r.mass},
               {"support", {r.lambda_nodes.front(), r.lambda_nodes.back()}},
               {"support_bound", r.support_bound}};
  emit(c, config, {"lambda", "density"}, rows, summary);
  std::cout << summary.dump(2) << std::endl;
  return kExitOk;
}

std::vector<double> diagonal_of(const std::string& kind, double value, int n) {
  std::vector<double> d(n, 0.0);
  if (kind == "zero") return d;
  for (int i = 0; i < n; ++i) d[i] = kind == "alternating" ? (i % 2 == 0 ? value : -value) : value;
  return d;
}

int cmd_rmt(const Common& c, const std::string& kind, double value, int n, int samples) {
  const auto diag = diagonal_of(kind, value, n);
  const std::uint64_t seed = master_seed(c);
  const auto r = log_det_experiment(diag, samples, seed);
  Json config{{"command", "rmt-logdet"}, {"diagonal", kind}, {"value", value}, {"n", n}, {"samples", samples},
              {"seed", seed}};
  Json summary{{"command", "rmt-logdet"},
               {"empirical", r.empirical},
               {"predicted", r.predicted},
               {"gap", std::fabs(r.empirical - r.predicted)},
               {"standard_error", r.standard_error},
               {"resampled", r.resampled}};
  emit(c, config, {"empirical", "predicted", "standard_error"}, {{r.empirical, r.predicted, r.standard_error}},
       summary);
  std::cout << summary.dump(2) << std::endl;
  return kExitOk;
}

int cmd_kacrice(const Common& c, int n, double u, int mc_samples, bool validate, int trials) {
  const Potential pot = potential_of(c);
  const std::uint64_t seed = master_seed(c);
  const auto est = expected_crt(n, pot, u, {}, mc_samples, derive_seed(seed, 0));
  Json config{{"command", "kacrice"}, {"potential", potential_to_json(pot)}, {"n", n}, {"u", u},
              {"mc_samples", mc_samples}, {"seed", seed}};
  Json summary{{"command", "kacrice"},
               {"n", n},
               {"u", u},
               {"estimate", est.value},
               {"stderr", est.stderr_},
               {"richardson_gap", est.richardson_gap},
               {"nodes", est.nodes},
               {"note", "excludes the critical point at sigma = 0"}};
  std::vector<double> row{est.value, est.stderr_};
  if (validate) {
    if (u != 0.0) throw ValidationError("--validate-against-counting requires --u 0");
    if (n != 2) throw ValidationError("--validate-against-counting requires --n 2");
    const auto ens = count_ensemble(n, pot, trials, derive_seed(seed, 1));
    const double oracle = ens.mean - 1.0;
    const double se = std::hypot(est.stderr_, ens.stderr_);
    summary["oracle"] = oracle;
    summary["oracle_stderr"] = ens.stderr_;
    summary["oracle_trials"] = ens.trials;
    summary["oracle_unreliable"] = ens.unreliable;
    summary["z"] = se > 0.0 ? (est.value - oracle) / se : 0.0;
    row.push_back(oracle);
    row.push_back(ens.stderr_);
    config["trials"] = trials;
  }
  std::vector<std::string> header{"estimate", "stderr"};
  if (validate) {
    header.push_back("oracle");
    header.push_back("oracle_stderr");
  }
  emit(c, config, header, {row}, summary);
  std::cout << summary.dump(2) << std::endl;
  return kExitOk;
}

int cmd_cov(const Common& c, int n, const std::string& sigma_text, int samples) {
  const Potential pot = potential_of(c);
  const std::uint64_t seed = master_seed(c);
  std::vector<double> s = sigma_text.empty() ? std::vector<double>(n, 1.0) : parse_list(sigma_text);
  if (static_cast<int>(s.size()) != n) throw ValidationError("--sigma must have n entries");
  const Eigen::VectorXd sigma = Eigen::Map<Eigen::VectorXd>(s.data(), n);
  const auto r = covariance_test(n, sigma, pot, samples, seed);
  Json config{{"command", "cov-test"}, {"potential", potential_to_json(pot)}, {"n", n}, {"sigma", s},
              {"samples", samples}, {"seed", seed}};
  std::vector<std::vector<double>> rows;
  Json entries = Json::array();
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    rows.push_back({double(i), e.empirical, e.predicted, e.stderr_, e.z()});
    entries.push_back({{"name", e.name}, {"empirical", e.empirical}, {"predicted", e.predicted},
                       {"stderr", e.stderr_}, {"z", e.z()}});
  }
  Json summary{{"command", "cov-test"},
               {"max_abs_z", r.max_abs_z},
               {"conditional_residual_ratio", r.conditional_residual_ratio},
               {"entries", entries}};
  emit(c, config, {"entry", "empirical", "predicted", "stderr", "z"}, rows, summary);
  std::cout << summary.dump(2) << std::endl;
  return kExitOk;
}

int cmd_selftest() {
  Json results = Json::array();
  bool all = true;
  auto check = [&](const std::string& name, bool ok, double value) {
    results.push_back({{"name", name}, {"passed", ok}, {"value", value}});
    all = all && ok;
  };
  const Potential quartic({{1.0, 4.0}}, 2, 4.0, 4.0, 4.0, 6.0);

  check("folded normal at zero mean", std::fabs(folded_normal_mean(0.0, 1.0) - std::sqrt(2.0 / std::numbers::pi)) < 1e-12,
        folded_normal_mean(0.0, 1.0));
  {
    const auto r = count_critical_points_1d(1.0, quartic);
    const bool ok = r.count == 3 && std::fabs(r.roots[1][0] - std::sqrt(0.5)) < 1e-9;
    check("1d count with g = 1", ok, r.count);
    check("1d count with g = -1", count_critical_points_1d(-1.0, quartic).count == 1, 1.0);
  }
  {
    const auto r = count_critical_points_2d(Eigen::Matrix2d::Zero(), quartic);
    check("2d count with zero coupling", r.count == 1, r.count);
  }
  {
    const auto g = sample_goe(6, 6, 7).matrix;
    check("GOE sample symmetric", (g - g.transpose()).cwiseAbs().maxCoeff() == 0.0, 0.0);
    check("GOE seed determinism", (g - sample_goe(6, 6, 7).matrix).cwiseAbs().maxCoeff() == 0.0, 0.0);
  }
  {
    FreeConvConfig fc;
    fc.lambda_points = 1001;
    const auto r = convolve_semicircle(DiscreteMeasure::dirac(0.0), fc);
    check("semicircle log-potential", std::fabs(r.log_potential + 0.5) < 5e-3, r.log_potential);
  }
  {
    const auto mu = GridMeasure::gaussian(8.0, 801, 1.0);
    const double kl = kl_divergence(mu);
    check("KL of the standard Gaussian", std::fabs(kl) < 1e-3, kl);
    const auto v = phi(0.0, mu, quartic);
    check("phi at t = 0", v.phi1 == 0.0 && v.phi2 == 0.0 && v.phi3 == -0.5, v.total());
  }
  {
    const auto r = validate_assumption1(example_potential());
    check("example potential passes Assumption 1", r.passed(), r.passed() ? 1.0 : 0.0);
  }
  Json summary{{"command", "selftest"}, {"passed", all}, {"checks", results}, {"version", version()}};
  std::cout << summary.dump(2) << std::endl;
  return all ? kExitOk : kExitValidation;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Annealed landscape complexity toolkit", "landscape"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Common common;

  auto* validate = app.add_subcommand("validate-potential", "Check the growth and convexity conditions on a grid");
  add_common(validate, common, false);

  std::string u_text = "0";
  auto* sigma = app.add_subcommand("sigma", "Maximize the complexity functional at each level u");
  add_common(sigma, common, true);
  sigma->add_option("--u", u_text, "Comma-separated levels u >= 0")->required();
  sigma->add_option("--config", common.config_path, "Solver config JSON")->check(CLI::ExistingFile);

  auto* uc = app.add_subcommand("uc", "Locate the critical level u_c");
  add_common(uc, common, true);
  uc->add_option("--config", common.config_path, "Solver config JSON")->check(CLI::ExistingFile);

  std::string atoms_text = "0:1";
  std::size_t points = 4001;
  auto* freeconv = app.add_subcommand("freeconv", "Density of nu boxplus semicircle");
  add_common(freeconv, common, true);
  freeconv->add_option("--atoms", atoms_text, "Atoms as loc:mass,loc:mass (masses renormalized)");
  freeconv->add_option("--points", points, "Lambda grid size")->check(CLI::Range(101, 200001));

  std::string diag_kind = "zero";
  double diag_value = 2.0;
  int rmt_n = 400;
  int rmt_samples = 100;
  auto* rmt = app.add_subcommand("rmt-logdet", "Compare (1/N) E log|det(D + GOE)| with the log-potential");
  add_common(rmt, common, true);
  rmt->add_option("--diagonal", diag_kind, "Diagonal pattern")
      ->check(CLI::IsMember({"zero", "alternating", "constant"}));
  rmt->add_option("--value", diag_value, "Diagonal magnitude");
  rmt->add_option("--n", rmt_n, "Matrix size")->check(CLI::Range(1, 4000));
  rmt->add_option("--samples", rmt_samples, "Number of matrices")->check(CLI::PositiveNumber);

  int kr_n = 2;
  double kr_u = 0.0;
  int kr_mc = 2000;
  int kr_trials = 2000;
  bool kr_validate = false;
  auto* kacrice = app.add_subcommand("kacrice", "Finite-N expected number of critical points");
  add_common(kacrice, common, true);
  kacrice->add_option("--n", kr_n, "Dimension (2 or 3)")->check(CLI::IsMember({2, 3}));
  kacrice->add_option("--u", kr_u, "Energy level u >= 0")->check(CLI::NonNegativeNumber);
  kacrice->add_option("--mc-samples", kr_mc, "GOE draws per node (N = 3)")->check(CLI::PositiveNumber);
  kacrice->add_flag("--validate-against-counting", kr_validate, "Compare with direct counting (N = 2, u = 0)");
  kacrice->add_option("--trials", kr_trials, "Coupling draws for the counting oracle")->check(CLI::Range(2, 10000000));

  int cov_n = 3;
  std::string cov_sigma;
  int cov_samples = 100000;
  auto* cov = app.add_subcommand("cov-test", "Empirical vs closed-form moments of (H, grad H, Hess H)");
  add_common(cov, common, true);
  cov->add_option("--n", cov_n, "Dimension")->check(CLI::Range(1, 6));
  cov->add_option("--sigma", cov_sigma, "Comma-separated point (default all ones)");
  cov->add_option("--samples", cov_samples, "Tensor samples")->check(CLI::Range(10000, 100000000));

  auto* selftest = app.add_subcommand("selftest", "Quick smoke checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    apply_threads(common);
    if (*validate) return cmd_validate(common);
    if (*sigma) return cmd_sigma(common, u_text);
    if (*uc) return cmd_uc(common);
    if (*freeconv) return cmd_freeconv(common, atoms_text, points);
    if (*rmt) return cmd_rmt(common, diag_kind, diag_value, rmt_n, rmt_samples);
    if (*kacrice) return cmd_kacrice(common, kr_n, kr_u, kr_mc, kr_validate, kr_trials);
    if (*cov) return cmd_cov(common, cov_n, cov_sigma, cov_samples);
    if (*selftest) return cmd_selftest();
  } catch (const ValidationError& e) {
    std::cout << Json{{"error", "validation"}, {"message", e.what()}}.dump(2) << std::endl;
    return kExitValidation;
  } catch (const ConvergenceError& e) {
    std::cout << Json{{"error", "convergence"}, {"message", e.what()}}.dump(2) << std::endl;
    return kExitConvergence;
  }
  return kExitUsage;
}

}  // namespace landscape::cli
