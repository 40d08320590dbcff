#include "landscape/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "landscape/error.hpp"

namespace landscape {

const char* version() { return LANDSCAPE_VERSION; }

Json potential_to_json(const Potential& potential) {
  Json terms = Json::array();
  for (const auto& t : potential.terms()) terms.push_back({t.coefficient, t.exponent});
  Json j{{"terms", terms},
         {"p", potential.p()},
         {"q", potential.q()},
         {"q1", potential.q1()},
         {"q2", potential.q2()},
         {"c_bound", potential.c_bound()}};
  if (potential.has_separate_q_hessian()) j["q_hessian"] = potential.q_hessian();
  return j;
}

Potential potential_from_json(const Json& j) {
  try {
    if (!j.is_object()) throw ValidationError("potential must be a JSON object");
    for (const char* key : {"terms", "p", "q", "q1", "q2", "c_bound"}) {
      if (!j.contains(key)) throw ValidationError(std::string("potential is missing \"") + key + "\"");
    }
    std::vector<PowerTerm> terms;
    for (const auto& t : j.at("terms")) {
      if (!t.is_array() || t.size() != 2) throw ValidationError("each term must be [coefficient, exponent]");
      terms.push_back({t[0].get<double>(), t[1].get<double>()});
    }
    std::optional<double> qh;
    if (j.contains("q_hessian")) qh = j.at("q_hessian").get<double>();
    return Potential(std::move(terms), j.at("p").get<int>(), j.at("q").get<double>(), j.at("q1").get<double>(),
                     j.at("q2").get<double>(), j.at("c_bound").get<double>(), qh);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed potential: ") + e.what());
  }
}

Potential load_potential(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open potential file " + path.string());
  try {
    return potential_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ValidationError("cannot parse " + path.string() + ": " + e.what());
  }
}

Json solver_config_to_json(const SolverConfig& c) {
  Json j{{"grid_max", c.grid_max},         {"grid_points", c.grid_points},
         {"restarts", c.restarts},         {"seed", c.seed},
         {"tol", c.tol},                   {"max_iterations", c.max_iterations},
         {"uc_tolerance", c.uc_tolerance}, {"u_initial", c.u_initial},
         {"u_max_cap", c.u_max_cap}};
  // JSON has no infinity; null stands for "no truncation".
  j["K"] = std::isfinite(c.K) ? Json(c.K) : Json(nullptr);
  return j;
}

SolverConfig solver_config_from_json(const Json& j, SolverConfig c) {
  if (!j.is_object()) throw ValidationError("solver config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "grid_max") c.grid_max = value.get<double>();
      else if (key == "grid_points") c.grid_points = value.get<std::size_t>();
      else if (key == "restarts") c.restarts = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "tol") c.tol = value.get<double>();
      else if (key == "max_iterations") c.max_iterations = value.get<int>();
      else if (key == "uc_tolerance") c.uc_tolerance = value.get<double>();
      else if (key == "u_initial") c.u_initial = value.get<double>();
      else if (key == "u_max_cap") c.u_max_cap = value.get<double>();
      else if (key == "K") c.K = value.is_null() ? kNoTruncation : value.get<double>();
      else throw ValidationError("unknown solver config key \"" + key + "\"");
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed solver config: ") + e.what());
  }
  if (!(c.grid_max > 0.0) || c.grid_points < 3 || c.grid_points % 2 == 0)
    throw ValidationError("grid needs grid_max > 0 and an odd grid_points >= 3");
  if (!(c.tol > 0.0) || c.max_iterations < 1 || c.restarts < 1)
    throw ValidationError("tol, max_iterations and restarts must be positive");
  if (!(c.K > 0.0)) throw ValidationError("K must be positive");
  return c;
}

std::string config_hash(const Json& config) {
  const std::string text = config.dump();  // nlohmann::json objects keep keys sorted
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string make_csv(const Json& config, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  out << "# landscape " << version() << " config " << config_hash(config) << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  out << std::setprecision(17);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace landscape
