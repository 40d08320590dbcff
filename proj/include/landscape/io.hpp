#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "landscape/optimizer.hpp"
#include "landscape/potential.hpp"

namespace landscape {

using Json = nlohmann::json;

/// Library version string.
const char* version();

Json potential_to_json(const Potential& potential);
/// Parses {"terms": [[c, r], ...], "p", "q", "q1", "q2", "c_bound", "q_hessian"?}.
Potential potential_from_json(const Json& j);
Potential load_potential(const std::filesystem::path& path);

Json solver_config_to_json(const SolverConfig& config);
/// Overrides fields of `base` present in `j`; unknown keys are rejected.
SolverConfig solver_config_from_json(const Json& j, SolverConfig base = {});

/// 64-bit FNV-1a of the canonical (sorted-key, compact) JSON dump, as hex.
std::string config_hash(const Json& config);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// CSV text: a `#` comment line carrying version and config hash, then the
/// header row and the data rows. Values use 17 significant digits.
std::string make_csv(const Json& config, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

}  // namespace landscape
