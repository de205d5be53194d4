#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "leqlab/model.hpp"

namespace leq {

/// Configuration documents are JSON objects with these fields:
///
///   horizon, x0, theta, grid_n
///   A1 B1 C1 D1 b sigma A2 B2 C2 D2 g     number or sample list on [0, horizon]
///   terminal { G, S1, S2 }
///   weights  { R11 R12 R13 R14 R22 R23 R24 R33 R34 R44 }  (upper triangle only)
///   mc       { n_paths, dt, seed }
///
/// horizon, x0, theta and weights.R44 are required; everything else
/// defaults to zero (mc and grid_n have their own defaults). Unknown fields
/// are rejected. `//` and `/* */` comments are allowed.
using ConfigDocument = nlohmann::json;

ConfigDocument parse_config(std::string_view text);
ConfigDocument load_config(const std::filesystem::path& path);

/// Sets a dotted key (e.g. "terminal.S1", "mc.seed", "A1") from a JSON
/// literal. Unknown keys throw ConfigParseError.
void apply_override(ConfigDocument& doc, std::string_view key, std::string_view value);

ProblemSpec build_problem(const ConfigDocument& doc);

ConfigDocument to_config(const ProblemSpec& spec);

} // namespace leq
