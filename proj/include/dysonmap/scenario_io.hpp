#pragma once

// Scenario files (YAML, `schema: 1`). See README for the full key list.

#include <string>
#include <vector>

#include "dysonmap/diagnostics.hpp"
#include "dysonmap/model.hpp"

namespace dysonmap {

inline constexpr int kScenarioSchema = 1;

struct RunSpec {
    Scenario scenario;
    DiagnosticsConfig diagnostics;
};

/// Parse a scenario file; `overrides` are `dotted.key=value` with a YAML value.
/// Throws ConfigError (syntax: line/column; validation: key path).
RunSpec parse_scenario(const std::string& path, const std::vector<std::string>& overrides = {});

/// Same, from text. `source` labels error messages.
RunSpec parse_scenario_text(const std::string& text, const std::vector<std::string>& overrides = {},
                            const std::string& source = "<string>");

/// Every valid dotted key path of the schema (coefficient sub-keys included).
const std::vector<std::string>& schema_keys();

/// Closest schema key to an unknown `key` (matched on the last path segment).
std::string nearest_key(const std::string& key);

std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace dysonmap
