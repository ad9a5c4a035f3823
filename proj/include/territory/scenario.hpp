#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "territory/grid.hpp"
#include "territory/io.hpp"
#include "territory/model.hpp"

namespace territory {

inline constexpr const char* kVersion = "0.1.0";

/// Scenario names accepted by the CLI.
const std::vector<std::string>& scenario_names();

/// A number, or a string "pi", "k*pi", "kpi", "pi/k", "k*pi/m" or a plain number.
double parse_extent(const io::json& value, const std::string& field);

/// Sets `path` (dot separated, e.g. "params.mu" or "grid.n_cells") to the JSON
/// value of `value`; text that is not valid JSON is stored as a string.
void apply_override(io::json& doc, const std::string& assignment);

struct ScenarioConfig {
  std::string scenario;
  ModelParams params;
  Grid grid;
  int spectrum_modes = 64;
  SpectrumSource spectrum_source = SpectrumSource::Analytic;
  io::json options = io::json::object();
  std::uint64_t seed = 0;
  io::json document;  ///< the resolved input, recorded in the manifest
};

/// Top-level keys: scenario, params, grid {dim, extents, n_cells},
/// spectrum {modes, source}, options, seed. Unknown keys raise ConfigError.
ScenarioConfig load_config(const io::json& doc);

struct Diagnostic {
  std::string severity;  ///< "error" | "warning" | "info"
  std::string code;
  std::string message;
  std::string field;
};

/// Hypothesis violations, resonance proximity and scenario limitations.
/// A clean configuration yields an empty list.
std::vector<Diagnostic> validate(const ScenarioConfig& config);

io::json to_json(const Diagnostic& d);

struct ScenarioResult {
  io::json manifest;
  std::vector<std::string> artifacts;  ///< paths relative to the output directory
};

/// Runs the scenario and writes manifest.json plus its artifacts into `out`.
/// ConfigError when validation reports an error; module errors propagate.
ScenarioResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out);

}  // namespace territory
