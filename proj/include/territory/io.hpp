#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "territory/continuation.hpp"
#include "territory/equilibria.hpp"
#include "territory/evolve.hpp"
#include "territory/grid.hpp"
#include "territory/model.hpp"
#include "territory/packs.hpp"
#include "territory/segregation.hpp"
#include "territory/state.hpp"

namespace territory::io {

using nlohmann::json;

/// Field names: lambda, mu, n_predators, omega, kpred, mu_self, d, dprey,
/// beta, a, symmetric. Per-predator vectors accept a scalar (broadcast).
/// Defaults: mu_self 0, dprey 1, beta 0, a = ones − I, symmetric = (a == aᵀ).
/// Unknown keys raise ConfigError; invalid values raise ParamError.
ModelParams params_from_json(const json& j);
json params_to_json(const ModelParams& p);

json to_json(const StatePoint& s);
json to_json(const Spectrum& s);  ///< [{index, eigenvalue, multiplicity}]
json to_json(const HypothesisReport& r);
json to_json(const BifurcationPoint& b);
json to_json(const StabilityVerdict& v);
json to_json(const PackBoundReport& r);
json to_json(const SegregationReport& r);
json to_json(const EvolveReport& r);  ///< summary, samples go to CSV
/// Branch manifest: origin, termination and per-point scalars.
json branch_manifest(const Branch& b);
/// All candidates without fields, best index, identity residuals.
json to_json(const OptimReport& r);

/// {kind, point, beta, residual, classification, min_real_part, critical_mode}.
/// Stability entries are null when `spectrum` is null or too short.
json catalog_to_json(const ModelParams& p, const std::vector<ConstantSolution>& catalog, const Spectrum* spectrum);

/// Numeric CSV table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  ///< −1 when missing
};

void write_table(const std::filesystem::path& path, const Table& t);
/// Empty cells read as NaN. ConfigError when the file is missing or malformed.
Table read_table(const std::filesystem::path& path);

/// One row per node: x[,y], then one column per component (w1..wN, u).
Table state_table(const SystemState& s);
/// Fields of a state written by state_table, checked against `grid`.
SystemState state_from_table(const Table& t, const Grid& grid, double time = 0.0);
/// x[,y],value.
Table field_table(const Grid& grid, const Field& f);

/// t, mean_*, sup_*, grad_* per component.
Table trajectory_table(const std::vector<TrajectorySample>& samples);
/// beta, amplitude, zero_count, residual.
Table branch_table(const Branch& b);
/// beta, interface_x1, interface_x2, … padded with NaN.
Table interface_table(const SegregationReport& r);
/// n, beta, population, converged, physical, positive_count, residual.
Table population_table(const OptimReport& r);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace territory::io
