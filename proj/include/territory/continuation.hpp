#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "territory/equilibria.hpp"
#include "territory/grid.hpp"
#include "territory/model.hpp"
#include "territory/state.hpp"

namespace territory {

/// Point where the symmetric coexistence family loses stability to the mode
/// (ψ_n, −ψ_n, 0). Indices count from γ_0 = 0.
struct BifurcationPoint {
  int n = 0;
  double gamma_n = 0.0;
  double beta_n = 0.0;
  int multiplicity = 1;
  bool odd = true;
};

/// β_n solves (β_n a − μ_s) w(β_n) = d γ_n on the symmetric family, i.e.
/// β_n = [dγ_n(2k² + μμ_s) + μ_s(λk − μω)] / (a(λk − μω − μdγ_n)),
/// for every distinct positive γ_n with dγ_n < (λk − μω)/μ.
/// ResonanceError when λk − μω − μdγ_n vanishes within 1e-10.
std::vector<BifurcationPoint> bifurcation_points(const ModelParams& p, const Spectrum& spectrum);

struct SwitchGuess {
  ModelParams params;  ///< β = β_n(1 + δ)
  SystemState guess;   ///< symmetric state + eps·(ψ_n, −ψ_n, 0)
};

/// `eigenfunction` is ψ_n sampled on `grid`.
SwitchGuess branch_switch(const ModelParams& p, const Grid& grid, const Field& eigenfunction,
                          const BifurcationPoint& bp, double eps, double delta = 1e-2);

struct ZeroCount {
  int count = 0;
  bool degenerate = false;  ///< V ≡ 0
};

/// Sign changes of V = w_1 − w_2 between adjacent nodes, skipping nodes with
/// |V| < 1e-8·‖V‖∞. V is degenerate when ‖V‖∞ ≤ 1e-12·max‖w_i‖∞.
/// DimensionError on 2D grids.
ZeroCount zero_count(const SystemState& s);

enum class Termination { UnboundedInBeta, Reconnected, StepLimit };

std::string to_string(Termination t);

struct BranchPoint {
  double beta = 0.0;
  SystemState state;
  double residual = 0.0;
  int zero_count = 0;
  double amplitude = 0.0;  ///< ‖w_1 − w_2‖∞
  std::optional<Stability> stability;
};

struct Branch {
  ModelParams params;  ///< β of the template is unused
  std::vector<BranchPoint> points;
  BifurcationPoint origin;
  Termination termination = Termination::StepLimit;
  int reconnected_mode = -1;  ///< m in RECONNECTED(m)
};

struct ContinuationConfig {
  double beta_max = 500.0;
  int max_steps = 2000;
  double max_log_beta_step = 0.1;
  double tol = 1e-10;  ///< stationary residual (sup norm) accepted by the corrector
  int max_corrector = 12;
  double reconnect_tol = 1e-6;
  double min_step = 1e-9;
  double max_step = 1.0;
  /// β values where the branch is pinned exactly (besides beta_max).
  std::vector<double> landmarks;
  /// Classify each point by a dense eigen-solve of the linearization (costly).
  bool compute_stability = false;
};

/// The first two corrected points of a branch together with its origin.
struct BranchStart {
  BifurcationPoint origin;
  Field eigenfunction;
  ModelParams params;
  std::vector<BranchPoint> seeds;
};

/// Switches onto the branch at `bp`: from branch_switch(eps) and
/// branch_switch(2·eps) a corrector with ⟨w_1 − w_2, ψ_n⟩ pinned and β free
/// lands on two branch points. Negative eps starts on the mirror branch.
BranchStart start_branch(const ModelParams& p, const Grid& grid, const Field& eigenfunction,
                         const BifurcationPoint& bp, double eps, double delta = 1e-2,
                         const ContinuationConfig& config = {});

/// Pseudo-arclength in (state, log β) with a secant predictor. direction +1
/// moves away from the symmetric family, −1 back toward it.
Branch continue_branch(const BranchStart& start, int direction, const ContinuationConfig& config = {});

/// Newton at fixed β from the nearest stored branch point (secant-interpolated in log β).
BranchPoint solve_on_branch(const Branch& branch, double beta, const ContinuationConfig& config = {});

/// β = 0 segment at s ∈ {0, 0.25, 0.5, 0.75, 1}.
std::vector<ConstantSolution> segment_family(const ModelParams& p);

}  // namespace territory
