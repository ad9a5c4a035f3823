#pragma once

#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "territory/grid.hpp"
#include "territory/model.hpp"
#include "territory/state.hpp"

namespace territory {

enum class ConstantKind { Zero, PreyOnly, Simple, CoexistSymmetric, FamilySegment };

std::string to_string(ConstantKind k);

struct ConstantSolution {
  ConstantKind kind = ConstantKind::Zero;
  int predator = -1;  ///< surviving predator for Simple
  double s = std::numeric_limits<double>::quiet_NaN();  ///< segment parameter for FamilySegment
  StatePoint point;
  double beta = 0.0;

  std::string label() const;  ///< e.g. "SIMPLE(1)", "FAMILY_SEGMENT(0.25)"
};

/// Single-predator state (w̃_i, ũ): w̃ = (λk_i − μω_i)/(k_i² + μμ_i), ũ = (ω_i + μ_i w̃)/k_i.
StatePoint simple_point(const ModelParams& p, int i);

/// Symmetric coexistence state of two identical predators with a_12 = a:
/// w = (λk − μω)/(2k² + μ(μ_s + βa)), u = (λ(μ_s + βa) + 2kω)/(2k² + μ(μ_s + βa)).
StatePoint coexist_point(const ModelParams& p);

/// β = 0 segment s ↦ ((λk−μω)s/k², (λk−μω)(1−s)/k², ω/k); requires μ_s = 0.
StatePoint segment_point(const ModelParams& p, double s);

/// ZERO, PREY_ONLY (μ > 0), SIMPLE(i) when w̃_i > 0, COEXIST_SYMMETRIC for a
/// flagged symmetric pair, and FAMILY_SEGMENT samples at β = 0.
std::vector<ConstantSolution> constant_catalog(const ModelParams& p);

enum class Stability { StronglyStable, WeaklyStable, Unstable };

std::string to_string(Stability s);

inline constexpr double kStabilityBand = 1e-10;

struct StabilityVerdict {
  Stability classification = Stability::Unstable;
  int critical_mode = 0;
  std::complex<double> critical_eigenvalue;
  double min_real_part = 0.0;
  int modes_checked = 0;  ///< h_max + 1
};

/// Eigenvalues of M_h = γ·diag(d_1, …, d_N, D) − A_β at a constant state.
std::vector<std::complex<double>> mode_eigenvalues(const ModelParams& p, const StatePoint& point, double gamma);

/// Checks modes 0..h_max, h_max the smallest index with γ_h·min(d) > 2‖A_β‖₂.
/// SpectrumError when the spectrum is too short to reach h_max.
StabilityVerdict constant_stability(const ModelParams& p, const StatePoint& point, const Spectrum& spectrum);
inline StabilityVerdict constant_stability(const ModelParams& p, const ConstantSolution& sol, const Spectrum& spectrum) {
  return constant_stability(p, sol.point, spectrum);
}

struct ThresholdEntry {
  int invader = 0;
  double beta = 0.0;  ///< SIMPLE(i) is stable against `invader` for β above this
};

/// β̄_j = (k_j ũ − ω_j)/(a_ji w̃_i) for every j ≠ i. ParamError if w̃_i ≤ 0.
std::vector<ThresholdEntry> simple_stability_threshold(const ModelParams& p, int i);

/// Steady-state operator Σ_c D_c v_c + F(v) on flattened states, where D_c is
/// a component's (scaled) diffusion matrix.
struct StationaryOperator {
  ModelParams params;
  Grid grid;
  std::vector<Eigen::SparseMatrix<double>> diffusion;

  /// diag(d)Δ with Neumann conditions.
  static StationaryOperator neumann(const ModelParams& p, const Grid& grid);

  int size() const { return grid.size() * params.n_components(); }
  Eigen::VectorXd residual(const Eigen::VectorXd& v) const;
  Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& v) const;
  /// ∂(residual)/∂β.
  Eigen::VectorXd beta_derivative(const Eigen::VectorXd& v) const;
};

/// Residual level reachable in double precision: 16·ε·‖J‖∞·(1 + ‖v‖∞).
double roundoff_floor(const Eigen::SparseMatrix<double>& jacobian, const Eigen::VectorXd& v);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iterations = 50;
  double min_damping = 1.0 / 1024.0;
  double condition_limit = 1e12;
};

struct NewtonResult {
  SystemState state;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool physical = false;
  double condition_estimate = 0.0;
  /// Accepted because the residual reached the roundoff floor above `tol`.
  bool roundoff_limited = false;
};

/// Damped Newton with a sparse LU Jacobian. Converged when the residual sup
/// norm drops below max(tol, roundoff_floor). SingularJacobian when the
/// factorization fails or the condition estimate passes the limit;
/// NoConvergence when the iteration budget runs out.
NewtonResult newton_solve(const StationaryOperator& op, const Eigen::VectorXd& guess, const NewtonOptions& opt = {});
NewtonResult steady_newton(const ModelParams& p, const SystemState& guess, const NewtonOptions& opt = {});

struct ConstancyReport {
  std::vector<bool> constant;
  bool law_applies = false;  ///< two predators and residual < 1e-8
  bool consistent = true;    ///< all-or-none holds (always true when the law does not apply)
};

/// A component is constant iff max − min < tol·(1 + sup).
ConstancyReport constancy_check(const SystemState& s, double tol,
                                double residual = std::numeric_limits<double>::quiet_NaN());

}  // namespace territory
