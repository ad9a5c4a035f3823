#pragma once

#include <string>
#include <vector>

#include "territory/equilibria.hpp"
#include "territory/evolve.hpp"
#include "territory/grid.hpp"
#include "territory/model.hpp"
#include "territory/state.hpp"

namespace territory {

struct PackBoundReport {
  double gamma_bar = 0.0;        ///< max_i (λk_i − μω_i)/(d_i μ)
  int n_bar_exact = 0;           ///< eigenvalues strictly below γ̄, zero mode included
  double n_bar_weyl = 0.0;       ///< ω_n/(2π)^n·|Ω|·γ̄^{n/2}
  double unit_ball_volume = 0.0;
  double measure = 0.0;
  int dim = 1;
};

/// Count of Neumann eigenvalues below γ̄ on `grid`'s domain. ParamError when
/// μ = 0 or no predator satisfies λk_i > μω_i; SpectrumError when the
/// spectrum stops before γ̄.
PackBoundReport pack_bound(const ModelParams& p, const Spectrum& spectrum, const Grid& grid);

/// Weyl estimate ω_n/(2π)^n·|Ω|·γ^{n/2}.
double weyl_count(int dim, double measure, double gamma);

/// P = ∫ Σ_i w_i.
double population(const SystemState& s);

struct IdentityResiduals {
  double population = 0.0;  ///< P
  double first = 0.0;       ///< ∫Σw − (λ/k)|Ω| − (D/k)∫|∇log u|²
  double second = 0.0;      ///< ∫u − (ω/k)|Ω| − (β/λ)Σ_{i≠j}a_ij∫w_iw_j − (ωD/(kλ))∫|∇log u|²
  double log_gradient = 0.0;  ///< ∫|∇log u|²
};

/// Integral identities of μ = 0 stationary states with identical predators
/// and μ_i = 0. ParamError otherwise; DomainError when min u ≤ 0.
IdentityResiduals verify_identities_mu0(const ModelParams& p, const SystemState& s);

/// ∫|∇ f|² with central differences inside and one-sided second-order
/// differences at the boundary nodes.
double gradient_energy(const Grid& grid, const Field& f);

/// Stationary (w, u) on (0, a) with w(0) = 0 and Neumann conditions elsewhere,
/// coefficients of predator 0. `guess` has fields (w, u).
NewtonResult solve_half_system_1d(const ModelParams& p, double a, const SystemState& guess,
                                  const NewtonOptions& opt = {});

StationaryOperator half_system_operator(const ModelParams& p, const Grid& half_grid);

/// Even reflection of a half solution on (0, a) to a two-predator state on a
/// grid of 2n cells: the interface at the centre, predator `left` on the left.
SystemState reflect_half_solution(const SystemState& half, double x0, int left = 0);

struct OptimOptions {
  double t_end = 400.0;
  double dt_max = 0.05;
  double steady_tol = 1e-6;
  /// Newton polish is attempted on the seed and after every stretch of this
  /// length; it is kept when it converges to a physical state with the same
  /// support.
  double polish_every = 10.0;
  double zero_threshold = 1e-6;
  /// Cells with larger β evolve at this β and are carried to their own β by
  /// Newton steps in log β; explicit reaction is stiff at large β.
  double evolve_beta_cap = 100.0;
  double min_log_beta_step = 1e-3;
  int threads = 0;  ///< 0: hardware concurrency
  NewtonOptions newton{1e-10, 30, 1.0 / 1024.0, 1e14};
};

struct OptimCandidate {
  int n = 0;  ///< predators seeded
  double beta = 0.0;
  SystemState state;
  double population = 0.0;
  bool converged = false;
  bool physical = false;
  int positive_count = 0;  ///< components with sup ≥ zero_threshold
  double residual = 0.0;
  std::string note;
};

struct OptimReport {
  std::vector<OptimCandidate> candidates;
  int best = -1;  ///< index into candidates
  std::vector<IdentityResiduals> identity_residuals;  ///< μ = 0 runs only, per candidate
};

/// For every N ≤ n_max and β in beta_grid: N equal blocks at the simple
/// amplitude, evolved toward steady state, Newton-polished, scored by P.
/// A failed β ramp leaves the cell non-converged.
OptimReport optimize_packs(const ModelParams& params_template, const Grid& grid, int n_max,
                           const std::vector<double>& beta_grid, const OptimOptions& opt = {});

}  // namespace territory
