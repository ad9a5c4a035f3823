#pragma once

#include <limits>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "territory/grid.hpp"
#include "territory/model.hpp"
#include "territory/state.hpp"

namespace territory {

struct StepOptions {
  bool reaction_enabled = true;  ///< test hook: pure diffusion when false
  int max_halvings = 20;
};

struct StepResult {
  SystemState state;
  double dt_used = 0.0;
  int rejections = 0;
};

/// Factorizations of (I − dt·d·Δ) keyed by (dt, d), reused across steps.
class ImplicitDiffusion {
 public:
  explicit ImplicitDiffusion(const Grid& grid);
  Field solve(const Field& rhs, double dt, double diffusivity);

 private:
  Grid grid_;
  Eigen::SparseMatrix<double> lap_;
  std::map<std::pair<double, double>, std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>> cache_;
};

/// One IMEX Euler step: explicit reaction, implicit diffusion. A step that
/// leaves any value below −1e-8·(1 + sup) is retried at dt/2; StepError after
/// `max_halvings` rejections.
StepResult step(const ModelParams& p, const SystemState& s, double dt, const StepOptions& opt = {});
StepResult step(const ModelParams& p, const SystemState& s, double dt, ImplicitDiffusion& solver,
                const StepOptions& opt = {});

struct Monitors {
  bool enabled = true;
  double epsilon = 1e-2;
  /// Fixed T_ε; negative means detect it as the first time every monitor holds
  /// for `hold_samples` consecutive samples.
  double transient = -1.0;
  int hold_samples = 10;
};

struct RunOptions {
  double t_end = 1.0;
  double sample_every = 0.1;
  double dt0 = 0.0;     ///< 0: 0.25·h²/max(d_i, D)
  double dt_max = 1e-2;
  double growth = 1.5;  ///< dt growth after an accepted step
  /// Stop early once ‖(v(t) − v(t − dt))/dt‖∞ < steady_tol at a sample (0 disables).
  double steady_tol = 0.0;
  int snapshot_every = 0;  ///< keep a full state every k samples (0 disables)
  Monitors monitors;
  StepOptions step;
};

struct TrajectorySample {
  double t = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd sup;
  Eigen::VectorXd grad_l2;
};

struct BoundViolation {
  double t = 0.0;
  int component = 0;
  double value = 0.0;
  double bound = 0.0;
};

struct EvolveReport {
  std::vector<TrajectorySample> samples;
  std::vector<BoundViolation> bound_violations;
  double fitted_decay_rate = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double sigma_prime = std::numeric_limits<double>::quiet_NaN();
  /// Detected or configured T_ε; NaN when monitors never settled.
  double transient_time = std::numeric_limits<double>::quiet_NaN();
  bool steady_reached = false;
  int steps = 0;
  int rejections = 0;
  SystemState final_state;
  std::vector<SystemState> snapshots;
};

/// Asymptotic bounds per component, +∞ where the bound is unavailable
/// (μ = 0 or μ_i = 0).
Eigen::VectorXd asymptotic_bounds(const ModelParams& p);

EvolveReport run(const ModelParams& p, const SystemState& s0, const RunOptions& opt);

struct SigmaCriterion {
  double sigma = 0.0;
  double d = 0.0;  ///< min(d_i, D)
  double gamma1 = 0.0;
  double lipschitz = 0.0;
};

/// σ = d·γ₁ − L with L from lipschitz_bound.
SigmaCriterion sigma_criterion(const ModelParams& p, const Spectrum& spectrum);
/// Same with a caller-supplied L.
SigmaCriterion sigma_criterion(const ModelParams& p, const Spectrum& spectrum, double lipschitz);

struct DecayFit {
  double rate = 0.0;  ///< −∞ when every tail value sits below the 1e-13 floor
  int used = 0;
};

/// Least-squares slope of log(Σ_c ‖∇v_c‖) against t over the trailing half of
/// the samples. FitError with fewer than 10 tail samples or negative/NaN data.
DecayFit fit_decay_rate(const std::vector<TrajectorySample>& samples);

struct HomogenizationVerdict {
  bool pass = false;
  double fitted_rate = 0.0;
  double threshold = 0.0;  ///< −0.9·σ′
};

HomogenizationVerdict homogenization_check(const EvolveReport& report, double sigma_prime);

struct OdeSample {
  double t = 0.0;
  Eigen::VectorXd state;  ///< packed [w̄_1, …, w̄_N, ū]
};

/// Classic RK4 for the spatially homogeneous system v' = F(v).
std::vector<OdeSample> ode_trajectory(const ModelParams& p, const Eigen::VectorXd& means0, double t_end,
                                      double dt = 1e-3, double sample_every = 0.0);

}  // namespace territory
