#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "territory/grid.hpp"

namespace territory {

/// Coefficients of the N-predator / one-prey competition system
///
///   w_i,t - d_i Δw_i = (-ω_i + k_i u - μ_i w_i - β Σ_{j≠i} a_ij w_j) w_i
///   u_t   - D Δu     = (λ - μ u - Σ_i k_i w_i) u
///
/// with homogeneous Neumann conditions. β = ∞ is never stored.
struct ModelParams {
  double lambda = 1.0;
  double mu = 0.0;
  int n_predators = 0;
  Eigen::VectorXd omega;    ///< mortality ω_i
  Eigen::VectorXd kpred;    ///< predation rate k_i
  Eigen::VectorXd mu_self;  ///< self-saturation μ_i, may be 0
  Eigen::VectorXd d;        ///< predator diffusivities d_i
  double dprey = 1.0;       ///< prey diffusivity D
  double beta = 0.0;
  Eigen::MatrixXd a;        ///< competition matrix, zero diagonal
  bool symmetric = false;   ///< requires a == aᵀ exactly

  /// Throws ParamError naming the first offending field.
  void validate() const;

  int n_components() const { return n_predators + 1; }

  /// All predators share ω, k, μ_i and d.
  bool identical_predators() const;

  /// Two identical predators with a_12 == a_21: the setting of the symmetric
  /// coexistence family and its bifurcations.
  bool is_symmetric_pair() const;

  ModelParams with_beta(double b) const {
    ModelParams p = *this;
    p.beta = b;
    return p;
  }

  /// Two identical predators, a_12 = a_21 = 1.
  static ModelParams symmetric_pair(double lambda, double mu, double omega, double k, double beta,
                                    double d = 1.0, double dprey = 1.0, double mu_self = 0.0);

  /// N identical predators with a_ij = 1 (i ≠ j).
  static ModelParams identical(int n, double lambda, double mu, double omega, double k,
                               double beta, double d = 1.0, double dprey = 1.0,
                               double mu_self = 0.0);
};

/// Pointwise densities (w_1, …, w_N, u).
struct StatePoint {
  Eigen::VectorXd w;
  double u = 0.0;

  /// Packed as [w_1, …, w_N, u].
  Eigen::VectorXd packed() const;
  static StatePoint unpack(const Eigen::Ref<const Eigen::VectorXd>& s);
};

/// F(s). Prey component last.
StatePoint reaction(const ModelParams& p, const StatePoint& s);

/// Jacobian of F, (N+1)×(N+1), prey last.
Eigen::MatrixXd reaction_jacobian(const ModelParams& p, const StatePoint& s);

// Packed-vector kernels used by the grid solvers. `s` and `out` have N+1 entries.
void reaction_packed(const ModelParams& p, std::span<const double> s, std::span<double> out);
void jacobian_packed(const ModelParams& p, std::span<const double> s, Eigen::Ref<Eigen::MatrixXd> out);
/// ∂F/∂β at s.
void beta_derivative_packed(const ModelParams& p, std::span<const double> s, std::span<double> out);

struct HypothesisReport {
  std::vector<bool> h_holds;                ///< λk_i > μω_i
  std::vector<double> reduced_rate;         ///< (λk_i − μω_i)/μ
  std::vector<double> nonresonance_margin;  ///< distance to nearest Neumann eigenvalue
  std::vector<int> nearest_mode;
  bool resonant = false;
  std::vector<std::string> warnings;
};

/// Resonance is flagged when |rate − γ_n| ≤ 1e-8·max(1, γ_n).
HypothesisReport check_hypotheses(const ModelParams& p, const Spectrum& spectrum);

/// Change of variables to unit diffusivities for two identical predators:
/// λ' = λ/D, μ' = μd/D², k' = k/D, ω' = ω/d, β' = β/d, u' = (D/d)u.
/// `expand_parameters` is the inverse (λ = λ'D, μ = μ'D²/d, …).
ModelParams reduce_parameters(const ModelParams& p);
ModelParams expand_parameters(const ModelParams& reduced, double d, double dprey);

/// Sampled supremum of ‖J‖₂ over an axis-aligned box.
struct SupNormResult {
  double value = 0.0;
  Eigen::VectorXd argmax;
};

/// Nested uniform sampling: `coarse` points per axis (reduced when the box has
/// many dimensions), then `refinements` rounds of ×4 refinement around the argmax.
SupNormResult sup_spectral_norm(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jac,
                                int coarse = 50, int refinements = 2);

/// Spectral norm via the symmetric eigen-solve of JᵀJ.
double spectral_norm(const Eigen::MatrixXd& j);

inline constexpr double kLipschitzSafety = 1.05;

/// Lipschitz constant of F on the invariant box of the a priori bounds,
/// inflated by kLipschitzSafety. Requires μ > 0 and every μ_i > 0.
double lipschitz_bound(const ModelParams& p);

/// Upper corner of the invariant box: (max(0,(λk_i−μω_i)/(μμ_i)), λ/μ).
Eigen::VectorXd invariant_box(const ModelParams& p);

}  // namespace territory
