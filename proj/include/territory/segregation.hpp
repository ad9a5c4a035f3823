#pragma once

#include <string>
#include <vector>

#include "territory/continuation.hpp"
#include "territory/grid.hpp"
#include "territory/model.hpp"
#include "territory/state.hpp"

namespace territory {

/// ∫ w_1 w_2.
double overlap(const SystemState& s);

enum class TailVerdict { Segregating, Collapsing, Undetermined };

std::string to_string(TailVerdict v);

struct FreeBoundary {
  std::vector<int> nodes;          ///< Σw_i < threshold·max Σw_i
  double measure = 0.0;            ///< node count × cell volume
  std::vector<double> interfaces;  ///< 1D: interpolated sign changes of w_1 − w_2
};

/// `threshold` is relative to max Σw_i.
FreeBoundary free_boundary(const SystemState& s, double threshold = 1e-3);

struct SegregationReport {
  std::vector<double> betas;  ///< ascending
  std::vector<double> overlaps;
  std::vector<double> sup_ratio;     ///< ‖w_1‖∞/‖w_2‖∞
  std::vector<double> amplitude;     ///< max_i ‖w_i‖∞
  std::vector<double> lip_estimate;  ///< max discrete |∇w_i|
  std::vector<double> collapse_beta_w;   ///< β·max_i ‖w_i‖∞
  std::vector<double> collapse_u_gap;    ///< sup|u − λ/μ| (NaN when μ = 0)
  std::vector<double> energy_slack;      ///< ∫(ku − ω)w_1² − β a_12 ∫w_1² w_2
  std::vector<bool> u_range_ok;
  std::vector<FreeBoundary> free_boundaries;
  TailVerdict verdict = TailVerdict::Undetermined;
  double tail_overlap_ratio = 0.0;    ///< overlap at the largest β / overlap at the first β ≥ 2β_first
  double tail_amplitude_ratio = 0.0;  ///< min tail amplitude / first amplitude
  double final_amplitude_ratio = 0.0; ///< last amplitude / first amplitude
};

/// Assembles the report from states sorted by β. InsufficientData below 5 points.
/// COLLAPSING when the last amplitude is < 0.05 of the first; SEGREGATING when
/// the tail (β ≥ 2β_first) keeps amplitude > 0.1 of the first and the overlap
/// ratio is < 0.2.
SegregationReport beta_sweep(const ModelParams& p, const std::vector<double>& betas,
                             const std::vector<SystemState>& states, double fb_threshold = 1e-3);
SegregationReport beta_sweep(const Branch& branch, double fb_threshold = 1e-3);

struct Comparability {
  double m = 0.0;  ///< max over the tail of max(ratio, 1/ratio)
  double beta_at_max = 0.0;
};

Comparability comparability(const SegregationReport& report);

struct LipschitzProfile {
  std::vector<double> betas;
  std::vector<double> max_gradient;
  double tail_slope = 0.0;  ///< least-squares slope of log gradient vs log β over the tail
  bool bounded = true;      ///< tail_slope ≤ 0.05
  double variation = 1.0;   ///< max/min gradient over the tail
};

LipschitzProfile lipschitz_profile(const SegregationReport& report);

/// max/min of the gradient estimate over points with β in [lo, hi].
/// InsufficientData when fewer than 2 points fall in the window.
double gradient_variation(const SegregationReport& report, double lo, double hi);

struct CollapseCalibration {
  double beta_w = 0.0;  ///< β·w on the symmetric family
  double limit = 0.0;   ///< (λk − μω)/μ
  double gap = 0.0;     ///< |β·w − limit|
  double bound = 0.0;   ///< (λk − μω)·2k²/(μ²β)
};

/// Symmetric coexistence family at β (μ_s = 0, a = 1).
CollapseCalibration collapse_calibration(const ModelParams& p, double beta);

}  // namespace territory
