#include "territory/segregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "territory/error.hpp"

namespace territory {

std::string to_string(TailVerdict v) {
  switch (v) {
    case TailVerdict::Segregating: return "SEGREGATING";
    case TailVerdict::Collapsing: return "COLLAPSING";
    case TailVerdict::Undetermined: return "UNDETERMINED";
  }
  return "UNKNOWN";
}

double overlap(const SystemState& s) {
  if (s.n_components() < 3) throw ShapeError("overlap needs two predators");
  return inner_product(s.grid, s.fields[0], s.fields[1]);
}

FreeBoundary free_boundary(const SystemState& s, double threshold) {
  if (s.n_components() < 3) throw ShapeError("free boundary needs two predators");
  Field total = Field::Zero(s.grid.size());
  for (int c = 0; c + 1 < s.n_components(); ++c) total += s.fields[c];
  const double cut = threshold * total.maxCoeff();
  FreeBoundary fb;
  for (int i = 0; i < s.grid.size(); ++i)
    if (total[i] < cut) fb.nodes.push_back(i);
  fb.measure = static_cast<double>(fb.nodes.size()) * s.grid.cell_volume();
  if (s.grid.dim == 1) {
    const Field v = s.fields[0] - s.fields[1];
    for (int i = 0; i + 1 < s.grid.size(); ++i) {
      if (v[i] == 0.0) {
        fb.interfaces.push_back(s.grid.coord(i));
      } else if (v[i] * v[i + 1] < 0) {
        const double x0 = s.grid.coord(i), x1 = s.grid.coord(i + 1);
        fb.interfaces.push_back(x0 + v[i] / (v[i] - v[i + 1]) * (x1 - x0));
      }
    }
  }
  return fb;
}

SegregationReport beta_sweep(const ModelParams& p, const std::vector<double>& betas,
                             const std::vector<SystemState>& states, double fb_threshold) {
  if (betas.size() != states.size()) throw ShapeError("betas and states differ in length");
  if (betas.size() < 5) throw InsufficientData("beta sweep needs at least 5 points, have " + std::to_string(betas.size()));
  std::vector<size_t> order(betas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return betas[a] < betas[b]; });

  SegregationReport r;
  const double k = p.kpred[0], om = p.omega[0], a12 = p.a(0, 1);
  for (size_t idx : order) {
    const double beta = betas[idx];
    const SystemState& s = states[idx];
    check_state(p, s);
    const Field& w1 = s.fields[0];
    const Field& w2 = s.fields[1];
    const Field& u = s.prey();
    r.betas.push_back(beta);
    r.overlaps.push_back(overlap(s));
    const double s1 = w1.cwiseAbs().maxCoeff(), s2 = w2.cwiseAbs().maxCoeff();
    r.sup_ratio.push_back(s1 / s2);
    double amp = 0.0, lip = 0.0;
    for (int c = 0; c < p.n_predators; ++c) {
      amp = std::max(amp, s.fields[c].cwiseAbs().maxCoeff());
      lip = std::max(lip, max_gradient(s.grid, s.fields[c]));
    }
    r.amplitude.push_back(amp);
    r.lip_estimate.push_back(lip);
    r.collapse_beta_w.push_back(beta * amp);
    r.collapse_u_gap.push_back(p.mu > 0 ? (u.array() - p.lambda / p.mu).abs().maxCoeff()
                                         : std::numeric_limits<double>::quiet_NaN());
    const Field w1sq = w1.cwiseProduct(w1);
    const Field gain = (k * u.array() - om).matrix();
    r.energy_slack.push_back(inner_product(s.grid, gain, w1sq) - beta * a12 * inner_product(s.grid, w1sq, w2));
    bool ok = u.minCoeff() >= -1e-8;
    if (p.mu > 0) {
      ok = ok && u.maxCoeff() <= p.lambda / p.mu + 1e-8;
      const double cap = (p.lambda + om) * p.lambda / (p.mu * om) + 1e-8;
      ok = ok && (u + w1 + w2).maxCoeff() <= cap;
    }
    r.u_range_ok.push_back(ok);
    r.free_boundaries.push_back(free_boundary(s, fb_threshold));
  }

  const double first_amp = r.amplitude.front();
  r.final_amplitude_ratio = r.amplitude.back() / first_amp;
  size_t tail = r.betas.size();
  for (size_t i = 0; i < r.betas.size(); ++i)
    if (r.betas[i] >= 2.0 * r.betas.front()) {
      tail = i;
      break;
    }
  if (tail < r.betas.size()) {
    r.tail_overlap_ratio = r.overlaps.back() / r.overlaps[tail];
    r.tail_amplitude_ratio = *std::min_element(r.amplitude.begin() + static_cast<long>(tail), r.amplitude.end()) / first_amp;
  } else {
    r.tail_overlap_ratio = std::numeric_limits<double>::quiet_NaN();
    r.tail_amplitude_ratio = std::numeric_limits<double>::quiet_NaN();
  }
  if (r.final_amplitude_ratio < 0.05)
    r.verdict = TailVerdict::Collapsing;
  else if (r.tail_amplitude_ratio > 0.1 && r.tail_overlap_ratio < 0.2)
    r.verdict = TailVerdict::Segregating;
  return r;
}

SegregationReport beta_sweep(const Branch& branch, double fb_threshold) {
  std::vector<double> betas;
  std::vector<SystemState> states;
  for (const auto& pt : branch.points) {
    betas.push_back(pt.beta);
    states.push_back(pt.state);
  }
  return beta_sweep(branch.params, betas, states, fb_threshold);
}

Comparability comparability(const SegregationReport& report) {
  Comparability c;
  for (size_t i = 0; i < report.betas.size(); ++i) {
    if (report.betas[i] < 2.0 * report.betas.front()) continue;
    const double r = report.sup_ratio[i];
    const double m = std::max(r, 1.0 / r);
    if (m > c.m) {
      c.m = m;
      c.beta_at_max = report.betas[i];
    }
  }
  return c;
}

LipschitzProfile lipschitz_profile(const SegregationReport& report) {
  LipschitzProfile lp;
  lp.betas = report.betas;
  lp.max_gradient = report.lip_estimate;
  std::vector<double> x, y;
  for (size_t i = 0; i < report.betas.size(); ++i)
    if (report.betas[i] >= 2.0 * report.betas.front() && report.lip_estimate[i] > 0) {
      x.push_back(std::log(report.betas[i]));
      y.push_back(std::log(report.lip_estimate[i]));
    }
  if (x.size() >= 2) {
    const double xm = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - xm) * (y[i] - ym);
      sxx += (x[i] - xm) * (x[i] - xm);
    }
    lp.tail_slope = sxx > 0 ? sxy / sxx : 0.0;
  }
  lp.bounded = lp.tail_slope <= 0.05;
  if (!y.empty()) lp.variation = std::exp(*std::max_element(y.begin(), y.end()) - *std::min_element(y.begin(), y.end()));
  return lp;
}

double gradient_variation(const SegregationReport& report, double lo, double hi) {
  double mx = 0.0, mn = std::numeric_limits<double>::infinity();
  int count = 0;
  for (size_t i = 0; i < report.betas.size(); ++i)
    if (report.betas[i] >= lo && report.betas[i] <= hi) {
      mx = std::max(mx, report.lip_estimate[i]);
      mn = std::min(mn, report.lip_estimate[i]);
      ++count;
    }
  if (count < 2) throw InsufficientData("gradient variation needs two points in the beta window");
  return mx / mn;
}

CollapseCalibration collapse_calibration(const ModelParams& p, double beta) {
  if (!(p.mu > 0)) throw ParamError("collapse limit needs mu > 0", "mu");
  const ModelParams q = p.with_beta(beta);
  const double k = q.kpred[0];
  const double excess = q.lambda * k - q.mu * q.omega[0];
  CollapseCalibration c;
  c.beta_w = beta * coexist_point(q).w[0];
  c.limit = excess / q.mu;
  c.gap = std::abs(c.beta_w - c.limit);
  c.bound = excess * 2.0 * k * k / (q.mu * q.mu * beta);
  return c;
}

}  // namespace territory
