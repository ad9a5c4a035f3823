#include "territory/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "territory/error.hpp"

namespace territory {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::UnboundedInBeta: return "UNBOUNDED_IN_BETA";
    case Termination::Reconnected: return "RECONNECTED";
    case Termination::StepLimit: return "STEP_LIMIT";
  }
  return "UNKNOWN";
}

std::vector<BifurcationPoint> bifurcation_points(const ModelParams& p, const Spectrum& spectrum) {
  p.validate();
  if (!p.is_symmetric_pair()) throw ParamError("bifurcation points need two identical predators", "a");
  const double k = p.kpred[0], om = p.omega[0], ms = p.mu_self[0], d = p.d[0], a = p.a(0, 1);
  const double excess = p.lambda * k - p.mu * om;
  if (!(excess > 0)) throw ParamError("hypothesis lambda*k > mu*omega fails", "lambda");
  const std::vector<int> mult = spectrum.multiplicities();
  std::vector<BifurcationPoint> out;
  for (int h = 0; h < spectrum.size(); h += mult[h]) {
    const double g = spectrum.eigenvalues[h];
    if (!(g > 1e-12)) continue;
    const double den = excess - p.mu * d * g;
    if (std::abs(den) < 1e-10)
      throw ResonanceError("lambda*k - mu*omega - mu*d*gamma_" + std::to_string(h) + " vanishes", "mu");
    if (den < 0) break;
    BifurcationPoint bp;
    bp.n = h;
    bp.gamma_n = g;
    bp.beta_n = (d * g * (2.0 * k * k + p.mu * ms) + ms * excess) / (a * den);
    bp.multiplicity = mult[h];
    bp.odd = mult[h] % 2 == 1;
    out.push_back(bp);
  }
  return out;
}

SwitchGuess branch_switch(const ModelParams& p, const Grid& grid, const Field& eigenfunction,
                          const BifurcationPoint& bp, double eps, double delta) {
  if (eigenfunction.size() != grid.size()) throw ShapeError("eigenfunction does not match the grid");
  SwitchGuess g;
  g.params = p.with_beta(bp.beta_n * (1.0 + delta));
  g.guess = SystemState::constant(grid, coexist_point(g.params));
  g.guess.fields[0] += eps * eigenfunction;
  g.guess.fields[1] -= eps * eigenfunction;
  return g;
}

ZeroCount zero_count(const SystemState& s) {
  if (s.grid.dim != 1) throw DimensionError("zero count is defined on 1D grids only");
  if (s.n_components() < 3) throw ShapeError("zero count needs two predators");
  const Field v = s.fields[0] - s.fields[1];
  const double scale = v.cwiseAbs().maxCoeff();
  const double level = std::max(s.fields[0].cwiseAbs().maxCoeff(), s.fields[1].cwiseAbs().maxCoeff());
  ZeroCount z;
  // Roundoff-level V is treated as identically zero.
  if (!(scale > 1e-12 * level)) {
    z.degenerate = true;
    return z;
  }
  int last = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) < 1e-8 * scale) continue;
    const int sign = v[i] > 0 ? 1 : -1;
    if (last != 0 && sign != last) ++z.count;
    last = sign;
  }
  return z;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Linear side condition cv·v + cs·s = rhs closing the extended system.
struct Constraint {
  Eigen::VectorXd cv;
  double cs = 0.0;
  double rhs = 0.0;
};

struct Corrected {
  Eigen::VectorXd v;
  double s = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Newton on (R(v; e^s) = 0, constraint) with the bordered sparse Jacobian.
std::optional<Corrected> correct(StationaryOperator& op, Eigen::VectorXd v, double s, const Constraint& c,
                                 const ContinuationConfig& cfg) {
  const auto m = static_cast<Eigen::Index>(v.size());
  double first = -1.0;
  for (int it = 0; it <= cfg.max_corrector; ++it) {
    const double beta = std::exp(s);
    op.params.beta = beta;
    const Eigen::VectorXd r = op.residual(v);
    const double rn = r.cwiseAbs().maxCoeff();
    const double cr = c.cv.dot(v) + c.cs * s - c.rhs;
    if (!std::isfinite(rn) || !std::isfinite(s)) return std::nullopt;
    if (first < 0) first = rn;
    if (rn > 1e6 * (1.0 + first)) return std::nullopt;
    const SpMat j = op.jacobian(v);
    if (rn < std::max(cfg.tol, roundoff_floor(j, v)) && std::abs(cr) < 1e-9 && it > 0) return Corrected{v, s, rn, it};
    if (it == cfg.max_corrector) break;

    const Eigen::VectorXd g = beta * op.beta_derivative(v);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<size_t>(j.nonZeros() + 2 * m + 1));
    for (int k = 0; k < j.outerSize(); ++k)
      for (SpMat::InnerIterator itj(j, k); itj; ++itj) t.emplace_back(itj.row(), itj.col(), itj.value());
    for (Eigen::Index i = 0; i < m; ++i) {
      if (g[i] != 0.0) t.emplace_back(i, m, g[i]);
      if (c.cv[i] != 0.0) t.emplace_back(m, i, c.cv[i]);
    }
    t.emplace_back(m, m, c.cs);
    SpMat b(m + 1, m + 1);
    b.setFromTriplets(t.begin(), t.end());
    b.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(b);
    if (lu.info() != Eigen::Success) return std::nullopt;
    Eigen::VectorXd rhs(m + 1);
    rhs.head(m) = -r;
    rhs[m] = -cr;
    const Eigen::VectorXd dx = lu.solve(rhs);
    if (!dx.allFinite()) return std::nullopt;
    v += dx.head(m);
    s += dx[m];
  }
  return std::nullopt;
}

double weighted_dot(const Eigen::VectorXd& av, double as, const Eigen::VectorXd& bv, double bs) {
  return av.dot(bv) / static_cast<double>(av.size()) + as * bs;
}

Constraint pin_amplitude(const Grid& grid, const Field& psi, int n_components, double target) {
  const int n = grid.size();
  Constraint c;
  c.cv = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) * n_components);
  c.cv.segment(0, n) = psi * grid.cell_volume();
  c.cv.segment(n, n) = -psi * grid.cell_volume();
  c.rhs = target;
  return c;
}

double projection(const SystemState& s, const Field& psi) {
  return inner_product(s.grid, s.fields[0] - s.fields[1], psi);
}

std::optional<Stability> classify(StationaryOperator& op, const Eigen::VectorXd& v, double beta) {
  op.params.beta = beta;
  const Eigen::MatrixXd j = Eigen::MatrixXd(op.jacobian(v));
  Eigen::EigenSolver<Eigen::MatrixXd> es(j, false);
  if (es.info() != Eigen::Success) return std::nullopt;
  const double growth = es.eigenvalues().real().maxCoeff();
  if (growth < -kStabilityBand) return Stability::StronglyStable;
  if (growth <= kStabilityBand) return Stability::WeaklyStable;
  return Stability::Unstable;
}

BranchPoint make_point(StationaryOperator& op, const Corrected& c, const ContinuationConfig& cfg) {
  BranchPoint bp;
  bp.beta = std::exp(c.s);
  bp.state = SystemState::unflatten(op.grid, c.v);
  bp.residual = c.residual;
  bp.amplitude = (bp.state.fields[0] - bp.state.fields[1]).cwiseAbs().maxCoeff();
  if (op.grid.dim == 1) bp.zero_count = zero_count(bp.state).count;
  if (cfg.compute_stability) bp.stability = classify(op, c.v, bp.beta);
  return bp;
}

}  // namespace

BranchStart start_branch(const ModelParams& p, const Grid& grid, const Field& eigenfunction,
                         const BifurcationPoint& bp, double eps, double delta, const ContinuationConfig& config) {
  if (!bp.odd) throw SpectrumError("branch switching needs an eigenvalue of odd multiplicity");
  if (!(eps != 0.0) || !std::isfinite(eps)) throw ParamError("branch switch amplitude must be nonzero", "eps");
  BranchStart start;
  start.origin = bp;
  start.eigenfunction = eigenfunction;
  start.params = p;
  StationaryOperator op = StationaryOperator::neumann(p, grid);
  for (double scale : {1.0, 2.0}) {
    const SwitchGuess g = branch_switch(p, grid, eigenfunction, bp, scale * eps, delta);
    const double target = projection(g.guess, eigenfunction);
    const Constraint c = pin_amplitude(grid, eigenfunction, p.n_components(), target);
    auto res = correct(op, g.guess.flatten(), std::log(g.params.beta), c, config);
    if (!res) throw NoConvergence("pinned-amplitude corrector failed at the branch switch");
    start.seeds.push_back(make_point(op, *res, config));
  }
  return start;
}

Branch continue_branch(const BranchStart& start, int direction, const ContinuationConfig& cfg) {
  if (start.seeds.size() != 2) throw ParamError("branch start needs two seed points", "seeds");
  Branch br;
  br.params = start.params;
  br.origin = start.origin;
  StationaryOperator op = StationaryOperator::neumann(start.params, start.seeds[0].state.grid);
  const Grid& grid = op.grid;

  const BranchPoint& a = direction >= 0 ? start.seeds[0] : start.seeds[1];
  const BranchPoint& b = direction >= 0 ? start.seeds[1] : start.seeds[0];
  br.points = {a, b};
  Eigen::VectorXd v_prev = a.state.flatten(), v_cur = b.state.flatten();
  double s_prev = std::log(a.beta), s_cur = std::log(b.beta);
  const double sign0 = projection(start.seeds[0].state, start.eigenfunction) >= 0 ? 1.0 : -1.0;

  std::vector<double> exact_targets;
  for (double l : cfg.landmarks)
    if (l > b.beta && l < cfg.beta_max) exact_targets.push_back(l);
  std::sort(exact_targets.begin(), exact_targets.end());
  exact_targets.push_back(cfg.beta_max);
  std::vector<double> targets;
  for (double l : exact_targets) targets.push_back(std::log(l));
  size_t next_target = 0;

  Eigen::VectorXd tv = v_cur - v_prev;
  double ts = s_cur - s_prev;
  double ds = std::sqrt(weighted_dot(tv, ts, tv, ts));
  auto normalize = [&]() {
    const double len = std::sqrt(weighted_dot(tv, ts, tv, ts));
    tv /= len;
    ts /= len;
  };
  normalize();

  auto accept = [&](const Corrected& c) {
    BranchPoint pt = make_point(op, c, cfg);
    const Eigen::VectorXd dv = c.v - v_cur;
    const double dsn = c.s - s_cur;
    if (std::sqrt(weighted_dot(dv, dsn, dv, dsn)) > 1e-14) {
      tv = dv;
      ts = dsn;
      normalize();
    }
    v_prev = std::move(v_cur);
    s_prev = s_cur;
    v_cur = c.v;
    s_cur = c.s;
    br.points.push_back(std::move(pt));
  };

  for (int step = 0; step < cfg.max_steps; ++step) {
    ds = std::min(ds, cfg.max_step);
    if (std::abs(ts) * ds > cfg.max_log_beta_step) ds = cfg.max_log_beta_step / std::abs(ts);
    const Eigen::VectorXd v_pred = v_cur + ds * tv;
    const double s_pred = s_cur + ds * ts;

    // Land exactly on a landmark or the cap when the predictor crosses it.
    if (next_target < targets.size() && s_cur < targets[next_target] && s_pred >= targets[next_target]) {
      const double st = targets[next_target];
      const double frac = (st - s_cur) / (s_pred - s_cur);
      Constraint c{Eigen::VectorXd::Zero(v_cur.size()), 1.0, st};
      auto res = correct(op, v_cur + frac * (v_pred - v_cur), st, c, cfg);
      if (res) {
        accept(*res);
        br.points.back().beta = exact_targets[next_target];
        if (++next_target == targets.size()) {
          br.termination = Termination::UnboundedInBeta;
          return br;
        }
        continue;
      }
      ds *= 0.5;
      if (ds < cfg.min_step) throw SingularJacobian("continuation step halving exhausted near a landmark");
      continue;
    }

    Constraint c;
    c.cv = tv / static_cast<double>(tv.size());
    c.cs = ts;
    c.rhs = c.cv.dot(v_pred) + c.cs * s_pred;
    auto res = correct(op, v_pred, s_pred, c, cfg);
    if (!res) {
      ds *= 0.5;
      if (ds < cfg.min_step) throw SingularJacobian("continuation step halving exhausted");
      continue;
    }
    accept(*res);
    const BranchPoint& pt = br.points.back();

    const ModelParams pb = start.params.with_beta(pt.beta);
    const StatePoint sym = coexist_point(pb);
    double dist2 = 0.0;
    for (int comp = 0; comp < pt.state.n_components(); ++comp) {
      const double level = comp < pb.n_predators ? sym.w[comp] : sym.u;
      const Field diff = pt.state.fields[comp].array() - level;
      dist2 += inner_product(grid, diff, diff);
    }
    const double proj = projection(pt.state, start.eigenfunction);
    if (std::sqrt(dist2) < cfg.reconnect_tol || proj * sign0 < 0) {
      br.termination = Termination::Reconnected;
      for (auto it = br.points.rbegin(); it != br.points.rend(); ++it)
        if (it->amplitude > 1e-6 && grid.dim == 1) {
          br.reconnected_mode = it->zero_count;
          break;
        }
      return br;
    }

    if (res->iterations <= 3)
      ds *= 1.5;
    else if (res->iterations >= 6)
      ds *= 0.6;
  }
  br.termination = Termination::StepLimit;
  return br;
}

BranchPoint solve_on_branch(const Branch& branch, double beta, const ContinuationConfig& config) {
  if (branch.points.empty()) throw InsufficientData("branch has no points");
  const double s = std::log(beta);
  // Bracketing pair in log β, else the nearest point.
  const BranchPoint* lo = nullptr;
  const BranchPoint* hi = nullptr;
  for (size_t i = 0; i + 1 < branch.points.size(); ++i) {
    const double a = std::log(branch.points[i].beta), b = std::log(branch.points[i + 1].beta);
    if ((a - s) * (b - s) <= 0) {
      lo = &branch.points[i];
      hi = &branch.points[i + 1];
    }
  }
  Eigen::VectorXd guess;
  if (lo) {
    const double a = std::log(lo->beta), b = std::log(hi->beta);
    const double f = b != a ? (s - a) / (b - a) : 0.0;
    guess = (1.0 - f) * lo->state.flatten() + f * hi->state.flatten();
  } else {
    auto near = std::min_element(branch.points.begin(), branch.points.end(), [s](const auto& x, const auto& y) {
      return std::abs(std::log(x.beta) - s) < std::abs(std::log(y.beta) - s);
    });
    guess = near->state.flatten();
  }
  StationaryOperator op = StationaryOperator::neumann(branch.params, branch.points.front().state.grid);
  Constraint c{Eigen::VectorXd::Zero(guess.size()), 1.0, s};
  auto res = correct(op, guess, s, c, config);
  if (!res) throw NoConvergence("fixed-beta correction on the branch failed at beta = " + std::to_string(beta));
  return make_point(op, *res, config);
}

std::vector<ConstantSolution> segment_family(const ModelParams& p) {
  if (p.beta != 0.0) throw ParamError("segment family exists at beta = 0 only", "beta");
  std::vector<ConstantSolution> out;
  for (double s : {0.0, 0.25, 0.5, 0.75, 1.0})
    out.push_back({ConstantKind::FamilySegment, -1, s, segment_point(p, s), 0.0});
  return out;
}

}  // namespace territory
