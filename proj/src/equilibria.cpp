#include "territory/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "territory/error.hpp"

namespace territory {

std::string to_string(ConstantKind k) {
  switch (k) {
    case ConstantKind::Zero: return "ZERO";
    case ConstantKind::PreyOnly: return "PREY_ONLY";
    case ConstantKind::Simple: return "SIMPLE";
    case ConstantKind::CoexistSymmetric: return "COEXIST_SYMMETRIC";
    case ConstantKind::FamilySegment: return "FAMILY_SEGMENT";
  }
  return "UNKNOWN";
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::StronglyStable: return "STRONGLY_STABLE";
    case Stability::WeaklyStable: return "WEAKLY_STABLE";
    case Stability::Unstable: return "UNSTABLE";
  }
  return "UNKNOWN";
}

std::string ConstantSolution::label() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind == ConstantKind::Simple) os << "(" << predator + 1 << ")";
  if (kind == ConstantKind::FamilySegment) os << "(" << s << ")";
  return os.str();
}

StatePoint simple_point(const ModelParams& p, int i) {
  StatePoint s;
  s.w = Eigen::VectorXd::Zero(p.n_predators);
  const double w = (p.lambda * p.kpred[i] - p.mu * p.omega[i]) / (p.kpred[i] * p.kpred[i] + p.mu * p.mu_self[i]);
  s.w[i] = w;
  s.u = (p.omega[i] + p.mu_self[i] * w) / p.kpred[i];
  return s;
}

StatePoint coexist_point(const ModelParams& p) {
  if (!p.is_symmetric_pair()) throw ParamError("symmetric coexistence needs two identical predators", "a");
  const double k = p.kpred[0], om = p.omega[0];
  const double comp = p.mu_self[0] + p.beta * p.a(0, 1);
  const double den = 2.0 * k * k + p.mu * comp;
  StatePoint s;
  s.w = Eigen::VectorXd::Constant(2, (p.lambda * k - p.mu * om) / den);
  s.u = (p.lambda * comp + 2.0 * k * om) / den;
  return s;
}

StatePoint segment_point(const ModelParams& p, double s) {
  if (!p.is_symmetric_pair()) throw ParamError("segment family needs two identical predators", "a");
  if (p.mu_self[0] != 0.0) throw ParamError("segment family needs mu_self = 0", "mu_self");
  const double k = p.kpred[0];
  const double total = (p.lambda * k - p.mu * p.omega[0]) / (k * k);
  StatePoint pt;
  pt.w = Eigen::VectorXd(2);
  pt.w << total * s, total * (1.0 - s);
  pt.u = p.omega[0] / k;
  return pt;
}

std::vector<ConstantSolution> constant_catalog(const ModelParams& p) {
  p.validate();
  std::vector<ConstantSolution> out;
  const Eigen::VectorXd zero_w = Eigen::VectorXd::Zero(p.n_predators);
  out.push_back({ConstantKind::Zero, -1, NAN, {zero_w, 0.0}, p.beta});
  if (p.mu > 0) out.push_back({ConstantKind::PreyOnly, -1, NAN, {zero_w, p.lambda / p.mu}, p.beta});
  for (int i = 0; i < p.n_predators; ++i) {
    StatePoint s = simple_point(p, i);
    if (s.w[i] > 0) out.push_back({ConstantKind::Simple, i, NAN, s, p.beta});
  }
  if (p.symmetric && p.is_symmetric_pair()) {
    StatePoint s = coexist_point(p);
    if (s.w[0] > 0) out.push_back({ConstantKind::CoexistSymmetric, -1, NAN, s, p.beta});
    if (p.beta == 0.0 && p.mu_self[0] == 0.0 && p.lambda * p.kpred[0] > p.mu * p.omega[0])
      for (double t : {0.0, 0.25, 0.5, 0.75, 1.0})
        out.push_back({ConstantKind::FamilySegment, -1, t, segment_point(p, t), p.beta});
  }
  return out;
}

std::vector<std::complex<double>> mode_eigenvalues(const ModelParams& p, const StatePoint& point, double gamma) {
  const Eigen::MatrixXd a = reaction_jacobian(p, point);
  Eigen::VectorXd diff(p.n_components());
  diff.head(p.n_predators) = p.d;
  diff[p.n_predators] = p.dprey;
  const Eigen::MatrixXd m = gamma * Eigen::MatrixXd(diff.asDiagonal()) - a;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

StabilityVerdict constant_stability(const ModelParams& p, const StatePoint& point, const Spectrum& spectrum) {
  const Eigen::MatrixXd a = reaction_jacobian(p, point);
  const double bound = 2.0 * spectral_norm(a);
  const double dmin = std::min(p.d.minCoeff(), p.dprey);
  int h_max = -1;
  for (int h = 0; h < spectrum.size(); ++h)
    if (spectrum.eigenvalues[h] * dmin > bound) {
      h_max = h;
      break;
    }
  if (h_max < 0)
    throw SpectrumError("spectrum has " + std::to_string(spectrum.size()) +
                        " modes; stability needs gamma_h*min(d) > " + std::to_string(bound));
  StabilityVerdict v;
  v.min_real_part = std::numeric_limits<double>::infinity();
  for (int h = 0; h <= h_max; ++h) {
    // Repeated eigenvalues give identical matrices.
    if (h > 0 && spectrum.eigenvalues[h] == spectrum.eigenvalues[h - 1]) continue;
    for (const auto& z : mode_eigenvalues(p, point, spectrum.eigenvalues[h]))
      if (z.real() < v.min_real_part) {
        v.min_real_part = z.real();
        v.critical_eigenvalue = z;
        v.critical_mode = h;
      }
  }
  v.modes_checked = h_max + 1;
  if (v.min_real_part > kStabilityBand)
    v.classification = Stability::StronglyStable;
  else if (v.min_real_part >= -kStabilityBand)
    v.classification = Stability::WeaklyStable;
  else
    v.classification = Stability::Unstable;
  return v;
}

std::vector<ThresholdEntry> simple_stability_threshold(const ModelParams& p, int i) {
  p.validate();
  if (i < 0 || i >= p.n_predators) throw ParamError("predator index out of range", "n_predators");
  const StatePoint s = simple_point(p, i);
  if (!(s.w[i] > 0)) throw ParamError("simple solution amplitude is not positive", "lambda");
  std::vector<ThresholdEntry> out;
  for (int j = 0; j < p.n_predators; ++j)
    if (j != i) out.push_back({j, (p.kpred[j] * s.u - p.omega[j]) / (p.a(j, i) * s.w[i])});
  return out;
}

StationaryOperator StationaryOperator::neumann(const ModelParams& p, const Grid& grid) {
  StationaryOperator op{p, grid, {}};
  const Eigen::SparseMatrix<double> lap = laplacian_matrix(grid);
  for (int c = 0; c < p.n_components(); ++c) {
    const double diff = c < p.n_predators ? p.d[c] : p.dprey;
    op.diffusion.push_back(diff * lap);
  }
  return op;
}

Eigen::VectorXd StationaryOperator::residual(const Eigen::VectorXd& v) const {
  const int n = grid.size();
  const int m = params.n_components();
  Eigen::VectorXd r(v.size());
  for (int c = 0; c < m; ++c) r.segment(c * n, n) = diffusion[c] * v.segment(c * n, n);
  Eigen::VectorXd in(m), out(m);
  for (int node = 0; node < n; ++node) {
    for (int c = 0; c < m; ++c) in[c] = v[c * n + node];
    reaction_packed(params, {in.data(), static_cast<size_t>(m)}, {out.data(), static_cast<size_t>(m)});
    for (int c = 0; c < m; ++c) r[c * n + node] += out[c];
  }
  return r;
}

Eigen::SparseMatrix<double> StationaryOperator::jacobian(const Eigen::VectorXd& v) const {
  const int n = grid.size();
  const int m = params.n_components();
  std::vector<Eigen::Triplet<double>> t;
  for (int c = 0; c < m; ++c)
    for (int k = 0; k < diffusion[c].outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(diffusion[c], k); it; ++it)
        t.emplace_back(c * n + it.row(), c * n + it.col(), it.value());
  Eigen::VectorXd in(m);
  Eigen::MatrixXd j(m, m);
  for (int node = 0; node < n; ++node) {
    for (int c = 0; c < m; ++c) in[c] = v[c * n + node];
    jacobian_packed(params, {in.data(), static_cast<size_t>(m)}, j);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c)
        if (j(r, c) != 0.0 || r == c) t.emplace_back(r * n + node, c * n + node, j(r, c));
  }
  Eigen::SparseMatrix<double> jac(size(), size());
  jac.setFromTriplets(t.begin(), t.end());
  jac.makeCompressed();
  return jac;
}

Eigen::VectorXd StationaryOperator::beta_derivative(const Eigen::VectorXd& v) const {
  const int n = grid.size();
  const int m = params.n_components();
  Eigen::VectorXd r(v.size()), in(m), out(m);
  for (int node = 0; node < n; ++node) {
    for (int c = 0; c < m; ++c) in[c] = v[c * n + node];
    beta_derivative_packed(params, {in.data(), static_cast<size_t>(m)}, {out.data(), static_cast<size_t>(m)});
    for (int c = 0; c < m; ++c) r[c * n + node] = out[c];
  }
  return r;
}

namespace {

double norm_inf(const Eigen::SparseMatrix<double>& j) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(j.rows());
  for (int k = 0; k < j.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(j, k); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.maxCoeff();
}

double estimate_condition(const Eigen::SparseMatrix<double>& j, const Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu) {
  const double jn = norm_inf(j);
  Eigen::VectorXd x(j.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i));
  x.normalize();
  double growth = 0.0;
  for (int it = 0; it < 3; ++it) {
    Eigen::VectorXd y = lu.solve(x);
    if (!y.allFinite()) return std::numeric_limits<double>::infinity();
    growth = y.norm();
    if (!(growth > 0)) return std::numeric_limits<double>::infinity();
    x = y / growth;
  }
  return jn * growth;
}

}  // namespace

double roundoff_floor(const Eigen::SparseMatrix<double>& jacobian, const Eigen::VectorXd& v) {
  return 16.0 * std::numeric_limits<double>::epsilon() * norm_inf(jacobian) * (1.0 + v.cwiseAbs().maxCoeff());
}

NewtonResult newton_solve(const StationaryOperator& op, const Eigen::VectorXd& guess, const NewtonOptions& opt) {
  if (guess.size() != op.size()) throw ShapeError("Newton guess has the wrong length");
  Eigen::VectorXd v = guess;
  Eigen::VectorXd r = op.residual(v);
  double rn = r.cwiseAbs().maxCoeff();
  NewtonResult res;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false;
  for (int it = 0;; ++it) {
    if (!std::isfinite(rn)) throw NoConvergence("Newton residual is not finite");
    if (rn < opt.tol) {
      res.converged = true;
      break;
    }
    const Eigen::SparseMatrix<double> jac = op.jacobian(v);
    if (it > 0 && rn < roundoff_floor(jac, v)) {
      res.converged = true;
      res.roundoff_limited = true;
      break;
    }
    if (it == opt.max_iterations) break;
    if (!analyzed) {
      lu.analyzePattern(jac);
      analyzed = true;
    }
    lu.factorize(jac);
    if (lu.info() != Eigen::Success) throw SingularJacobian("sparse LU factorization failed");
    res.condition_estimate = estimate_condition(jac, lu);
    if (res.condition_estimate > opt.condition_limit)
      throw SingularJacobian("Jacobian condition estimate " + std::to_string(res.condition_estimate) +
                             " exceeds the limit");
    const Eigen::VectorXd delta = lu.solve(-r);
    if (!delta.allFinite()) throw SingularJacobian("Newton update is not finite");
    double alpha = 1.0;
    Eigen::VectorXd vt, rt;
    double rtn = 0.0;
    while (true) {
      vt = v + alpha * delta;
      rt = op.residual(vt);
      rtn = rt.cwiseAbs().maxCoeff();
      if ((std::isfinite(rtn) && rtn <= rn) || alpha <= opt.min_damping) break;
      alpha *= 0.5;
    }
    v = std::move(vt);
    r = std::move(rt);
    rn = rtn;
    res.iterations = it + 1;
  }
  res.residual_norm = rn;
  res.state = SystemState::unflatten(op.grid, v);
  res.physical = res.state.physical();
  if (!res.converged)
    throw NoConvergence("Newton stalled at residual " + std::to_string(rn) + " after " +
                        std::to_string(opt.max_iterations) + " iterations");
  return res;
}

NewtonResult steady_newton(const ModelParams& p, const SystemState& guess, const NewtonOptions& opt) {
  p.validate();
  check_state(p, guess);
  NewtonResult r = newton_solve(StationaryOperator::neumann(p, guess.grid), guess.flatten(), opt);
  r.state.t = guess.t;
  return r;
}

ConstancyReport constancy_check(const SystemState& s, double tol, double residual) {
  ConstancyReport rep;
  for (const auto& f : s.fields) {
    const double osc = f.maxCoeff() - f.minCoeff();
    rep.constant.push_back(osc < tol * (1.0 + f.cwiseAbs().maxCoeff()));
  }
  rep.law_applies = s.n_components() == 3 && residual < 1e-8;
  if (rep.law_applies)
    rep.consistent = std::all_of(rep.constant.begin(), rep.constant.end(), [](bool b) { return b; }) ||
                     std::none_of(rep.constant.begin(), rep.constant.end(), [](bool b) { return b; });
  return rep;
}

}  // namespace territory
