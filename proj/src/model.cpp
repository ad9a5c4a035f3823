#include "territory/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "territory/error.hpp"

namespace territory {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ParamError(field + ": " + what, field);
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

void ModelParams::validate() const {
  require(n_predators >= 1, "n_predators", "need at least one predator");
  const auto n = static_cast<Eigen::Index>(n_predators);
  require(std::isfinite(lambda) && lambda > 0, "lambda", "must be > 0");
  require(std::isfinite(mu) && mu >= 0, "mu", "must be >= 0");
  require(omega.size() == n && all_finite(omega) && (omega.array() > 0).all(), "omega",
          "need n_predators entries, all > 0");
  require(kpred.size() == n && all_finite(kpred) && (kpred.array() > 0).all(), "kpred",
          "need n_predators entries, all > 0");
  require(mu_self.size() == n && all_finite(mu_self) && (mu_self.array() >= 0).all(), "mu_self",
          "need n_predators entries, all >= 0");
  require(d.size() == n && all_finite(d) && (d.array() > 0).all(), "d",
          "need n_predators entries, all > 0");
  require(std::isfinite(dprey) && dprey > 0, "dprey", "must be > 0");
  require(std::isfinite(beta) && beta >= 0, "beta", "must be finite and >= 0");
  require(a.rows() == n && a.cols() == n && a.allFinite(), "a", "must be n_predators x n_predators");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j)
        require(a(i, j) == 0.0, "a", "diagonal must be zero");
      else
        require(a(i, j) > 0.0, "a", "off-diagonal entries must be > 0");
    }
  if (symmetric) require(a == a.transpose(), "a", "symmetric flag requires a_ij == a_ji");
}

bool ModelParams::identical_predators() const {
  for (int i = 1; i < n_predators; ++i)
    if (omega[i] != omega[0] || kpred[i] != kpred[0] || mu_self[i] != mu_self[0] || d[i] != d[0])
      return false;
  return true;
}

bool ModelParams::is_symmetric_pair() const {
  return n_predators == 2 && identical_predators() && a(0, 1) == a(1, 0);
}

ModelParams ModelParams::symmetric_pair(double lambda, double mu, double omega, double k,
                                        double beta, double d, double dprey, double mu_self) {
  ModelParams p = identical(2, lambda, mu, omega, k, beta, d, dprey, mu_self);
  p.symmetric = true;
  return p;
}

ModelParams ModelParams::identical(int n, double lambda, double mu, double omega, double k,
                                   double beta, double d, double dprey, double mu_self) {
  ModelParams p;
  p.lambda = lambda;
  p.mu = mu;
  p.n_predators = n;
  p.omega = Eigen::VectorXd::Constant(n, omega);
  p.kpred = Eigen::VectorXd::Constant(n, k);
  p.mu_self = Eigen::VectorXd::Constant(n, mu_self);
  p.d = Eigen::VectorXd::Constant(n, d);
  p.dprey = dprey;
  p.beta = beta;
  p.a = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
  p.symmetric = true;
  return p;
}

Eigen::VectorXd StatePoint::packed() const {
  Eigen::VectorXd s(w.size() + 1);
  s.head(w.size()) = w;
  s[w.size()] = u;
  return s;
}

StatePoint StatePoint::unpack(const Eigen::Ref<const Eigen::VectorXd>& s) {
  StatePoint p;
  p.w = s.head(s.size() - 1);
  p.u = s[s.size() - 1];
  return p;
}

void reaction_packed(const ModelParams& p, std::span<const double> s, std::span<double> out) {
  const int n = p.n_predators;
  const double u = s[n];
  double predation = 0.0;
  for (int i = 0; i < n; ++i) {
    double comp = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) comp += p.a(i, j) * s[j];
    out[i] = (-p.omega[i] + p.kpred[i] * u - p.mu_self[i] * s[i] - p.beta * comp) * s[i];
    predation += p.kpred[i] * s[i];
  }
  out[n] = (p.lambda - p.mu * u - predation) * u;
}

void jacobian_packed(const ModelParams& p, std::span<const double> s, Eigen::Ref<Eigen::MatrixXd> out) {
  const int n = p.n_predators;
  const double u = s[n];
  out.setZero();
  double predation = 0.0;
  for (int i = 0; i < n; ++i) {
    double comp = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      comp += p.a(i, j) * s[j];
      out(i, j) = -p.beta * p.a(i, j) * s[i];
    }
    out(i, i) = -p.omega[i] + p.kpred[i] * u - 2.0 * p.mu_self[i] * s[i] - p.beta * comp;
    out(i, n) = p.kpred[i] * s[i];
    out(n, i) = -p.kpred[i] * u;
    predation += p.kpred[i] * s[i];
  }
  out(n, n) = p.lambda - 2.0 * p.mu * u - predation;
}

void beta_derivative_packed(const ModelParams& p, std::span<const double> s, std::span<double> out) {
  const int n = p.n_predators;
  for (int i = 0; i < n; ++i) {
    double comp = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) comp += p.a(i, j) * s[j];
    out[i] = -comp * s[i];
  }
  out[n] = 0.0;
}

StatePoint reaction(const ModelParams& p, const StatePoint& s) {
  const Eigen::VectorXd in = s.packed();
  Eigen::VectorXd out(in.size());
  reaction_packed(p, {in.data(), static_cast<size_t>(in.size())},
                  {out.data(), static_cast<size_t>(out.size())});
  return StatePoint::unpack(out);
}

Eigen::MatrixXd reaction_jacobian(const ModelParams& p, const StatePoint& s) {
  const Eigen::VectorXd in = s.packed();
  Eigen::MatrixXd j(in.size(), in.size());
  jacobian_packed(p, {in.data(), static_cast<size_t>(in.size())}, j);
  return j;
}

HypothesisReport check_hypotheses(const ModelParams& p, const Spectrum& spectrum) {
  if (p.mu == 0.0) throw ParamError("reduced rate (lambda k - mu omega)/mu undefined for mu = 0", "mu");
  HypothesisReport r;
  for (int i = 0; i < p.n_predators; ++i) {
    const double excess = p.lambda * p.kpred[i] - p.mu * p.omega[i];
    r.h_holds.push_back(excess > 0);
    const double rate = excess / p.mu;
    r.reduced_rate.push_back(rate);
    double margin = std::numeric_limits<double>::infinity();
    int nearest = -1;
    for (int h = 0; h < spectrum.size(); ++h) {
      const double dist = std::abs(rate - spectrum.eigenvalues[h]);
      if (dist < margin) {
        margin = dist;
        nearest = h;
      }
    }
    r.nonresonance_margin.push_back(margin);
    r.nearest_mode.push_back(nearest);
    if (!r.h_holds.back()) {
      std::ostringstream msg;
      msg << "predator " << i + 1 << " violates lambda*k > mu*omega and goes extinct";
      r.warnings.push_back(msg.str());
    }
    if (nearest >= 0 && margin <= 1e-8 * std::max(1.0, spectrum.eigenvalues[nearest])) {
      r.resonant = true;
      std::ostringstream msg;
      msg << "predator " << i + 1 << ": reduced rate " << rate << " resonates with Neumann eigenvalue gamma_"
          << nearest << " = " << spectrum.eigenvalues[nearest];
      r.warnings.push_back(msg.str());
    }
  }
  return r;
}

ModelParams reduce_parameters(const ModelParams& p) {
  if (p.n_predators != 2 || !p.identical_predators())
    throw ParamError("parameter reduction needs two identical predators", "n_predators");
  const double dd = p.d[0];
  const double big_d = p.dprey;
  ModelParams r = p;
  r.lambda = p.lambda / big_d;
  r.mu = p.mu * dd / (big_d * big_d);
  r.kpred = p.kpred / big_d;
  r.omega = p.omega / dd;
  r.mu_self = p.mu_self / dd;
  r.beta = p.beta / dd;
  r.d.setOnes();
  r.dprey = 1.0;
  return r;
}

ModelParams expand_parameters(const ModelParams& reduced, double d, double dprey) {
  if (reduced.n_predators != 2 || !reduced.identical_predators())
    throw ParamError("parameter expansion needs two identical predators", "n_predators");
  if (!(d > 0) || !(dprey > 0)) throw ParamError("diffusivities must be > 0", "d");
  ModelParams p = reduced;
  p.lambda = reduced.lambda * dprey;
  p.mu = reduced.mu * dprey * dprey / d;
  p.kpred = reduced.kpred * dprey;
  p.omega = reduced.omega * d;
  p.mu_self = reduced.mu_self * d;
  p.beta = reduced.beta * d;
  p.d.setConstant(d);
  p.dprey = dprey;
  return p;
}

double spectral_norm(const Eigen::MatrixXd& j) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j.transpose() * j, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

SupNormResult sup_spectral_norm(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jac,
                                int coarse, int refinements) {
  const auto dims = lo.size();
  // Keep the coarse pass below ~2e6 evaluations in high dimension.
  int per_axis = coarse;
  while (per_axis > 5 && std::pow(static_cast<double>(per_axis), static_cast<double>(dims)) > 2e6)
    --per_axis;

  SupNormResult best{-1.0, lo};
  auto scan = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b, int pts) {
    std::vector<int> counts(dims);
    for (Eigen::Index k = 0; k < dims; ++k) counts[k] = b[k] > a[k] ? pts : 1;
    std::vector<int> idx(dims, 0);
    Eigen::VectorXd x(dims);
    while (true) {
      for (Eigen::Index k = 0; k < dims; ++k)
        x[k] = counts[k] == 1 ? a[k] : a[k] + (b[k] - a[k]) * idx[k] / (counts[k] - 1);
      const double v = spectral_norm(jac(x));
      if (v > best.value) {
        best.value = v;
        best.argmax = x;
      }
      Eigen::Index k = 0;
      while (k < dims && ++idx[k] == counts[k]) idx[k++] = 0;
      if (k == dims) break;
    }
  };

  scan(lo, hi, per_axis);
  Eigen::VectorXd step = (hi - lo) / std::max(1, per_axis - 1);
  for (int r = 0; r < refinements; ++r) {
    const Eigen::VectorXd a = (best.argmax - step).cwiseMax(lo);
    const Eigen::VectorXd b = (best.argmax + step).cwiseMin(hi);
    scan(a, b, 9);
    step /= 4.0;
  }
  return best;
}

Eigen::VectorXd invariant_box(const ModelParams& p) {
  if (!(p.mu > 0)) throw ParamError("invariant box needs mu > 0", "mu");
  Eigen::VectorXd hi(p.n_components());
  for (int i = 0; i < p.n_predators; ++i) {
    if (!(p.mu_self[i] > 0))
      throw ParamError("invariant box unbounded: mu_self[" + std::to_string(i) + "] = 0", "mu_self");
    hi[i] = std::max(0.0, (p.lambda * p.kpred[i] - p.mu * p.omega[i]) / (p.mu * p.mu_self[i]));
  }
  hi[p.n_predators] = p.lambda / p.mu;
  return hi;
}

double lipschitz_bound(const ModelParams& p) {
  const Eigen::VectorXd hi = invariant_box(p);
  const Eigen::VectorXd lo = Eigen::VectorXd::Zero(hi.size());
  auto jac = [&p](const Eigen::VectorXd& s) {
    Eigen::MatrixXd j(s.size(), s.size());
    jacobian_packed(p, {s.data(), static_cast<size_t>(s.size())}, j);
    return j;
  };
  return kLipschitzSafety * sup_spectral_norm(lo, hi, jac).value;
}

}  // namespace territory
