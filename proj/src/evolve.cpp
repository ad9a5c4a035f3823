#include "territory/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "territory/error.hpp"

namespace territory {

namespace {

double diffusivity(const ModelParams& p, int c) { return c < p.n_predators ? p.d[c] : p.dprey; }

// Largest row-sum norm of the reaction Jacobian over the nodes.
double reaction_stiffness(const ModelParams& p, const SystemState& s) {
  const int m = s.n_components();
  Eigen::VectorXd v(m);
  Eigen::MatrixXd j(m, m);
  double worst = 0.0;
  for (int node = 0; node < s.grid.size(); ++node) {
    for (int c = 0; c < m; ++c) v[c] = s.fields[c][node];
    jacobian_packed(p, {v.data(), static_cast<size_t>(m)}, j);
    worst = std::max(worst, j.cwiseAbs().rowwise().sum().maxCoeff());
  }
  return worst;
}

TrajectorySample take_sample(const SystemState& s) {
  const int m = s.n_components();
  TrajectorySample out;
  out.t = s.t;
  out.mean.resize(m);
  out.sup.resize(m);
  out.grad_l2.resize(m);
  for (int c = 0; c < m; ++c) {
    out.mean[c] = integrate(s.grid, s.fields[c]) / s.grid.measure();
    out.sup[c] = s.fields[c].cwiseAbs().maxCoeff();
    out.grad_l2[c] = gradient_l2_norm(s.grid, s.fields[c]);
  }
  return out;
}

}  // namespace

ImplicitDiffusion::ImplicitDiffusion(const Grid& grid) : grid_(grid), lap_(laplacian_matrix(grid)) {}

Field ImplicitDiffusion::solve(const Field& rhs, double dt, double diffusivity) {
  // Constants are exact fixed points of the Neumann operator; skip the solve
  // so spatially homogeneous data stays homogeneous to the last bit.
  if (rhs.size() > 0 && rhs.maxCoeff() == rhs.minCoeff()) return rhs;
  const auto key = std::make_pair(dt, diffusivity);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    if (cache_.size() >= 32) cache_.clear();
    Eigen::SparseMatrix<double> a(grid_.size(), grid_.size());
    a.setIdentity();
    a -= (dt * diffusivity) * lap_;
    auto f = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(a);
    if (f->info() != Eigen::Success) throw StepError("implicit diffusion factorization failed");
    it = cache_.emplace(key, std::move(f)).first;
  }
  return it->second->solve(rhs);
}

StepResult step(const ModelParams& p, const SystemState& s, double dt, const StepOptions& opt) {
  ImplicitDiffusion solver(s.grid);
  return step(p, s, dt, solver, opt);
}

StepResult step(const ModelParams& p, const SystemState& s, double dt, ImplicitDiffusion& solver,
                const StepOptions& opt) {
  if (!(dt > 0)) throw StepError("dt must be > 0");
  check_state(p, s);
  const int m = s.n_components();
  const int n = s.grid.size();

  std::vector<Field> rate(m, Field::Zero(n));
  if (opt.reaction_enabled) {
    Eigen::VectorXd in(m), out(m);
    for (int node = 0; node < n; ++node) {
      for (int c = 0; c < m; ++c) in[c] = s.fields[c][node];
      reaction_packed(p, {in.data(), static_cast<size_t>(m)}, {out.data(), static_cast<size_t>(m)});
      for (int c = 0; c < m; ++c) rate[c][node] = out[c];
    }
  }

  StepResult r;
  double h = dt;
  for (int attempt = 0; attempt <= opt.max_halvings; ++attempt) {
    SystemState next;
    next.grid = s.grid;
    next.t = s.t + h;
    bool ok = true;
    for (int c = 0; c < m && ok; ++c) {
      Field f = solver.solve(s.fields[c] + h * rate[c], h, diffusivity(p, c));
      const double sup = f.cwiseAbs().maxCoeff();
      ok = f.allFinite() && f.minCoeff() >= -1e-8 * (1.0 + sup);
      next.fields.push_back(std::move(f));
    }
    if (ok) {
      r.state = std::move(next);
      r.dt_used = h;
      r.rejections = attempt;
      return r;
    }
    h *= 0.5;
  }
  throw StepError("step rejected " + std::to_string(opt.max_halvings) + " times at t = " + std::to_string(s.t));
}

Eigen::VectorXd asymptotic_bounds(const ModelParams& p) {
  Eigen::VectorXd b = Eigen::VectorXd::Constant(p.n_components(), std::numeric_limits<double>::infinity());
  if (!(p.mu > 0)) return b;
  for (int i = 0; i < p.n_predators; ++i)
    if (p.mu_self[i] > 0) b[i] = std::max(0.0, (p.lambda * p.kpred[i] - p.mu * p.omega[i]) / (p.mu * p.mu_self[i]));
  b[p.n_predators] = p.lambda / p.mu;
  return b;
}

EvolveReport run(const ModelParams& p, const SystemState& s0, const RunOptions& opt) {
  p.validate();
  check_state(p, s0);
  if (!(opt.t_end > s0.t)) throw StepError("t_end must exceed the initial time");
  if (!(opt.sample_every > 0)) throw StepError("sample_every must be > 0");
  if (!s0.physical()) throw StepError("initial state is not physical");

  double hmin = s0.grid.spacing[0];
  if (s0.grid.dim == 2) hmin = std::min(hmin, s0.grid.spacing[1]);
  const double dmax = std::max(p.d.maxCoeff(), p.dprey);
  double dt = opt.dt0 > 0 ? opt.dt0 : 0.25 * hmin * hmin / dmax;
  dt = std::min(dt, opt.dt_max);

  const Eigen::VectorXd bounds = asymptotic_bounds(p);
  EvolveReport rep;
  ImplicitDiffusion solver(s0.grid);
  SystemState s = s0;
  int held = 0;
  double hold_start = 0.0;
  int sample_index = 0;
  double next_sample = s0.t;
  double last_change = std::numeric_limits<double>::infinity();

  auto record = [&](const SystemState& st) {
    TrajectorySample smp = take_sample(st);
    if (opt.monitors.enabled) {
      bool holds = true;
      for (int c = 0; c < st.n_components(); ++c)
        if (std::isfinite(bounds[c]) && smp.sup[c] > bounds[c] + opt.monitors.epsilon) holds = false;
      double t_eps = opt.monitors.transient;
      if (t_eps < 0) {
        if (holds) {
          if (held++ == 0) hold_start = st.t;
          if (held >= opt.monitors.hold_samples && std::isnan(rep.transient_time)) rep.transient_time = hold_start;
        } else {
          held = 0;
        }
        t_eps = rep.transient_time;
      } else {
        rep.transient_time = t_eps;
      }
      if (!std::isnan(t_eps) && st.t >= t_eps)
        for (int c = 0; c < st.n_components(); ++c)
          if (std::isfinite(bounds[c]) && smp.sup[c] > bounds[c] + opt.monitors.epsilon)
            rep.bound_violations.push_back({st.t, c, smp.sup[c], bounds[c]});
    }
    if (opt.snapshot_every > 0 && sample_index % opt.snapshot_every == 0) rep.snapshots.push_back(st);
    rep.samples.push_back(std::move(smp));
    ++sample_index;
  };

  record(s);
  next_sample += opt.sample_every;
  const double t_tol = 1e-12 * (1.0 + std::abs(opt.t_end));
  while (s.t < opt.t_end - t_tol) {
    const double target = std::min(next_sample, opt.t_end);
    double h = std::min(dt, target - s.t);
    if (opt.step.reaction_enabled) {
      const double stiff = reaction_stiffness(p, s);
      if (stiff > 0) h = std::min(h, 0.5 / stiff);
    }
    StepResult r = step(p, s, h, solver, opt.step);
    ++rep.steps;
    rep.rejections += r.rejections;
    double change = 0.0;
    for (int c = 0; c < s.n_components(); ++c)
      change = std::max(change, (r.state.fields[c] - s.fields[c]).cwiseAbs().maxCoeff() / r.dt_used);
    last_change = change;
    s = std::move(r.state);
    dt = r.rejections == 0 ? std::min(opt.dt_max, std::max(dt, h) * opt.growth) : r.dt_used;
    if (s.t >= target - t_tol) {
      s.t = target;
      record(s);
      next_sample += opt.sample_every;
      if (opt.steady_tol > 0 && last_change < opt.steady_tol) {
        rep.steady_reached = true;
        break;
      }
    }
  }

  if (rep.samples.size() >= 20) {
    try {
      rep.fitted_decay_rate = fit_decay_rate(rep.samples).rate;
    } catch (const FitError&) {
    }
  }
  rep.final_state = std::move(s);
  return rep;
}

SigmaCriterion sigma_criterion(const ModelParams& p, const Spectrum& spectrum, double lipschitz) {
  SigmaCriterion sc;
  sc.d = std::min(p.d.minCoeff(), p.dprey);
  sc.gamma1 = spectrum.first_positive();
  sc.lipschitz = lipschitz;
  sc.sigma = sc.d * sc.gamma1 - lipschitz;
  return sc;
}

SigmaCriterion sigma_criterion(const ModelParams& p, const Spectrum& spectrum) {
  return sigma_criterion(p, spectrum, lipschitz_bound(p));
}

DecayFit fit_decay_rate(const std::vector<TrajectorySample>& samples) {
  const size_t first = samples.size() / 2;
  const size_t tail = samples.size() - first;
  if (tail < 10) throw FitError("need at least 10 tail samples, have " + std::to_string(tail));
  std::vector<double> ts, ys;
  for (size_t i = first; i < samples.size(); ++i) {
    const double y = samples[i].grad_l2.sum();
    if (!(y >= 0)) throw FitError("gradient norm data is negative or NaN");
    if (y < 1e-13) continue;
    ts.push_back(samples[i].t);
    ys.push_back(std::log(y));
  }
  DecayFit fit;
  fit.used = static_cast<int>(ts.size());
  if (ts.size() < 2) {
    fit.rate = -std::numeric_limits<double>::infinity();
    return fit;
  }
  const double k = static_cast<double>(ts.size());
  double st = 0, sy = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sy += ys[i];
  }
  const double tm = st / k, ym = sy / k;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - tm) * (ys[i] - ym);
    sxx += (ts[i] - tm) * (ts[i] - tm);
  }
  if (!(sxx > 0)) throw FitError("tail samples share one time value");
  fit.rate = sxy / sxx;
  return fit;
}

HomogenizationVerdict homogenization_check(const EvolveReport& report, double sigma_prime) {
  HomogenizationVerdict v;
  v.fitted_rate = fit_decay_rate(report.samples).rate;
  v.threshold = -sigma_prime * (1.0 - 0.1);
  v.pass = v.fitted_rate <= v.threshold;
  return v;
}

std::vector<OdeSample> ode_trajectory(const ModelParams& p, const Eigen::VectorXd& means0, double t_end, double dt,
                                      double sample_every) {
  if (means0.size() != p.n_components()) throw ShapeError("initial means need N+1 entries");
  if ((means0.array() < 0).any()) throw StepError("initial means must be nonnegative");
  if (!(dt > 0) || !(t_end > 0)) throw StepError("dt and t_end must be > 0");
  const auto m = means0.size();
  auto f = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(m);
    reaction_packed(p, {v.data(), static_cast<size_t>(m)}, {out.data(), static_cast<size_t>(m)});
    return out;
  };
  std::vector<OdeSample> traj{{0.0, means0}};
  Eigen::VectorXd v = means0;
  double t = 0.0;
  double next = sample_every > 0 ? sample_every : 0.0;
  const double tol = 1e-12 * (1.0 + t_end);
  while (t < t_end - tol) {
    const double h = std::min(dt, t_end - t);
    const Eigen::VectorXd k1 = f(v);
    const Eigen::VectorXd k2 = f(v + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(v + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(v + h * k3);
    v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    if (!v.allFinite() || v.cwiseAbs().maxCoeff() > 1e12) throw StepError("ODE trajectory blew up");
    const bool last = t >= t_end - tol;
    if (sample_every <= 0 || last || t >= next - tol) {
      traj.push_back({last ? t_end : t, v});
      while (sample_every > 0 && next <= t + tol) next += sample_every;
    }
  }
  return traj;
}

}  // namespace territory
