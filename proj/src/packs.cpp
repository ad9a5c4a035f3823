#include "territory/packs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "territory/error.hpp"

namespace territory {

double weyl_count(int dim, double measure, double gamma) {
  return unit_ball_volume(dim) / std::pow(2.0 * std::numbers::pi, dim) * measure * std::pow(gamma, 0.5 * dim);
}

PackBoundReport pack_bound(const ModelParams& p, const Spectrum& spectrum, const Grid& grid) {
  p.validate();
  if (!(p.mu > 0)) throw ParamError("gamma_bar undefined for mu = 0", "mu");
  PackBoundReport r;
  r.gamma_bar = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.n_predators; ++i)
    r.gamma_bar = std::max(r.gamma_bar, (p.lambda * p.kpred[i] - p.mu * p.omega[i]) / (p.d[i] * p.mu));
  if (!(r.gamma_bar > 0)) throw ParamError("no predator satisfies lambda*k > mu*omega", "lambda");
  if (spectrum.size() == 0 || spectrum.eigenvalues.back() < r.gamma_bar)
    throw SpectrumError("spectrum ends below gamma_bar; request more modes");
  r.n_bar_exact = static_cast<int>(std::count_if(spectrum.eigenvalues.begin(), spectrum.eigenvalues.end(),
                                                 [&](double g) { return g < r.gamma_bar; }));
  r.dim = grid.dim;
  r.measure = grid.measure();
  r.unit_ball_volume = unit_ball_volume(grid.dim);
  r.n_bar_weyl = weyl_count(grid.dim, r.measure, r.gamma_bar);
  return r;
}

double population(const SystemState& s) {
  double total = 0.0;
  for (int c = 0; c + 1 < s.n_components(); ++c) total += integrate(s.grid, s.fields[c]);
  return total;
}

double gradient_energy(const Grid& grid, const Field& f) {
  if (f.size() != grid.size()) throw ShapeError("field does not match the grid");
  const int nx = grid.n_cells[0];
  const int ny = grid.dim == 2 ? grid.n_cells[1] : 1;
  double acc = 0.0;
  auto axis_derivative = [&](int i, int j, int axis) {
    const int count = grid.n_cells[axis];
    const int pos = axis == 0 ? i : j;
    auto at = [&](int q) { return axis == 0 ? f[grid.index(q, j)] : f[grid.index(i, q)]; };
    const double h = grid.spacing[axis];
    if (pos == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (pos == count - 1) return (3.0 * at(count - 1) - 4.0 * at(count - 2) + at(count - 3)) / (2.0 * h);
    return (at(pos + 1) - at(pos - 1)) / (2.0 * h);
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      double g2 = std::pow(axis_derivative(i, j, 0), 2);
      if (grid.dim == 2) g2 += std::pow(axis_derivative(i, j, 1), 2);
      acc += g2;
    }
  return acc * grid.cell_volume();
}

IdentityResiduals verify_identities_mu0(const ModelParams& p, const SystemState& s) {
  p.validate();
  check_state(p, s);
  if (p.mu != 0.0) throw ParamError("integral identities need mu = 0", "mu");
  if (!p.identical_predators()) throw ParamError("integral identities need identical predators", "omega");
  if (p.mu_self[0] != 0.0) throw ParamError("integral identities need mu_self = 0", "mu_self");
  const Field& u = s.prey();
  if (!(u.minCoeff() > 0)) throw DomainError("prey density must be positive for log u");
  const double k = p.kpred[0], om = p.omega[0], lam = p.lambda, dp = p.dprey;
  const double measure = s.grid.measure();
  IdentityResiduals r;
  r.population = population(s);
  r.log_gradient = gradient_energy(s.grid, u.array().log().matrix());
  double cross = 0.0;
  for (int i = 0; i < p.n_predators; ++i)
    for (int j = 0; j < p.n_predators; ++j)
      if (i != j) cross += p.a(i, j) * inner_product(s.grid, s.fields[i], s.fields[j]);
  r.first = r.population - lam / k * measure - dp / k * r.log_gradient;
  r.second = integrate(s.grid, u) - om / k * measure - p.beta / lam * cross - om * dp / (k * lam) * r.log_gradient;
  return r;
}

StationaryOperator half_system_operator(const ModelParams& p, const Grid& half_grid) {
  if (half_grid.dim != 1) throw DimensionError("half system is one-dimensional");
  ModelParams q = ModelParams::identical(1, p.lambda, p.mu, p.omega[0], p.kpred[0], 0.0, p.d[0], p.dprey,
                                         p.mu_self[0]);
  StationaryOperator op{q, half_grid, {}};
  Eigen::SparseMatrix<double> lap = laplacian_matrix(half_grid);
  Eigen::SparseMatrix<double> dir = lap;
  // Antireflection ghost w_{-1} = −w_0 at x = 0.
  dir.coeffRef(0, 0) -= 2.0 / (half_grid.spacing[0] * half_grid.spacing[0]);
  op.diffusion.push_back(q.d[0] * dir);
  op.diffusion.push_back(q.dprey * lap);
  return op;
}

NewtonResult solve_half_system_1d(const ModelParams& p, double a, const SystemState& guess, const NewtonOptions& opt) {
  p.validate();
  if (guess.grid.dim != 1 || std::abs(guess.grid.lo[0]) > 1e-14 || std::abs(guess.grid.hi[0] - a) > 1e-12 * (1 + a))
    throw GridError("half system guess must live on (0, a)", "grid");
  if (guess.n_components() != 2) throw ShapeError("half system guess needs fields (w, u)");
  return newton_solve(half_system_operator(p, guess.grid), guess.flatten(), opt);
}

SystemState reflect_half_solution(const SystemState& half, double x0, int left) {
  if (half.grid.dim != 1 || half.n_components() != 2) throw ShapeError("half solution needs fields (w, u) in 1D");
  const int n = half.grid.n_cells[0];
  const double a = half.grid.length(0);
  SystemState full;
  full.grid = interval_grid(x0, x0 + 2.0 * a, 2 * n);
  full.t = half.t;
  full.fields.assign(3, Field::Zero(2 * n));
  const int right = 1 - left;
  for (int i = 0; i < 2 * n; ++i) {
    const int mirror = i < n ? n - 1 - i : i - n;
    full.fields[i < n ? left : right][i] = half.fields[0][mirror];
    full.fields[2][i] = half.fields[1][mirror];
  }
  return full;
}

namespace {

OptimCandidate run_cell(const ModelParams& base, const Grid& grid, int n, double beta, const OptimOptions& opt) {
  OptimCandidate cand;
  cand.n = n;
  cand.beta = beta;
  auto params_at = [&](double b) {
    return ModelParams::identical(n, base.lambda, base.mu, base.omega[0], base.kpred[0], b, base.d[0], base.dprey,
                                  base.mu_self[0]);
  };
  const ModelParams p = params_at(beta);
  const double beta_evolve = std::min(beta, opt.evolve_beta_cap);
  const ModelParams pe = params_at(beta_evolve);
  const StatePoint simple = simple_point(p, 0);
  SystemState s = SystemState::constant(grid, StatePoint{Eigen::VectorXd::Zero(n), simple.u});
  for (int node = 0; node < grid.size(); ++node) {
    const double x = (grid.coord(node, 0) - grid.lo[0]) / grid.length(0);
    const int block = std::min(n - 1, static_cast<int>(x * n));
    s.fields[block][node] = std::max(simple.w[0], 0.0);
  }
  auto support = [&](const SystemState& st) {
    int count = 0;
    for (int c = 0; c < n; ++c)
      if (st.fields[c].cwiseAbs().maxCoeff() >= opt.zero_threshold) ++count;
    return count;
  };
  auto polish = [&](const ModelParams& q, const SystemState& st) {
    NewtonResult nr = steady_newton(q, st, opt.newton);
    cand.state = nr.state;
    cand.converged = nr.converged;
    cand.physical = nr.physical;
    cand.residual = nr.residual_norm;
  };
  try {
    RunOptions ro;
    ro.sample_every = std::min(1.0, opt.polish_every);
    ro.dt_max = opt.dt_max;
    ro.steady_tol = opt.steady_tol;
    ro.monitors.enabled = false;
    SystemState cur = s;
    bool steady = false;
    bool kept = false;
    // Small μ gives weakly damped predator-prey cycles that carry the
    // evolution through near-extinction; the seed itself often lies in the
    // Newton basin of the N-pack root.
    try {
      polish(pe, s);
      kept = cand.converged && cand.physical && support(cand.state) == n;
    } catch (const Error&) {
    }
    if (!kept) cand.converged = false;
    while (!kept && cur.t < opt.t_end - 1e-9 && !steady) {
      ro.t_end = std::min(opt.t_end, cur.t + opt.polish_every);
      EvolveReport rep = run(pe, cur, ro);
      cur = rep.final_state;
      steady = rep.steady_reached;
      try {
        const int before = support(cur);
        polish(pe, cur);
        if (cand.converged && cand.physical && support(cand.state) == before) {
          kept = true;
          break;
        }
        cand.converged = false;
      } catch (const Error&) {
      }
    }
    if (!kept) {
      if (!steady) cand.note = "time budget exhausted before steady state; ";
      cand.state = cur;
      const int before = support(cur);
      polish(pe, cur);
      if (support(cand.state) != before) {
        cand.converged = false;
        cand.note += "Newton polish changed the support";
      }
    }
    if (beta > beta_evolve && cand.converged && cand.physical) {
      // Natural continuation in log β from the evolved root.
      const int target_support = support(cand.state);
      SystemState root = cand.state;
      double b = beta_evolve;
      double step = std::log(beta / beta_evolve);
      while (b < beta) {
        const double next = std::min(beta, b * std::exp(step));
        bool ok = false;
        try {
          NewtonResult nr = steady_newton(params_at(next), root, opt.newton);
          ok = nr.converged && nr.physical && support(nr.state) == target_support;
          if (ok) {
            root = nr.state;
            cand.residual = nr.residual_norm;
            b = next;
          }
        } catch (const Error&) {
        }
        if (!ok) {
          step *= 0.5;
          if (step < opt.min_log_beta_step) throw NoConvergence("beta ramp stalled at beta = " + std::to_string(b));
        }
      }
      cand.state = root;
      cand.note += "evolved at beta = " + std::to_string(beta_evolve) + ", ramped by Newton";
    }
  } catch (const Error& e) {
    cand.converged = false;
    cand.note += e.kind() + ": " + e.what();
    if (cand.state.fields.empty()) cand.state = s;
    cand.residual = residual_norm(p, cand.state);
  }
  for (int c = 0; c < n; ++c)
    if (cand.state.fields[c].cwiseAbs().maxCoeff() >= opt.zero_threshold) ++cand.positive_count;
  cand.population = population(cand.state);
  return cand;
}

}  // namespace

OptimReport optimize_packs(const ModelParams& params_template, const Grid& grid, int n_max,
                           const std::vector<double>& beta_grid, const OptimOptions& opt) {
  params_template.validate();
  if (n_max < 1) throw ParamError("n_max must be >= 1", "n_max");
  if (beta_grid.empty()) throw ParamError("beta_grid is empty", "beta_grid");
  for (double b : beta_grid)
    if (!(b >= 0) || !std::isfinite(b)) throw ParamError("beta_grid entries must be finite and >= 0", "beta_grid");

  struct Cell {
    int n;
    double beta;
  };
  std::vector<Cell> cells;
  for (int n = 1; n <= n_max; ++n)
    for (double b : beta_grid) cells.push_back({n, b});

  OptimReport rep;
  rep.candidates.resize(cells.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next++; i < cells.size(); i = next++)
      rep.candidates[i] = run_cell(params_template, grid, cells[i].n, cells[i].beta, opt);
  };
  const int threads = std::max(1, opt.threads > 0 ? opt.threads : static_cast<int>(std::thread::hardware_concurrency()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (size_t i = 0; i < rep.candidates.size(); ++i) {
    const auto& c = rep.candidates[i];
    if (!c.converged || !c.physical) continue;
    if (rep.best < 0 || c.population > rep.candidates[rep.best].population) rep.best = static_cast<int>(i);
  }
  if (params_template.mu == 0.0 && params_template.mu_self[0] == 0.0) {
    for (const auto& c : rep.candidates) {
      IdentityResiduals r;
      try {
        ModelParams p = ModelParams::identical(c.n, params_template.lambda, 0.0, params_template.omega[0],
                                               params_template.kpred[0], c.beta, params_template.d[0],
                                               params_template.dprey, 0.0);
        r = verify_identities_mu0(p, c.state);
      } catch (const Error&) {
        r.first = r.second = std::numeric_limits<double>::quiet_NaN();
      }
      rep.identity_residuals.push_back(r);
    }
  }
  return rep;
}

}  // namespace territory
