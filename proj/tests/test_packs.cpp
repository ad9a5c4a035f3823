#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "territory/continuation.hpp"
#include "territory/error.hpp"
#include "territory/packs.hpp"

using namespace territory;
using support::kPi;

namespace {

// λ = k = ω = 1, μ = 0.01, d = 1: γ̄ = 99.
ModelParams unit_interval_params(double mu = 0.01) { return ModelParams::identical(1, 1.0, mu, 1.0, 1.0, 0.0); }

Spectrum spectrum_past(const Grid& g, double gamma) {
  int m = 8;
  for (;;) {
    Spectrum s = neumann_spectrum(g, m);
    if (s.eigenvalues.back() > gamma) return s;
    m *= 2;
  }
}

// Branch one at μ = 0.05 on (0, π), carried to μ by Newton steps at fixed β.
SystemState branch_state(int cells, double beta, double mu) {
  const ModelParams p = support::reference_pair();
  const Grid g = interval_grid(0, kPi, cells);
  const Spectrum spec = neumann_spectrum(g, 4);
  const BifurcationPoint bp = bifurcation_points(p, spec).at(0);
  ContinuationConfig cfg;
  cfg.beta_max = beta;
  const double w = coexist_point(p.with_beta(bp.beta_n)).w[0];
  SystemState s = continue_branch(start_branch(p, g, spec.eigenfunctions[1], bp, 1e-2 * w), 1, cfg).points.back().state;
  for (double m = 0.05; m > mu;) {
    m = std::max(mu, m - 0.01);
    ModelParams q = p.with_beta(beta);
    q.mu = m;
    const NewtonResult r = steady_newton(q, s);
    REQUIRE(r.converged);
    s = r.state;
  }
  return s;
}

// Residual of the β → ∞ limit system for V = w_1 − w_2 and u on the full grid.
double limit_residual(const ModelParams& p, const SystemState& s) {
  const Field v = s.fields[0] - s.fields[1];
  const Field& u = s.prey();
  const double k = p.kpred[0], om = p.omega[0];
  const Field rv = p.d[0] * apply_laplacian(s.grid, v) + ((k * u.array() - om) * v.array()).matrix();
  const Field ru = p.dprey * apply_laplacian(s.grid, u) +
                   ((p.lambda - p.mu * u.array() - k * v.array().abs()) * u.array()).matrix();
  return std::max(rv.cwiseAbs().maxCoeff(), ru.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("pack bound on the unit interval") {
  const Grid g = interval_grid(0, 1, 64);
  const PackBoundReport r = pack_bound(unit_interval_params(), spectrum_past(g, 99), g);
  CHECK(r.gamma_bar == doctest::Approx(99.0));
  CHECK(r.n_bar_exact == 4);
  CHECK(r.n_bar_weyl == doctest::Approx(std::sqrt(99.0) / kPi).epsilon(1e-12));
  CHECK(r.n_bar_weyl == doctest::Approx(3.17).epsilon(1e-2));
  CHECK(r.unit_ball_volume == 2.0);
  CHECK(r.measure == doctest::Approx(1.0));
}

TEST_CASE("pack bound errors") {
  const Grid g = interval_grid(0, 1, 64);
  CHECK_THROWS_AS(pack_bound(unit_interval_params(0.0), neumann_spectrum(g, 8), g), ParamError);
  CHECK_THROWS_AS(pack_bound(ModelParams::identical(1, 1, 2, 1, 1, 0), neumann_spectrum(g, 8), g), ParamError);
  CHECK_THROWS_AS(pack_bound(unit_interval_params(), neumann_spectrum(g, 3), g), SpectrumError);
}

TEST_CASE("two-dimensional Weyl count") {
  const Grid g = build_grid(2, {{0, 2}, {0, 3}}, {8, 12});
  const PackBoundReport r = pack_bound(unit_interval_params(), spectrum_past(g, 99), g);
  CHECK(r.unit_ball_volume == doctest::Approx(kPi));
  CHECK(r.n_bar_weyl == doctest::Approx(6.0 * 99.0 / (4 * kPi)).epsilon(1e-12));
  CHECK(weyl_count(2, 6.0, 99.0) == doctest::Approx(r.n_bar_weyl));
  // Direct count of (πa/2)² + (πb/3)² < 99.
  int count = 0;
  for (int a = 0; a < 20; ++a)
    for (int b = 0; b < 20; ++b) count += std::pow(kPi * a / 2, 2) + std::pow(kPi * b / 3, 2) < 99.0;
  CHECK(r.n_bar_exact == count);
}

TEST_CASE("both eigenvalue indexings on (0, pi)") {
  const Grid g = interval_grid(0, kPi, 64);
  const Spectrum s = neumann_spectrum(g, 8);
  // γ̄ = (λk − μω)/μ = 5: eigenvalues 0, 1, 4 lie below it, so N̄ = 3 counting γ = 0 as the first.
  const ModelParams p = ModelParams::symmetric_pair(1.0, 1.0 / 6.0, 1.0, 1.0, 0.0);
  CHECK(pack_bound(p, s, g).gamma_bar == doctest::Approx(5.0));
  CHECK(pack_bound(p, s, g).n_bar_exact == 3);
  // Bifurcation indices start at γ_0 = 0, so γ = 1 carries n = 1.
  const auto bps = bifurcation_points(p, s);
  REQUIRE(bps.size() == 2);
  CHECK(bps[0].n == 1);
  CHECK(bps[0].gamma_n == doctest::Approx(1.0));
  CHECK(bps[1].n == 2);
}

TEST_CASE("doubling the domain does not lower the bound") {
  support::Gen gen(61);
  for (int trial = 0; trial < 20; ++trial) {
    const double len = gen.uniform(0.5, 3.0);
    const ModelParams p = unit_interval_params(gen.uniform(0.005, 0.2));
    const Grid g1 = interval_grid(0, len, 64), g2 = interval_grid(0, 2 * len, 128);
    const double gb = (p.lambda - p.mu) / p.mu;
    CHECK(pack_bound(p, spectrum_past(g2, gb), g2).n_bar_exact >= pack_bound(p, spectrum_past(g1, gb), g1).n_bar_exact);
  }
}

TEST_CASE("Weyl ratio approaches one") {
  const Grid g = interval_grid(0, 1, 512);
  double last_gap = 1.0;
  for (double gb : {1e2, 1e3, 1e4, 1e5}) {
    const ModelParams p = unit_interval_params(1.0 / (gb + 1.0));
    const PackBoundReport r = pack_bound(p, spectrum_past(g, gb), g);
    CHECK(r.gamma_bar == doctest::Approx(gb));
    const double gap = std::abs(r.n_bar_weyl / r.n_bar_exact - 1.0);
    CHECK(gap < last_gap);
    last_gap = gap;
  }
}

TEST_CASE("population") {
  const Grid g = interval_grid(0, kPi, 64);
  const ModelParams p = ModelParams::symmetric_pair(1.0, 0.0, 1.0, 1.0, 3.0);
  CHECK(population(SystemState::constant(g, simple_point(p, 0))) == doctest::Approx(kPi).epsilon(1e-14));
  CHECK(population(SystemState::constant(g, StatePoint{Eigen::Vector2d::Zero(), 0.0})) == 0.0);
}

TEST_CASE("identities hold exactly on the simple state") {
  const Grid g = interval_grid(0, kPi, 64);
  const ModelParams p = ModelParams::symmetric_pair(1.0, 0.0, 1.0, 1.0, 3.0);
  const IdentityResiduals r = verify_identities_mu0(p, SystemState::constant(g, simple_point(p, 1)));
  CHECK(std::abs(r.first) < 1e-13);
  CHECK(std::abs(r.second) < 1e-13);
  CHECK(r.log_gradient == 0.0);
}

TEST_CASE("identities discriminate a non-solution") {
  const Grid g = interval_grid(0, kPi, 64);
  const ModelParams p = ModelParams::symmetric_pair(1.0, 0.0, 1.0, 1.0, 3.0);
  SystemState s = SystemState::constant(g, StatePoint{Eigen::Vector2d(2.0, 0.5), 1.0});
  s.fields[2] += 0.5 * sample(g, [](double x, double) { return std::cos(x); });
  const IdentityResiduals r = verify_identities_mu0(p, s);
  CHECK(std::abs(r.first) > 0.1);
  CHECK(std::abs(r.second) > 0.1);
  s.fields[2][3] = 0.0;
  CHECK_THROWS_AS(verify_identities_mu0(p, s), DomainError);
  CHECK_THROWS_AS(verify_identities_mu0(support::reference_pair(3), s), ParamError);
}

TEST_CASE("identities converge at second order on a branch solution") {
  const ModelParams p = ModelParams::symmetric_pair(1.0, 0.0, 1.0, 1.0, 10.0);
  std::vector<double> r1, r2;
  for (int cells : {128, 256, 512}) {
    const IdentityResiduals r = verify_identities_mu0(p, branch_state(cells, 10.0, 0.0));
    CHECK(std::abs(r.first) < 1e-4 * r.population);
    CHECK(std::abs(r.second) < 1e-4 * r.population);
    r1.push_back(std::abs(r.first));
    r2.push_back(std::abs(r.second));
  }
  for (int i = 1; i < 3; ++i) {
    CHECK(r1[i - 1] / r1[i] == doctest::Approx(4.0).epsilon(0.2));
    CHECK(r2[i - 1] / r2[i] == doctest::Approx(4.0).epsilon(0.2));
  }
}

TEST_CASE("half system") {
  const double a = kPi / 2;
  const Grid hg = interval_grid(0, a, 128);
  SUBCASE("prey-only state is a root") {
    const ModelParams p = unit_interval_params(0.01);
    const SystemState guess = SystemState::constant(hg, StatePoint{Eigen::VectorXd::Zero(1), 100.0});
    const NewtonResult r = solve_half_system_1d(p, a, guess);
    CHECK(r.converged);
    CHECK(r.iterations <= 1);
    CHECK(r.residual_norm < 1e-10);
  }
  SUBCASE("small mu beats the one-pack population") {
    const ModelParams p = unit_interval_params(0.01);
    SystemState guess;
    guess.grid = hg;
    guess.fields = {sample(hg, [](double x, double) { return std::sin(x); }), Field::Constant(128, 1.0)};
    const NewtonResult r = solve_half_system_1d(p, a, guess);
    REQUIRE(r.converged);
    CHECK(r.physical);
    CHECK(r.state.fields[0].minCoeff() > 0);
    const double mass = integrate(hg, r.state.fields[0]);
    CHECK(mass > a);
    MESSAGE("half-domain mass " << mass << " vs " << a);
  }
  SUBCASE("guess must live on (0, a)") {
    const SystemState wrong = SystemState::constant(interval_grid(0, 1, 16), StatePoint{Eigen::VectorXd::Zero(1), 1});
    CHECK_THROWS_AS(solve_half_system_1d(unit_interval_params(), a, wrong), GridError);
  }
}

TEST_CASE("branch state hands off to the half system") {
  const int cells = 256;
  const ModelParams p = support::reference_pair();
  const SystemState full = branch_state(cells, 500.0, 0.05);
  const int n = cells / 2;
  const Grid hg = interval_grid(0, kPi / 2, n);
  SystemState guess;
  guess.grid = hg;
  guess.fields = {Field(n), Field(n)};
  for (int j = 0; j < n; ++j) {
    guess.fields[0][j] = full.fields[0][n - 1 - j];
    guess.fields[1][j] = full.fields[2][n - 1 - j];
  }
  const NewtonResult r = solve_half_system_1d(p, kPi / 2, guess);
  REQUIRE(r.converged);
  CHECK(r.residual_norm < 1e-10);
  const SystemState back = reflect_half_solution(r.state, 0.0, 0);
  CHECK(back.grid == full.grid);
  CHECK(limit_residual(p, back) < 1e-8);
  auto gap_to = [&](const SystemState& s) {
    double gap = 0.0;
    for (int c = 0; c < 3; ++c) gap = std::max(gap, (back.fields[c] - s.fields[c]).cwiseAbs().maxCoeff());
    return gap;
  };
  CHECK(gap_to(branch_state(cells, 5000.0, 0.05)) < gap_to(full));
  // The mirror placement swaps the predators.
  CHECK(reflect_half_solution(r.state, 0.0, 1).flatten() == back.swapped().flatten());
}

TEST_CASE("optimizer with a large mu keeps one pack") {
  // γ̄ = (2 − 1)/1 = 1 < π² on (0, 1): only the constant mode counts.
  const ModelParams p = ModelParams::identical(1, 2.0, 1.0, 1.0, 1.0, 0.0);
  const Grid g = interval_grid(0, 1, 32);
  REQUIRE(pack_bound(p, spectrum_past(g, 1.0), g).n_bar_exact == 1);
  OptimOptions opt;
  opt.t_end = 100.0;
  const OptimReport rep = optimize_packs(p, g, 2, {10.0}, opt);
  REQUIRE(rep.best >= 0);
  const OptimCandidate& best = rep.candidates[rep.best];
  CHECK(best.positive_count == 1);
  CHECK(best.population == doctest::Approx(1.0));
  for (const auto& c : rep.candidates) {
    CHECK(best.population >= c.population - 1e-12);
    // Two surviving packs can only be the spatially constant coexistence
    // state, which collapses as β grows.
    if (c.physical && c.converged && c.positive_count > 1)
      for (int i = 0; i < c.n; ++i) CHECK(c.state.fields[i].maxCoeff() - c.state.fields[i].minCoeff() < 1e-8);
  }
}
