#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "territory/continuation.hpp"
#include "territory/error.hpp"
#include "territory/segregation.hpp"

using namespace territory;
using support::kPi;

namespace {

Branch branch_one(int cells, double beta_max = 500.0, double sign = 1.0) {
  const ModelParams p = support::reference_pair();
  const Grid g = interval_grid(0, kPi, cells);
  const Spectrum spec = neumann_spectrum(g, 6);
  const BifurcationPoint bp = bifurcation_points(p, spec).at(0);
  const double w = coexist_point(p.with_beta(bp.beta_n)).w[0];
  ContinuationConfig cfg;
  cfg.beta_max = beta_max;
  cfg.landmarks = {2 * bp.beta_n, 100.0};
  return continue_branch(start_branch(p, g, spec.eigenfunctions[1], bp, sign * 1e-2 * w), 1, cfg);
}

const Branch& reference_branch() {
  static const Branch b = branch_one(256);
  return b;
}

const BranchPoint& at_beta(const Branch& b, double beta) {
  for (const auto& pt : b.points)
    if (pt.beta == beta) return pt;
  FAIL("no branch point at beta " << beta);
  return b.points.front();
}

}  // namespace

TEST_CASE("overlap") {
  const Grid g = interval_grid(0, kPi, 64);
  const ModelParams p = support::reference_pair(20.0 / 9.0);
  CHECK(overlap(SystemState::constant(g, coexist_point(p))) == doctest::Approx(0.45 * 0.45 * kPi).epsilon(1e-12));
  SystemState s;
  s.grid = g;
  s.fields = {sample(g, [](double x, double) { return x < kPi / 2 ? 1.0 : 0.0; }),
              sample(g, [](double x, double) { return x < kPi / 2 ? 0.0 : 2.0; }), Field::Ones(64)};
  CHECK(overlap(s) == 0.0);
  s.fields.pop_back();
  s.fields.pop_back();
  CHECK_THROWS_AS(overlap(s), ShapeError);
}

TEST_CASE("branch one segregates") {
  const Branch& br = reference_branch();
  const double b1 = br.origin.beta_n;
  const SegregationReport r = beta_sweep(br);
  CHECK(r.verdict == TailVerdict::Segregating);
  CHECK(to_string(r.verdict) == "SEGREGATING");
  for (size_t i = 1; i < r.betas.size(); ++i) CHECK(r.betas[i] >= r.betas[i - 1]);
  for (double o : r.overlaps) CHECK(o >= 0);
  const double at_2b1 = overlap(at_beta(br, 2 * b1).state);
  CHECK(overlap(at_beta(br, 100.0).state) < 0.1 * at_2b1);
  CHECK(overlap(br.points.back().state) < 0.2 * at_2b1);
  CHECK(zero_count(br.points.back().state).count == 1);
  for (double slack : r.energy_slack) CHECK(slack >= -1e-8);
  for (bool ok : r.u_range_ok) CHECK(ok);
}

TEST_CASE("comparability on the symmetric branch and its mirror") {
  const SegregationReport r = beta_sweep(reference_branch());
  const Comparability c = comparability(r);
  CHECK(c.m == doctest::Approx(1.0).epsilon(1e-6));
  const Branch mirror = branch_one(256, 500.0, -1.0);
  CHECK(comparability(beta_sweep(mirror)).m == doctest::Approx(c.m).epsilon(1e-9));
}

TEST_CASE("comparability stays finite with unequal mortalities") {
  const Branch& br = reference_branch();
  ModelParams q = support::reference_pair();
  q.omega[1] = 1.01;
  q.symmetric = false;
  std::vector<double> betas;
  std::vector<SystemState> states;
  // Natural continuation in ω_2 from the symmetric branch points; Newton
  // starts from the symmetric state at the same β.
  for (const auto& pt : br.points) {
    if (pt.beta < 10.0) continue;
    SystemState cur = pt.state;
    bool ok = true;
    for (double om : {1.0025, 1.005, 1.0075, 1.01}) {
      ModelParams step = q.with_beta(pt.beta);
      step.omega[1] = om;
      try {
        const NewtonResult r = steady_newton(step, cur);
        ok = r.converged && r.physical;
        cur = r.state;
      } catch (const Error&) {
        ok = false;
      }
      if (!ok) break;
    }
    if (!ok) continue;
    betas.push_back(pt.beta);
    states.push_back(cur);
  }
  REQUIRE(betas.size() >= 5);
  const Comparability c = comparability(beta_sweep(q, betas, states));
  CHECK(std::isfinite(c.m));
  CHECK(c.m > 1.0);
  CHECK(c.m < 10.0);
  MESSAGE("M with omega_2 = 1.01: " << c.m << " at beta " << c.beta_at_max);
}

TEST_CASE("collapsing classification") {
  const ModelParams p = support::reference_pair();
  const Grid g = interval_grid(0, kPi, 32);
  SUBCASE("artificial sequence") {
    std::vector<double> betas;
    std::vector<SystemState> states;
    for (double beta = 10; beta <= 1e4; beta *= 2) {
      betas.push_back(beta);
      states.push_back(SystemState::constant(g, StatePoint{Eigen::Vector2d::Constant(3.0 / beta), 20.0 - 1.0 / beta}));
    }
    const SegregationReport r = beta_sweep(p, betas, states);
    CHECK(r.verdict == TailVerdict::Collapsing);
    for (double bw : r.collapse_beta_w) CHECK(bw == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.collapse_u_gap.back() < 1e-3);
  }
  SUBCASE("type-(d) family") {
    std::vector<double> betas;
    std::vector<SystemState> states;
    for (double beta = 10; beta <= 1e5; beta *= 3) {
      betas.push_back(beta);
      states.push_back(SystemState::constant(g, coexist_point(p.with_beta(beta))));
    }
    const SegregationReport r = beta_sweep(p, betas, states);
    CHECK(r.verdict == TailVerdict::Collapsing);
    CHECK(r.collapse_beta_w.back() == doctest::Approx(19.0).epsilon(1e-2));
    const LipschitzProfile lp = lipschitz_profile(r);
    for (double gmax : lp.max_gradient) CHECK(gmax == 0.0);
  }
}

TEST_CASE("sweeps need five points") {
  const Branch& br = reference_branch();
  std::vector<double> betas;
  std::vector<SystemState> states;
  for (int i = 0; i < 4; ++i) {
    betas.push_back(br.points[i].beta);
    states.push_back(br.points[i].state);
  }
  CHECK_THROWS_AS(beta_sweep(br.params, betas, states), InsufficientData);
}

TEST_CASE("Lipschitz profile on branch one") {
  const SegregationReport r = beta_sweep(reference_branch());
  const LipschitzProfile lp = lipschitz_profile(r);
  CHECK(lp.max_gradient.size() == r.betas.size());
  CHECK(gradient_variation(r, 50.0, 500.0) < 2.0);
  MESSAGE("tail slope " << lp.tail_slope << ", variation over [2 beta_1, 500] " << lp.variation);
  CHECK_THROWS_AS(gradient_variation(r, 1e4, 2e4), InsufficientData);
}

TEST_CASE("gradient estimate is resolved on the grid") {
  const Branch coarse = branch_one(128, 100.0);
  const Branch& fine = reference_branch();
  const double gc = max_gradient(coarse.points.back().state.grid, coarse.points.back().state.fields[0]);
  const BranchPoint& pf = at_beta(fine, 100.0);
  const double gf = max_gradient(pf.state.grid, pf.state.fields[0]);
  CHECK(std::abs(gc - gf) < 0.1 * gf);
}

TEST_CASE("free boundary") {
  const Branch& br = reference_branch();
  const SystemState& last = br.points.back().state;
  const FreeBoundary fb = free_boundary(last);
  REQUIRE(fb.interfaces.size() == 1);
  CHECK(std::abs(fb.interfaces[0] - kPi / 2) < 0.1);
  const double wide = free_boundary(last, 1e-1).measure;
  const double narrow = free_boundary(last, 1e-2).measure;
  CHECK(narrow <= wide);
  CHECK(free_boundary(last, 0.0).nodes.empty());
  const ModelParams p = support::reference_pair(5.0);
  const FreeBoundary flat = free_boundary(SystemState::constant(last.grid, coexist_point(p)));
  CHECK(flat.nodes.empty());
  CHECK(flat.measure == 0.0);
}

TEST_CASE("collapse calibration is an identity") {
  const ModelParams p = support::reference_pair();
  for (double beta : {1.0, 10.0, 100.0, 1e3, 1e5}) {
    const CollapseCalibration c = collapse_calibration(p, beta);
    CHECK(c.limit == doctest::Approx(19.0));
    CHECK(c.gap <= c.bound * (1 + 1e-10));
    CHECK(c.beta_w == doctest::Approx(beta * support::coexist_oracle(1, 0.05, 1, 1, beta)[0]).epsilon(1e-14));
  }
  CHECK_THROWS_AS(collapse_calibration(ModelParams::symmetric_pair(1, 0, 1, 1, 0), 1.0), ParamError);
}

TEST_CASE("u-range flags a state above the cap") {
  const ModelParams p = support::reference_pair();
  const Grid g = interval_grid(0, kPi, 32);
  std::vector<double> betas{1, 2, 3, 4, 5};
  std::vector<SystemState> states;
  for (double b : betas) states.push_back(SystemState::constant(g, coexist_point(p.with_beta(b))));
  states[2].fields[2][4] = 25.0;
  const SegregationReport r = beta_sweep(p, betas, states);
  CHECK(r.u_range_ok[0]);
  CHECK_FALSE(r.u_range_ok[2]);
}
