#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>

#include "support.hpp"
#include "territory/continuation.hpp"
#include "territory/equilibria.hpp"
#include "territory/error.hpp"

using namespace territory;
using support::kPi;

namespace {

const ConstantSolution& find_kind(const std::vector<ConstantSolution>& cat, ConstantKind k, int predator = -1) {
  for (const auto& c : cat)
    if (c.kind == k && (predator < 0 || c.predator == predator)) return c;
  FAIL("kind missing from the catalog: " << to_string(k));
  return cat.front();
}

// Eigenvalues of a 3×3 real matrix through the characteristic cubic, solved by
// Durand–Kerner. Independent of the library's eigen-solver.
std::vector<std::complex<double>> cubic_roots(const Eigen::Matrix3d& m) {
  const double c2 = -m.trace();
  const double c1 = 0.5 * (m.trace() * m.trace() - (m * m).trace());
  const double c0 = -m.determinant();
  auto poly = [&](std::complex<double> z) { return ((z + c2) * z + c1) * z + c0; };
  std::vector<std::complex<double>> r{{0.4, 0.9}, {0.4, 0.9}, {0.4, 0.9}};
  r[1] = r[0] * r[0];
  r[2] = r[1] * r[0];
  for (int it = 0; it < 500; ++it)
    for (int i = 0; i < 3; ++i) {
      std::complex<double> den = 1.0;
      for (int j = 0; j < 3; ++j)
        if (j != i) den *= r[i] - r[j];
      r[i] -= poly(r[i]) / den;
    }
  return r;
}

double match_sets(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
  auto key = [](std::complex<double> x, std::complex<double> y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  };
  for (auto& z : a) z = {std::round(z.real() * 1e9) / 1e9 == 0 ? 0.0 : z.real(), z.imag()};
  std::sort(a.begin(), a.end(), key);
  std::sort(b.begin(), b.end(), key);
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double best = 1e300;
    for (const auto& z : b) best = std::min(best, std::abs(a[i] - z));
    worst = std::max(worst, best);
  }
  return worst;
}

Spectrum pi_spectrum(int modes = 64) { return neumann_spectrum(interval_grid(0, kPi, 256), modes); }

}  // namespace

TEST_CASE("catalog of the reference pair") {
  const double beta = 20.0 / 9.0;
  const ModelParams p = support::reference_pair(beta);
  const auto cat = constant_catalog(p);
  for (const auto& c : cat) CHECK(reaction(p, c.point).packed().cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::Vector3d oracle = support::coexist_oracle(1, 0.05, 1, 1, beta);
  const auto& d = find_kind(cat, ConstantKind::CoexistSymmetric);
  CHECK((d.point.packed() - oracle).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(find_kind(cat, ConstantKind::Zero).point.packed().cwiseAbs().maxCoeff() == 0.0);
  CHECK(find_kind(cat, ConstantKind::PreyOnly).point.u == doctest::Approx(20.0));
  CHECK(find_kind(cat, ConstantKind::Simple, 0).label() == "SIMPLE(1)");
  CHECK(find_kind(cat, ConstantKind::Simple, 1).point.w[1] == doctest::Approx(0.95));
}

TEST_CASE("simple solution with self-saturation") {
  const ModelParams p = ModelParams::identical(1, 1.0, 1.0, 0.5, 1.0, 0.0);
  const StatePoint s = simple_point(p, 0);
  CHECK(s.w[0] == doctest::Approx(0.5));
  CHECK(s.u == doctest::Approx(0.5));
}

TEST_CASE("catalog on random parameters has zero residuals") {
  support::Gen g(41);
  for (int trial = 0; trial < 40; ++trial) {
    const ModelParams p = g.params(g.integer(1, 4), trial % 2 == 0);
    for (const auto& c : constant_catalog(p)) {
      const double scale = 1.0 + c.point.packed().cwiseAbs().maxCoeff();
      CHECK(reaction(p, c.point).packed().cwiseAbs().maxCoeff() < 1e-12 * scale * scale);
    }
  }
}

TEST_CASE("beta = 0 adds segment samples") {
  const ModelParams p = support::reference_pair(0.0);
  const auto cat = constant_catalog(p);
  int segments = 0;
  for (const auto& c : cat)
    if (c.kind == ConstantKind::FamilySegment) {
      ++segments;
      CHECK(reaction(p, c.point).packed().cwiseAbs().maxCoeff() < 1e-12);
      const StabilityVerdict v = constant_stability(p, c, pi_spectrum());
      CHECK(v.classification == Stability::WeaklyStable);
      CHECK(v.critical_mode == 0);
    }
  CHECK(segments == 5);
  CHECK(find_kind(cat, ConstantKind::FamilySegment).label().rfind("FAMILY_SEGMENT(", 0) == 0);
}

TEST_CASE("stability classes of the four types") {
  const Spectrum spec = pi_spectrum();
  for (double beta : {0.1, 1.0, 10.0}) {
    const ModelParams p = support::reference_pair(beta);
    const auto cat = constant_catalog(p);
    CHECK(constant_stability(p, find_kind(cat, ConstantKind::Zero), spec).classification == Stability::Unstable);
    CHECK(constant_stability(p, find_kind(cat, ConstantKind::PreyOnly), spec).classification == Stability::Unstable);
    CHECK(constant_stability(p, find_kind(cat, ConstantKind::Simple, 0), spec).classification ==
          Stability::StronglyStable);
    const auto& d = find_kind(cat, ConstantKind::CoexistSymmetric);
    const StabilityVerdict vd = constant_stability(p, d, spec);
    CHECK(vd.classification == Stability::Unstable);
    CHECK(vd.critical_mode == 0);
    CHECK(vd.critical_eigenvalue.real() == doctest::Approx(-beta * d.point.w[0]).epsilon(1e-10));
  }
  const StabilityVerdict z = constant_stability(support::reference_pair(1), StatePoint{Eigen::Vector2d::Zero(), 0}, spec);
  CHECK(z.critical_mode == 0);
  CHECK(z.critical_eigenvalue.real() == doctest::Approx(-1.0));
}

TEST_CASE("type-(c) jacobian spectrum matches the closed form") {
  for (double beta : {0.1, 1.0, 10.0}) {
    const ModelParams p = support::reference_pair(beta);
    const StatePoint c = simple_point(p, 0);
    const double mu = 0.05, om = 1.0, k = 1.0, w = c.w[0];
    const std::complex<double> disc = std::sqrt(std::complex<double>((mu * om / k) * (mu * om / k) - 4 * k * om * w));
    const std::vector<std::complex<double>> closed{-beta * w, -(mu * om / k + disc) / 2.0, -(mu * om / k - disc) / 2.0};
    const Eigen::Matrix3d j = reaction_jacobian(p, c);
    CHECK(match_sets(cubic_roots(j), closed) < 1e-10);
    // Mode 0 of M_h is −J.
    auto m0 = mode_eigenvalues(p, c, 0.0);
    for (auto& z : m0) z = -z;
    CHECK(match_sets(m0, closed) < 1e-10);
  }
}

TEST_CASE("types (a) and (b) do not depend on beta") {
  const ModelParams base = support::reference_pair();
  for (auto kind : {0, 1}) {
    const StatePoint pt = kind == 0 ? StatePoint{Eigen::Vector2d::Zero(), 0} : StatePoint{Eigen::Vector2d::Zero(), 20};
    const auto ref = mode_eigenvalues(base.with_beta(0.0), pt, 0.0);
    for (double beta : {1.0, 10.0, 100.0}) {
      const auto ev = mode_eigenvalues(base.with_beta(beta), pt, 0.0);
      REQUIRE(ev.size() == ref.size());
      for (size_t i = 0; i < ev.size(); ++i) CHECK(std::abs(ev[i] - ref[i]) < 1e-12);
    }
  }
  const Spectrum spec = pi_spectrum();
  for (double beta : {0.0, 1.0, 10.0, 100.0}) {
    const ModelParams p = base.with_beta(beta);
    const Stability want = beta == 0.0 ? Stability::WeaklyStable : Stability::StronglyStable;
    CHECK(constant_stability(p, simple_point(p, 0), spec).classification == want);
  }
}

TEST_CASE("simple block eigenvalues match the per-mode closed form") {
  // d = 0.5, D = 2, μ_s = 0: the (w_1, u) block of M_h.
  ModelParams p = ModelParams::symmetric_pair(1.0, 0.2, 1.0, 1.5, 3.0, 0.5, 2.0);
  const StatePoint c = simple_point(p, 0);
  const Spectrum spec = pi_spectrum(11);
  const double d = 0.5, D = 2.0, k = 1.5, om = 1.0, mu = 0.2, w = c.w[0];
  for (int h = 0; h <= 10; ++h) {
    const double g = spec.eigenvalues[h];
    const double tr = (D + d) * g + mu * om / k;
    const double det = d * g * (D * g + mu * om / k) + k * k * w * om / k;
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4 * det));
    const std::vector<std::complex<double>> closed{d * g + p.beta * w, 0.5 * (tr + disc), 0.5 * (tr - disc)};
    CHECK(match_sets(mode_eigenvalues(p, c, g), closed) < 1e-10);
  }
}

TEST_CASE("short spectra raise SpectrumError") {
  const ModelParams p = support::reference_pair(100.0);
  CHECK_THROWS_AS(constant_stability(p, coexist_point(p), pi_spectrum(3)), SpectrumError);
}

TEST_CASE("simple stability thresholds") {
  SUBCASE("identical predators give 0") {
    const auto t = simple_stability_threshold(support::reference_pair(), 0);
    REQUIRE(t.size() == 1);
    CHECK(t[0].invader == 1);
    CHECK(t[0].beta == 0.0);
  }
  SUBCASE("fitter invader threshold matches bisection") {
    ModelParams p = ModelParams::symmetric_pair(2.0, 0.5, 1.0, 1.0, 0.0);
    p.omega[1] = 0.8;
    p.symmetric = false;
    const auto t = simple_stability_threshold(p, 0);
    REQUIRE(t.size() == 1);
    CHECK(t[0].beta == doctest::Approx(0.2 / 1.5).epsilon(1e-12));
    const Spectrum spec = pi_spectrum();
    auto stable = [&](double beta) {
      const ModelParams q = p.with_beta(beta);
      return constant_stability(q, simple_point(q, 0), spec).classification == Stability::StronglyStable;
    };
    double lo = 0.0, hi = 1.0;
    REQUIRE_FALSE(stable(lo));
    REQUIRE(stable(hi));
    while (hi - lo > 1e-9) {
      const double mid = 0.5 * (lo + hi);
      (stable(mid) ? hi : lo) = mid;
    }
    CHECK(std::abs(lo - t[0].beta) < 1e-6);
    CHECK_FALSE(stable(t[0].beta - 1e-6));
    CHECK(stable(t[0].beta + 1e-6));
  }
  SUBCASE("vanishing predator raises") {
    const ModelParams p = ModelParams::symmetric_pair(1.0, 1.0, 2.0, 1.0, 0.0);
    CHECK_THROWS_AS(simple_stability_threshold(p, 0), ParamError);
  }
}

TEST_CASE("Newton from an exact root") {
  const ModelParams p = support::reference_pair(5.0);
  const Grid g = interval_grid(0, kPi, 64);
  const NewtonResult r = steady_newton(p, SystemState::constant(g, coexist_point(p)));
  CHECK(r.converged);
  CHECK(r.iterations <= 1);
  CHECK(r.residual_norm < 1e-12);
  CHECK(r.physical);
}

TEST_CASE("Newton past the first crossing finds a branch solution") {
  const ModelParams base = support::reference_pair();
  const Grid g = interval_grid(0, kPi, 128);
  const double beta1 = support::beta_crossing(1, 0.05, 1, 1, 1.0);
  const ModelParams p = base.with_beta(1.1 * beta1);
  SystemState guess = SystemState::constant(g, coexist_point(p));
  const Field psi = sample(g, [](double x, double) { return std::sqrt(2 / kPi) * std::cos(x); });
  SUBCASE("a small kick falls back to the symmetric state") {
    SystemState small = guess;
    small.fields[0] += 0.1 * psi;
    small.fields[1] -= 0.1 * psi;
    const NewtonResult r = steady_newton(p, small);
    REQUIRE(r.converged);
    CHECK(zero_count(r.state).degenerate);
  }
  guess.fields[0] += 0.3 * psi;
  guess.fields[1] -= 0.3 * psi;
  const NewtonResult r = steady_newton(p, guess);
  REQUIRE(r.converged);
  CHECK(r.physical);
  CHECK(zero_count(r.state).count == 1);
  const ConstancyReport cr = constancy_check(r.state, 1e-6, r.residual_norm);
  CHECK(cr.law_applies);
  CHECK(cr.consistent);
  CHECK_FALSE(cr.constant[0]);
  CHECK_FALSE(cr.constant[2]);
}

TEST_CASE("Newton swap equivariance") {
  const ModelParams p = support::reference_pair(4.0);
  const Grid g = interval_grid(0, kPi, 96);
  SystemState guess = SystemState::constant(g, coexist_point(p));
  guess.fields[0] += 0.15 * sample(g, [](double x, double) { return std::cos(x); });
  guess.fields[1] -= 0.1 * sample(g, [](double x, double) { return std::cos(x); });
  const NewtonResult a = steady_newton(p, guess);
  const NewtonResult b = steady_newton(p, guess.swapped());
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK((a.state.swapped().flatten() - b.state.flatten()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("non-physical roots are flagged") {
  const ModelParams p = support::reference_pair(1.0);
  const Grid g = interval_grid(0, kPi, 32);
  // The reaction has a root with w_1 < 0: w_2 = 0, u = ω/k, w_1 = (λk − μω)/k² only when positive;
  // start near (−1, 0, 0) where the prey equation pins u = 0 and w_1 decays.
  const NewtonResult r = steady_newton(p, SystemState::constant(g, StatePoint{Eigen::Vector2d(-0.5, 0.0), 22.0}));
  REQUIRE(r.converged);
  const bool negative = r.state.flatten().minCoeff() < -1e-12;
  CHECK(r.physical == !negative);
}

TEST_CASE("constancy checks") {
  const Grid g = interval_grid(0, kPi, 32);
  const ModelParams p = support::reference_pair(3.0);
  const SystemState c = SystemState::constant(g, coexist_point(p));
  const ConstancyReport all = constancy_check(c, 1e-8, 0.0);
  CHECK(std::all_of(all.constant.begin(), all.constant.end(), [](bool b) { return b; }));
  CHECK(all.consistent);
  SystemState mixed = c;
  mixed.fields[0] += 0.1 * sample(g, [](double x, double) { return std::cos(x); });
  const ConstancyReport bad = constancy_check(mixed, 1e-8, 1e-12);
  CHECK(bad.law_applies);
  CHECK_FALSE(bad.consistent);
  CHECK_FALSE(constancy_check(mixed, 1e-8, 1e-3).law_applies);
}

TEST_CASE("small beta admits only constant solutions") {
  const ModelParams base = support::reference_pair();
  const double beta1 = support::beta_crossing(1, 0.05, 1, 1, 1.0);
  const ModelParams p = base.with_beta(0.4 * beta1);
  const Grid g = interval_grid(0, kPi, 48);
  const auto cat = constant_catalog(p);
  support::Gen gen(42);
  int landed = 0, solved = 0;
  for (int trial = 0; trial < 50; ++trial) {
    SystemState guess;
    guess.grid = g;
    for (int c = 0; c < 3; ++c) {
      const double base_value = c == 2 ? gen.uniform(0.5, 4) : gen.uniform(0.1, 1.5);
      const double a1 = gen.uniform(-0.3, 0.3), a2 = gen.uniform(-0.2, 0.2);
      guess.fields.push_back(sample(g, [&](double x, double) {
        return base_value * (1 + a1 * std::cos(x) + a2 * std::cos(2 * x));
      }));
    }
    NewtonResult r;
    try {
      r = steady_newton(p, guess);
    } catch (const Error&) {
      continue;
    }
    if (!r.converged || !r.physical) continue;
    ++solved;
    double best = 1e300;
    for (const auto& c : cat)
      best = std::min(best, (r.state.flatten() - SystemState::constant(g, c.point).flatten()).cwiseAbs().maxCoeff());
    landed += best < 1e-6;
  }
  CHECK(solved >= 25);
  CHECK(landed == solved);
}
