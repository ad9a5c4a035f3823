#pragma once

// Test-side oracles and generators, written independently of the library
// internals they check.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "territory/model.hpp"

namespace support {

inline constexpr double kPi = std::numbers::pi;

/// λ = 1, μ = 0.05, ω = k = 1, two identical predators.
inline territory::ModelParams reference_pair(double beta = 0.0) {
  return territory::ModelParams::symmetric_pair(1.0, 0.05, 1.0, 1.0, beta);
}

/// Symmetric coexistence state, typed in from the closed form.
inline Eigen::Vector3d coexist_oracle(double lambda, double mu, double omega, double k, double beta) {
  const double den = mu * beta + 2.0 * k * k;
  const double w = (lambda * k - mu * omega) / den;
  const double u = (lambda * beta + 2.0 * k * omega) / den;
  return {w, w, u};
}

/// Logistic u' = (λ − μu)u from u0.
inline double logistic(double lambda, double mu, double u0, double t) {
  const double cap = lambda / mu;
  return cap / (1.0 + (cap / u0 - 1.0) * std::exp(-lambda * t));
}

/// (2/h²)(1 − cos(πnh/L)).
inline double discrete_cosine_eigenvalue(int n, double length, int cells) {
  const double h = length / cells;
  return 2.0 / (h * h) * (1.0 - std::cos(kPi * n * h / length));
}

/// β_n from β·(λk − μω)/(μβ + 2k²) = γ.
inline double beta_crossing(double lambda, double mu, double omega, double k, double gamma) {
  return 2.0 * k * k * gamma / (lambda * k - mu * omega - mu * gamma);
}

/// Central finite-difference Jacobian of the reaction, step 1e-6·(1 + |s_j|).
inline Eigen::MatrixXd fd_jacobian(const territory::ModelParams& p, const Eigen::VectorXd& s) {
  const int n = static_cast<int>(s.size());
  Eigen::MatrixXd j(n, n);
  for (int c = 0; c < n; ++c) {
    const double h = 1e-6 * (1.0 + std::abs(s[c]));
    Eigen::VectorXd a = s, b = s;
    a[c] += h;
    b[c] -= h;
    j.col(c) = (territory::reaction(p, territory::StatePoint::unpack(a)).packed() -
                territory::reaction(p, territory::StatePoint::unpack(b)).packed()) /
               (2.0 * h);
  }
  return j;
}

/// Seeded generator for admissible parameters and states.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  territory::ModelParams params(int n, bool identical = false) {
    territory::ModelParams p = territory::ModelParams::identical(n, uniform(0.5, 3.0), uniform(0.01, 1.0),
                                                                 uniform(0.2, 2.0), uniform(0.5, 2.0), uniform(0.0, 20.0),
                                                                 uniform(0.2, 3.0), uniform(0.2, 3.0), uniform(0.0, 1.0));
    if (!identical) {
      for (int i = 0; i < n; ++i) {
        p.omega[i] = uniform(0.2, 2.0);
        p.kpred[i] = uniform(0.5, 2.0);
        p.mu_self[i] = uniform(0.0, 1.0);
        p.d[i] = uniform(0.2, 3.0);
        for (int j = 0; j < n; ++j)
          if (i != j) p.a(i, j) = uniform(0.2, 2.0);
      }
      p.symmetric = p.a == p.a.transpose();
    }
    return p;
  }

  Eigen::VectorXd state(int components, double hi = 3.0) {
    Eigen::VectorXd s(components);
    for (int c = 0; c < components; ++c) s[c] = uniform(0.0, hi);
    return s;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace support
