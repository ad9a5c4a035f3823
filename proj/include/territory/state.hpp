#pragma once

#include <vector>

#include <Eigen/Dense>

#include "territory/grid.hpp"
#include "territory/model.hpp"

namespace territory {

/// The (N+1)-density field (w_1, …, w_N, u) on one grid. Prey is the last field.
struct SystemState {
  Grid grid;
  double t = 0.0;
  std::vector<Field> fields;

  int n_components() const { return static_cast<int>(fields.size()); }
  const Field& prey() const { return fields.back(); }

  /// All values ≥ floor.
  bool physical(double floor = -1e-12) const;

  /// Values at one node, packed [w_1, …, w_N, u].
  Eigen::VectorXd at(int node) const;

  /// Component-major concatenation: entry c·n + node.
  Eigen::VectorXd flatten() const;
  static SystemState unflatten(const Grid& grid, const Eigen::VectorXd& v, double t = 0.0);

  static SystemState constant(const Grid& grid, const StatePoint& point, double t = 0.0);

  /// Swap of predators i and j.
  SystemState swapped(int i = 0, int j = 1) const;
};

/// Throws ShapeError when the field count or lengths disagree with `p` and the grid.
void check_state(const ModelParams& p, const SystemState& s);

/// diag(d)Δv + F(v) at every node, flattened like SystemState::flatten.
Eigen::VectorXd stationary_residual(const ModelParams& p, const SystemState& s);

/// Sup norm of the stationary residual.
double residual_norm(const ModelParams& p, const SystemState& s);

}  // namespace territory
