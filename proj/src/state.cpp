#include "territory/state.hpp"

#include <string>

#include "territory/error.hpp"

namespace territory {

bool SystemState::physical(double floor) const {
  for (const auto& f : fields)
    if (f.size() > 0 && !(f.minCoeff() >= floor)) return false;
  return true;
}

Eigen::VectorXd SystemState::at(int node) const {
  Eigen::VectorXd v(n_components());
  for (int c = 0; c < n_components(); ++c) v[c] = fields[c][node];
  return v;
}

Eigen::VectorXd SystemState::flatten() const {
  const int n = grid.size();
  Eigen::VectorXd v(static_cast<Eigen::Index>(n) * n_components());
  for (int c = 0; c < n_components(); ++c) v.segment(static_cast<Eigen::Index>(c) * n, n) = fields[c];
  return v;
}

SystemState SystemState::unflatten(const Grid& grid, const Eigen::VectorXd& v, double t) {
  const int n = grid.size();
  if (n == 0 || v.size() % n != 0) throw ShapeError("flat vector length is not a multiple of the node count");
  SystemState s;
  s.grid = grid;
  s.t = t;
  for (Eigen::Index c = 0; c < v.size() / n; ++c) s.fields.push_back(v.segment(c * n, n));
  return s;
}

SystemState SystemState::constant(const Grid& grid, const StatePoint& point, double t) {
  SystemState s;
  s.grid = grid;
  s.t = t;
  for (Eigen::Index i = 0; i < point.w.size(); ++i) s.fields.push_back(Field::Constant(grid.size(), point.w[i]));
  s.fields.push_back(Field::Constant(grid.size(), point.u));
  return s;
}

SystemState SystemState::swapped(int i, int j) const {
  SystemState s = *this;
  std::swap(s.fields.at(i), s.fields.at(j));
  return s;
}

void check_state(const ModelParams& p, const SystemState& s) {
  if (s.n_components() != p.n_components())
    throw ShapeError("state has " + std::to_string(s.n_components()) + " fields, model needs " +
                     std::to_string(p.n_components()));
  for (const auto& f : s.fields)
    if (f.size() != s.grid.size()) throw ShapeError("field length does not match the grid");
}

Eigen::VectorXd stationary_residual(const ModelParams& p, const SystemState& s) {
  check_state(p, s);
  const int n = s.grid.size();
  const int m = s.n_components();
  Eigen::VectorXd r(static_cast<Eigen::Index>(n) * m);
  for (int c = 0; c < m; ++c) {
    const double diff = c < p.n_predators ? p.d[c] : p.dprey;
    r.segment(static_cast<Eigen::Index>(c) * n, n) = diff * apply_laplacian(s.grid, s.fields[c]);
  }
  Eigen::VectorXd in(m), out(m);
  for (int node = 0; node < n; ++node) {
    for (int c = 0; c < m; ++c) in[c] = s.fields[c][node];
    reaction_packed(p, {in.data(), static_cast<size_t>(m)}, {out.data(), static_cast<size_t>(m)});
    for (int c = 0; c < m; ++c) r[static_cast<Eigen::Index>(c) * n + node] += out[c];
  }
  return r;
}

double residual_norm(const ModelParams& p, const SystemState& s) {
  return stationary_residual(p, s).cwiseAbs().maxCoeff();
}

}  // namespace territory
