#include "territory/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "territory/error.hpp"

namespace territory {

namespace {

void check_shape(const Grid& grid, const Field& f) {
  if (f.size() != grid.size())
    throw ShapeError("field has " + std::to_string(f.size()) + " values, grid has " +
                     std::to_string(grid.size()) + " nodes");
}

void normalize_sign(Field& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-8 * scale) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

Field cosine_mode(const Grid& grid, int p, int q) {
  const double lx = grid.length(0);
  const double ly = grid.dim == 2 ? grid.length(1) : 1.0;
  Field f(grid.size());
  for (int n = 0; n < grid.size(); ++n) {
    double v = std::cos(std::numbers::pi * p * (grid.coord(n, 0) - grid.lo[0]) / lx);
    if (grid.dim == 2) v *= std::cos(std::numbers::pi * q * (grid.coord(n, 1) - grid.lo[1]) / ly);
    f[n] = v;
  }
  return f;
}

}  // namespace

double Grid::coord(int node, int axis) const {
  const int i = axis == 0 ? node % n_cells[0] : node / n_cells[0];
  return lo[axis] + (i + 0.5) * spacing[axis];
}

Eigen::VectorXd Grid::coords(int axis) const {
  Eigen::VectorXd c(size());
  for (int n = 0; n < size(); ++n) c[n] = coord(n, axis);
  return c;
}

Grid build_grid(int dim, const std::vector<std::pair<double, double>>& extents,
                const std::vector<int>& n_cells) {
  if (dim != 1 && dim != 2) throw GridError("dim must be 1 or 2", "dim");
  if (static_cast<int>(extents.size()) != dim || static_cast<int>(n_cells.size()) != dim)
    throw GridError("extents and n_cells must have one entry per axis", "extents");
  Grid g;
  g.dim = dim;
  for (int a = 0; a < dim; ++a) {
    const auto [lo, hi] = extents[a];
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo))
      throw GridError("degenerate extent on axis " + std::to_string(a), "extents");
    if (n_cells[a] < 4) throw GridError("need at least 4 cells per axis", "n_cells");
    g.lo[a] = lo;
    g.hi[a] = hi;
    g.n_cells[a] = n_cells[a];
    g.spacing[a] = (hi - lo) / n_cells[a];
  }
  return g;
}

Field sample(const Grid& grid, const std::function<double(double, double)>& f) {
  Field out(grid.size());
  for (int n = 0; n < grid.size(); ++n)
    out[n] = f(grid.coord(n, 0), grid.dim == 2 ? grid.coord(n, 1) : 0.0);
  return out;
}

Field apply_laplacian(const Grid& grid, const Field& f) {
  check_shape(grid, f);
  Field out = Field::Zero(grid.size());
  const int nx = grid.n_cells[0];
  const int ny = grid.dim == 2 ? grid.n_cells[1] : 1;
  const double ihx2 = 1.0 / (grid.spacing[0] * grid.spacing[0]);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int n = grid.index(i, j);
      const double c = f[n];
      const double left = i > 0 ? f[n - 1] : c;
      const double right = i + 1 < nx ? f[n + 1] : c;
      out[n] = (left - 2.0 * c + right) * ihx2;
    }
  }
  if (grid.dim == 2) {
    const double ihy2 = 1.0 / (grid.spacing[1] * grid.spacing[1]);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int n = grid.index(i, j);
        const double c = f[n];
        const double down = j > 0 ? f[n - nx] : c;
        const double up = j + 1 < ny ? f[n + nx] : c;
        out[n] += (down - 2.0 * c + up) * ihy2;
      }
    }
  }
  return out;
}

Eigen::SparseMatrix<double> laplacian_matrix(const Grid& grid) {
  const int nx = grid.n_cells[0];
  const int ny = grid.dim == 2 ? grid.n_cells[1] : 1;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<size_t>(grid.size()) * (grid.dim == 2 ? 5 : 3));
  auto couple = [&](int n, int m, double w) {
    t.emplace_back(n, m, w);
    t.emplace_back(n, n, -w);
  };
  const double ihx2 = 1.0 / (grid.spacing[0] * grid.spacing[0]);
  const double ihy2 = grid.dim == 2 ? 1.0 / (grid.spacing[1] * grid.spacing[1]) : 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int n = grid.index(i, j);
      if (i > 0) couple(n, n - 1, ihx2);
      if (i + 1 < nx) couple(n, n + 1, ihx2);
      if (grid.dim == 2) {
        if (j > 0) couple(n, n - nx, ihy2);
        if (j + 1 < ny) couple(n, n + nx, ihy2);
      }
    }
  }
  Eigen::SparseMatrix<double> lap(grid.size(), grid.size());
  lap.setFromTriplets(t.begin(), t.end());
  lap.makeCompressed();
  return lap;
}

double integrate(const Grid& grid, const Field& f) {
  check_shape(grid, f);
  return f.sum() * grid.cell_volume();
}

double inner_product(const Grid& grid, const Field& f, const Field& g) {
  check_shape(grid, f);
  check_shape(grid, g);
  return f.dot(g) * grid.cell_volume();
}

double gradient_l2_norm(const Grid& grid, const Field& f) {
  check_shape(grid, f);
  const int nx = grid.n_cells[0];
  const int ny = grid.dim == 2 ? grid.n_cells[1] : 1;
  double acc = 0.0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      const double g = (f[grid.index(i + 1, j)] - f[grid.index(i, j)]) / grid.spacing[0];
      acc += g * g;
    }
  if (grid.dim == 2)
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double g = (f[grid.index(i, j + 1)] - f[grid.index(i, j)]) / grid.spacing[1];
        acc += g * g;
      }
  return std::sqrt(acc * grid.cell_volume());
}

double max_gradient(const Grid& grid, const Field& f) {
  check_shape(grid, f);
  const int nx = grid.n_cells[0];
  const int ny = grid.dim == 2 ? grid.n_cells[1] : 1;
  double best = 0.0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i)
      best = std::max(best, std::abs(f[grid.index(i + 1, j)] - f[grid.index(i, j)]) / grid.spacing[0]);
  if (grid.dim == 2)
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i < nx; ++i)
        best = std::max(best, std::abs(f[grid.index(i, j + 1)] - f[grid.index(i, j)]) / grid.spacing[1]);
  return best;
}

std::vector<int> Spectrum::multiplicities(double tol) const {
  const int m = size();
  std::vector<int> mult(m, 1);
  int start = 0;
  while (start < m) {
    int end = start + 1;
    while (end < m && std::abs(eigenvalues[end] - eigenvalues[start]) <=
                          tol * std::max(1.0, std::abs(eigenvalues[start])))
      ++end;
    for (int i = start; i < end; ++i) mult[i] = end - start;
    start = end;
  }
  return mult;
}

int Spectrum::first_positive_index(double tol) const {
  for (int i = 0; i < size(); ++i)
    if (eigenvalues[i] > tol) return i;
  throw SpectrumError("spectrum has no positive eigenvalue");
}

double discrete_neumann_eigenvalue_1d(int n, double length, int n_cells) {
  const double h = length / n_cells;
  return 2.0 / (h * h) * (1.0 - std::cos(std::numbers::pi * n * h / length));
}

double unit_ball_volume(int dim) {
  if (dim == 1) return 2.0;
  if (dim == 2) return std::numbers::pi;
  throw DimensionError("unit ball volume only for dim 1 or 2");
}

Spectrum neumann_spectrum(const Grid& grid, int m, SpectrumSource source) {
  if (m < 1 || m > grid.size())
    throw GridError("requested " + std::to_string(m) + " modes on a grid of " +
                    std::to_string(grid.size()) + " nodes");
  Spectrum s;
  s.source = source;
  if (source == SpectrumSource::Analytic) {
    struct Mode {
      double gamma;
      int p, q;
    };
    std::vector<Mode> modes;
    const double lx = grid.length(0);
    const int ny = grid.dim == 2 ? grid.n_cells[1] : 1;
    for (int q = 0; q < ny; ++q)
      for (int p = 0; p < grid.n_cells[0]; ++p) {
        double g = std::pow(std::numbers::pi * p / lx, 2);
        if (grid.dim == 2) g += std::pow(std::numbers::pi * q / grid.length(1), 2);
        modes.push_back({g, p, q});
      }
    std::stable_sort(modes.begin(), modes.end(),
                     [](const Mode& a, const Mode& b) { return a.gamma < b.gamma; });
    for (int i = 0; i < m; ++i) {
      Field f = cosine_mode(grid, modes[i].p, modes[i].q);
      f /= std::sqrt(inner_product(grid, f, f));
      normalize_sign(f);
      s.eigenvalues.push_back(modes[i].gamma);
      s.eigenfunctions.push_back(std::move(f));
    }
    return s;
  }
  if (grid.size() > kDiscreteSpectrumNodeCap)
    throw GridError("discrete spectrum capped at " + std::to_string(kDiscreteSpectrumNodeCap) +
                    " nodes");
  const Eigen::MatrixXd neg_lap = -Eigen::MatrixXd(laplacian_matrix(grid));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg_lap);
  if (es.info() != Eigen::Success) throw SpectrumError("dense eigen-solve failed");
  for (int i = 0; i < m; ++i) {
    Field f = es.eigenvectors().col(i);
    f /= std::sqrt(inner_product(grid, f, f));
    normalize_sign(f);
    // Clamp roundoff on the kernel to exactly zero.
    s.eigenvalues.push_back(i == 0 ? 0.0 : std::max(0.0, es.eigenvalues()[i]));
    s.eigenfunctions.push_back(std::move(f));
  }
  return s;
}

}  // namespace territory
