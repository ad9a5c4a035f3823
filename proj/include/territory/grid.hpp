#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace territory {

/// Cell-centered tensor grid on an interval or rectangle with reflection
/// (homogeneous Neumann) ghosts. Nodes are ordered x-fastest.
struct Grid {
  int dim = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};
  std::array<int, 2> n_cells{1, 1};
  std::array<double, 2> spacing{1.0, 1.0};

  int size() const { return dim == 1 ? n_cells[0] : n_cells[0] * n_cells[1]; }
  double length(int axis) const { return hi[axis] - lo[axis]; }
  double measure() const { return dim == 1 ? length(0) : length(0) * length(1); }
  double cell_volume() const { return dim == 1 ? spacing[0] : spacing[0] * spacing[1]; }
  int index(int i, int j = 0) const { return i + n_cells[0] * j; }

  /// Coordinate of node `node` along `axis`.
  double coord(int node, int axis = 0) const;
  Eigen::VectorXd coords(int axis = 0) const;

  bool operator==(const Grid&) const = default;
};

/// Nodal values on a Grid; length must equal `grid.size()`.
using Field = Eigen::VectorXd;

/// Throws GridError on degenerate extents or fewer than 4 cells per axis.
Grid build_grid(int dim, const std::vector<std::pair<double, double>>& extents,
                const std::vector<int>& n_cells);

inline Grid interval_grid(double a, double b, int n) { return build_grid(1, {{a, b}}, {n}); }

/// f(x, y) sampled at the nodes (y = 0 in 1D).
Field sample(const Grid& grid, const std::function<double(double, double)>& f);

/// Second-order Neumann Laplacian; throws ShapeError on length mismatch.
Field apply_laplacian(const Grid& grid, const Field& f);
Eigen::SparseMatrix<double> laplacian_matrix(const Grid& grid);

/// Midpoint quadrature.
double integrate(const Grid& grid, const Field& f);
double inner_product(const Grid& grid, const Field& f, const Field& g);

/// Face-difference gradient: L² norm and max magnitude.
double gradient_l2_norm(const Grid& grid, const Field& f);
double max_gradient(const Grid& grid, const Field& f);

enum class SpectrumSource { Analytic, Discrete };

/// Neumann eigenpairs, ascending, repeated with multiplicity. γ_0 = 0.
/// Eigenfunctions have unit L² norm under grid quadrature and their first
/// non-negligible nodal value is positive.
struct Spectrum {
  std::vector<double> eigenvalues;
  std::vector<Field> eigenfunctions;
  SpectrumSource source = SpectrumSource::Analytic;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  /// Multiplicity of the eigenvalue at each index (relative tolerance `tol`).
  std::vector<int> multiplicities(double tol = 1e-8) const;
  /// Index of the first strictly positive eigenvalue.
  int first_positive_index(double tol = 1e-12) const;
  double first_positive() const { return eigenvalues.at(first_positive_index()); }
};

/// Dense discrete solves are capped at this many nodes.
inline constexpr int kDiscreteSpectrumNodeCap = 4096;

/// Analytic source: (πn/L)² cosines (tensor sums in 2D). Discrete source:
/// dense symmetric eigen-solve of the assembled operator.
Spectrum neumann_spectrum(const Grid& grid, int m, SpectrumSource source = SpectrumSource::Analytic);

/// Closed-form eigenvalue of the cell-centered discrete operator in 1D:
/// (2/h²)(1 − cos(πnh/L)).
double discrete_neumann_eigenvalue_1d(int n, double length, int n_cells);

/// Volume ω_n of the unit ball in dimension 1 or 2.
double unit_ball_volume(int dim);

}  // namespace territory
