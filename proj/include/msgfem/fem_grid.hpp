#pragma once

#include "msgfem/linalg.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace msgfem {

/// Uniform Cartesian grid of bilinear (Q1) cells on [0,lx] x [0,ly].
/// Nodes and cells are numbered row-major with x running fastest.
struct CartesianGrid {
  Index nx = 0;
  Index ny = 0;
  double lx = 1.0;
  double ly = 1.0;

  CartesianGrid() = default;
  CartesianGrid(Index nx, Index ny, double lx = 1.0, double ly = 1.0);

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  Index node_count() const { return (nx + 1) * (ny + 1); }
  Index cell_count() const { return nx * ny; }
  Index node(Index ix, Index iy) const { return iy * (nx + 1) + ix; }
  Index cell(Index ix, Index iy) const { return iy * nx + ix; }
  std::array<double, 2> node_coords(Index node) const;

  /// Global node ids of a cell, counter-clockwise from the lower-left corner.
  std::array<Index, 4> cell_nodes(Index cell) const;
  bool operator==(const CartesianGrid&) const = default;
};

/// Per-cell constant diffusion coefficient.
struct CoefficientField {
  std::vector<double> values;

  double alpha() const;
  double beta() const;

  static CoefficientField constant(const CartesianGrid& grid, double value);
  /// Resamples (nearest cell) when the raster resolution differs from the grid.
  static CoefficientField from_raster(const CartesianGrid& grid, const std::string& path);
};

/// Background 1, value `contrast` on round(fraction * bx * by) of the bx x by
/// blocks, chosen by a seeded shuffle.
CoefficientField skyscraper_coefficient(const CartesianGrid& grid, double contrast, Index bx,
                                        Index by, double inclusion_fraction, std::uint64_t seed);

using ScalarFunction = std::function<double(double, double)>;

enum class Side { left = 0, right = 1, bottom = 2, top = 3 };

struct SideCondition {
  enum class Kind { dirichlet, neumann };
  Kind kind = Kind::dirichlet;
  ScalarFunction value;  // Dirichlet data g(x, y); null means 0
  double flux = 0.0;     // Neumann flux A grad(u) . n

  static SideCondition dirichlet(double g);
  static SideCondition dirichlet(ScalarFunction g);
  static SideCondition neumann(double q);
};

/// Boundary data per side. At corners Dirichlet wins; when two Dirichlet
/// sides meet, the earlier side in (left, right, bottom, top) supplies the value.
struct BoundarySpec {
  std::array<SideCondition, 4> sides{};

  const SideCondition& operator[](Side s) const { return sides[static_cast<std::size_t>(s)]; }
  SideCondition& operator[](Side s) { return sides[static_cast<std::size_t>(s)]; }

  static BoundarySpec all_dirichlet(double g);
  static BoundarySpec all_dirichlet(ScalarFunction g);
};

/// Stiffness for a constant-coefficient Q1 rectangle, nodes ordered as in
/// CartesianGrid::cell_nodes.
std::array<std::array<double, 4>, 4> element_stiffness(double coeff, double hx, double hy);

double source_example1(double x, double y);

/// Discrete system on the free (non-Dirichlet) nodes.
struct AssembledSystem {
  CartesianGrid grid;
  CoefficientField coeff;
  SparseSym a_free;
  Vector f_free;
  Vector lift;                     // full nodal vector, Dirichlet values, 0 elsewhere
  std::vector<Index> free_to_node; // increasing
  std::vector<Index> node_to_free; // -1 on Dirichlet nodes

  Index free_count() const { return static_cast<Index>(free_to_node.size()); }
  bool is_free(Index node) const { return node_to_free[static_cast<std::size_t>(node)] >= 0; }

  /// u = lift + extend(u_free)
  Vector recover(const Vector& u_free) const;
};

AssembledSystem assemble(const CartesianGrid& grid, const CoefficientField& coeff,
                         const BoundarySpec& bc, const ScalarFunction& source);

/// Same as above with the source given as nodal values.
AssembledSystem assemble(const CartesianGrid& grid, const CoefficientField& coeff,
                         const BoundarySpec& bc, std::span<const double> nodal_source);

/// Neumann-type stiffness a_omega(., .) assembled from the given cells only,
/// indexed by `dofs` (sorted free-dof ids). Entries that couple to free dofs
/// outside `dofs` or to Dirichlet nodes are dropped.
SparseSym assemble_cell_subset(const AssembledSystem& system, std::span<const Index> cells,
                               std::span<const Index> dofs);

void write_solution_csv(const std::string& path, const CartesianGrid& grid, const Vector& u_nodal);

} // namespace msgfem
