#pragma once

#include "msgfem/fem_grid.hpp"
#include "msgfem/linalg.hpp"

#include <span>
#include <string>
#include <vector>

namespace msgfem {

/// Half-open rectangle of cells [x0, x1) x [y0, y1).
struct CellBox {
  Index x0 = 0, x1 = 0, y0 = 0, y1 = 0;

  bool contains(Index ix, Index iy) const { return ix >= x0 && ix < x1 && iy >= y0 && iy < y1; }
  Index cell_count() const { return (x1 - x0) * (y1 - y0); }
  CellBox grown(Index layers, const CartesianGrid& grid) const;
  std::vector<Index> cells(const CartesianGrid& grid) const;
  bool operator==(const CellBox&) const = default;
};

/// One overlapping subdomain omega and its oversampling domain omega*.
/// All dof lists hold sorted free-dof ids.
struct Subdomain {
  Index id = 0;
  CellBox block;       // non-overlapping block
  CellBox omega;       // block + overlap layers
  CellBox omega_star;  // omega + oversampling layers
  std::vector<Index> cells;
  std::vector<Index> cells_star;
  std::vector<Index> dofs;          // free nodes touching omega
  std::vector<Index> dofs0;         // free nodes whose every cell lies in omega
  std::vector<Index> dofs_star;     // free nodes touching omega*
  std::vector<Index> dofs0_star;    // V_{h,0}(omega*)
  std::vector<Index> boundary_star; // dofs_star \ dofs0_star, i.e. on the interior boundary of omega*
};

struct Decomposition {
  CartesianGrid grid;
  Index px = 1, py = 1;
  Index overlap = 1;
  Index oversampling = 1;
  std::vector<Subdomain> subdomains;
  Index xi = 1;       // coloring constant of {omega_i}
  Index xi_star = 1;  // coloring constant of {omega_i*}
  std::vector<Index> free_to_node;

  Index size() const { return static_cast<Index>(subdomains.size()); }
  const Subdomain& operator[](Index i) const { return subdomains[static_cast<std::size_t>(i)]; }
};

Decomposition build_decomposition(const AssembledSystem& system, Index px, Index py,
                                  Index overlap_layers, Index oversampling_layers);

/// Max over grid nodes of the number of domains owning a cell incident to the node.
Index coloring_constant(const CartesianGrid& grid, std::span<const std::vector<Index>> domains);

/// JSON summary: per subdomain cell and dof counts, plus xi and xi*.
std::string decomposition_summary_json(const Decomposition& decomp);

/// Nodal weights chi_i on dofs(omega_i).
struct PartitionOfUnity {
  std::vector<Vector> weights;
};

PartitionOfUnity build_partition_of_unity(const Decomposition& decomp);

/// chi_i evaluated on an arbitrary sorted dof list (zero off dofs(omega_i)).
Vector pu_weights_on(const PartitionOfUnity& pu, const Decomposition& decomp, Index i,
                     std::span<const Index> dofs);

/// Nodal scaling by chi_i of a vector indexed by dofs(omega_i*).
Vector pu_apply(const PartitionOfUnity& pu, const Decomposition& decomp, Index i,
                const Vector& v_local);

Vector restrict_to(const Vector& global, std::span<const Index> dofs);
void add_extended(Vector& global, std::span<const Index> dofs, const Vector& local);

} // namespace msgfem
