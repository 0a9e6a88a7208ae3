#include "msgfem/decomposition.hpp"
#include "msgfem/error.hpp"

#include "json.hpp"

#include <algorithm>

namespace msgfem {

CellBox CellBox::grown(Index layers, const CartesianGrid& grid) const {
  return {std::max<Index>(0, x0 - layers), std::min(grid.nx, x1 + layers),
          std::max<Index>(0, y0 - layers), std::min(grid.ny, y1 + layers)};
}

std::vector<Index> CellBox::cells(const CartesianGrid& grid) const {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(cell_count()));
  for (Index iy = y0; iy < y1; ++iy) {
    for (Index ix = x0; ix < x1; ++ix) out.push_back(grid.cell(ix, iy));
  }
  return out;
}

namespace {

// Free dofs touching the box, and those whose every grid cell lies in it.
void box_dofs(const AssembledSystem& system, const CellBox& box, std::vector<Index>& touching,
              std::vector<Index>& interior) {
  const CartesianGrid& g = system.grid;
  touching.clear();
  interior.clear();
  for (Index iy = box.y0; iy <= box.y1; ++iy) {
    for (Index ix = box.x0; ix <= box.x1; ++ix) {
      const Index f = system.node_to_free[static_cast<std::size_t>(g.node(ix, iy))];
      if (f < 0) continue;
      touching.push_back(f);
      bool all_inside = true;
      for (Index cy = iy - 1; cy <= iy; ++cy) {
        for (Index cx = ix - 1; cx <= ix; ++cx) {
          if (cx < 0 || cy < 0 || cx >= g.nx || cy >= g.ny) continue;
          all_inside = all_inside && box.contains(cx, cy);
        }
      }
      if (all_inside) interior.push_back(f);
    }
  }
  // Row-major node order equals free-dof order, so the lists are sorted.
}

} // namespace

Index coloring_constant(const CartesianGrid& grid, std::span<const std::vector<Index>> domains) {
  if (domains.empty()) throw Error(ErrorKind::InvalidArgument, "coloring_constant needs at least one domain");
  std::vector<Index> count(static_cast<std::size_t>(grid.node_count()), 0);
  std::vector<Index> stamp(static_cast<std::size_t>(grid.node_count()), -1);
  for (std::size_t d = 0; d < domains.size(); ++d) {
    for (Index c : domains[d]) {
      for (Index n : grid.cell_nodes(c)) {
        auto& s = stamp[static_cast<std::size_t>(n)];
        if (s != static_cast<Index>(d)) {
          s = static_cast<Index>(d);
          ++count[static_cast<std::size_t>(n)];
        }
      }
    }
  }
  return *std::max_element(count.begin(), count.end());
}

Decomposition build_decomposition(const AssembledSystem& system, Index px, Index py,
                                  Index overlap_layers, Index oversampling_layers) {
  const CartesianGrid& grid = system.grid;
  if (px < 1 || py < 1) throw Error(ErrorKind::InvalidArgument, "px and py must be >= 1");
  if (overlap_layers < 1 || oversampling_layers < 1) {
    throw Error(ErrorKind::InvalidArgument, "overlap and oversampling need at least one cell layer");
  }
  if (px > grid.nx || py > grid.ny) {
    throw Error(ErrorKind::GridTooSmall, "every non-overlapping block needs at least one cell");
  }
  Decomposition d;
  d.grid = grid;
  d.px = px;
  d.py = py;
  d.overlap = overlap_layers;
  d.oversampling = oversampling_layers;
  d.free_to_node = system.free_to_node;

  for (Index j = 0; j < py; ++j) {
    for (Index i = 0; i < px; ++i) {
      Subdomain s;
      s.id = j * px + i;
      s.block = {i * grid.nx / px, (i + 1) * grid.nx / px, j * grid.ny / py, (j + 1) * grid.ny / py};
      s.omega = s.block.grown(overlap_layers, grid);
      s.omega_star = s.omega.grown(oversampling_layers, grid);
      s.cells = s.omega.cells(grid);
      s.cells_star = s.omega_star.cells(grid);
      box_dofs(system, s.omega, s.dofs, s.dofs0);
      box_dofs(system, s.omega_star, s.dofs_star, s.dofs0_star);
      std::set_difference(s.dofs_star.begin(), s.dofs_star.end(), s.dofs0_star.begin(),
                          s.dofs0_star.end(), std::back_inserter(s.boundary_star));
      d.subdomains.push_back(std::move(s));
    }
  }

  std::vector<std::vector<Index>> omegas, stars;
  for (const auto& s : d.subdomains) {
    omegas.push_back(s.cells);
    stars.push_back(s.cells_star);
  }
  d.xi = coloring_constant(grid, omegas);
  d.xi_star = coloring_constant(grid, stars);
  return d;
}

std::string decomposition_summary_json(const Decomposition& decomp) {
  nlohmann::json j;
  j["px"] = decomp.px;
  j["py"] = decomp.py;
  j["overlap"] = decomp.overlap;
  j["oversampling"] = decomp.oversampling;
  j["xi"] = decomp.xi;
  j["xi_star"] = decomp.xi_star;
  auto& subs = j["subdomains"] = nlohmann::json::array();
  for (const auto& s : decomp.subdomains) {
    subs.push_back({{"id", s.id},
                    {"cells_omega", s.cells.size()},
                    {"cells_omega_star", s.cells_star.size()},
                    {"dofs_omega", s.dofs.size()},
                    {"dofs0_omega", s.dofs0.size()},
                    {"dofs_omega_star", s.dofs_star.size()},
                    {"dofs0_omega_star", s.dofs0_star.size()},
                    {"boundary_omega_star", s.boundary_star.size()}});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Partition of unity

namespace {

Index boundary_distance(const CellBox& b, const CartesianGrid& g, Index ix, Index iy, Index cap) {
  Index d = cap;
  if (b.x0 > 0) d = std::min(d, ix - b.x0);
  if (b.x1 < g.nx) d = std::min(d, b.x1 - ix);
  if (b.y0 > 0) d = std::min(d, iy - b.y0);
  if (b.y1 < g.ny) d = std::min(d, b.y1 - iy);
  return d;
}

} // namespace

PartitionOfUnity build_partition_of_unity(const Decomposition& decomp) {
  const CartesianGrid& g = decomp.grid;
  const Index cap = decomp.overlap + 1;
  const auto free_count = decomp.free_to_node.size();

  // d_i(x_k): cell-layer distance to the part of the boundary of omega_i
  // that is interior to the domain, capped at overlap + 1.
  std::vector<std::vector<Index>> dist(decomp.subdomains.size());
  std::vector<Index> total(free_count, 0);
  for (std::size_t i = 0; i < decomp.subdomains.size(); ++i) {
    const Subdomain& s = decomp.subdomains[i];
    for (Index f : s.dofs) {
      const Index node = decomp.free_to_node[static_cast<std::size_t>(f)];
      const Index d = boundary_distance(s.omega, g, node % (g.nx + 1), node / (g.nx + 1), cap);
      dist[i].push_back(d);
      total[static_cast<std::size_t>(f)] += d;
    }
  }
  for (std::size_t f = 0; f < free_count; ++f) {
    if (total[f] == 0) {
      throw Error(ErrorKind::UncoveredNode, "free dof " + std::to_string(f) + " has zero total PU distance");
    }
  }

  PartitionOfUnity pu;
  pu.weights.resize(decomp.subdomains.size());
  for (std::size_t i = 0; i < decomp.subdomains.size(); ++i) {
    const Subdomain& s = decomp.subdomains[i];
    Vector w(static_cast<Index>(s.dofs.size()));
    for (std::size_t k = 0; k < s.dofs.size(); ++k) {
      w[static_cast<Index>(k)] = static_cast<double>(dist[i][k]) /
                                 static_cast<double>(total[static_cast<std::size_t>(s.dofs[k])]);
    }
    pu.weights[i] = std::move(w);
  }
  return pu;
}

Vector pu_weights_on(const PartitionOfUnity& pu, const Decomposition& decomp, Index i,
                     std::span<const Index> dofs) {
  const Subdomain& s = decomp[i];
  const Vector& w = pu.weights[static_cast<std::size_t>(i)];
  Vector out = Vector::Zero(static_cast<Index>(dofs.size()));
  // Both lists are sorted: merge.
  std::size_t a = 0;
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    while (a < s.dofs.size() && s.dofs[a] < dofs[k]) ++a;
    if (a < s.dofs.size() && s.dofs[a] == dofs[k]) out[static_cast<Index>(k)] = w[static_cast<Index>(a)];
  }
  return out;
}

Vector pu_apply(const PartitionOfUnity& pu, const Decomposition& decomp, Index i,
                const Vector& v_local) {
  const Subdomain& s = decomp[i];
  if (v_local.size() != static_cast<Index>(s.dofs_star.size())) {
    throw Error(ErrorKind::DimensionMismatch, "pu_apply expects a vector on dofs(omega*)");
  }
  return pu_weights_on(pu, decomp, i, s.dofs_star).cwiseProduct(v_local);
}

Vector restrict_to(const Vector& global, std::span<const Index> dofs) {
  Vector out(static_cast<Index>(dofs.size()));
  for (std::size_t k = 0; k < dofs.size(); ++k) out[static_cast<Index>(k)] = global[dofs[k]];
  return out;
}

void add_extended(Vector& global, std::span<const Index> dofs, const Vector& local) {
  if (local.size() != static_cast<Index>(dofs.size())) {
    throw Error(ErrorKind::DimensionMismatch, "add_extended: local vector length");
  }
  for (std::size_t k = 0; k < dofs.size(); ++k) global[dofs[k]] += local[static_cast<Index>(k)];
}

} // namespace msgfem
