#include "msgfem/fem_grid.hpp"
#include "msgfem/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace msgfem {

CartesianGrid::CartesianGrid(Index nx_, Index ny_, double lx_, double ly_)
    : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
  if (nx < 2 || ny < 2) throw Error(ErrorKind::GridTooSmall, "grid needs at least 2 cells per axis");
  if (!(lx > 0.0) || !(ly > 0.0)) throw Error(ErrorKind::InvalidArgument, "domain lengths must be positive");
}

std::array<double, 2> CartesianGrid::node_coords(Index node) const {
  const Index ix = node % (nx + 1);
  const Index iy = node / (nx + 1);
  return {ix * hx(), iy * hy()};
}

std::array<Index, 4> CartesianGrid::cell_nodes(Index c) const {
  const Index ix = c % nx;
  const Index iy = c / nx;
  return {node(ix, iy), node(ix + 1, iy), node(ix + 1, iy + 1), node(ix, iy + 1)};
}

// ---------------------------------------------------------------------------
// Coefficients

double CoefficientField::alpha() const { return *std::min_element(values.begin(), values.end()); }
double CoefficientField::beta() const { return *std::max_element(values.begin(), values.end()); }

CoefficientField CoefficientField::constant(const CartesianGrid& grid, double value) {
  if (!(value > 0.0)) throw Error(ErrorKind::NonpositiveCoefficient, "constant coefficient must be > 0");
  return {std::vector<double>(static_cast<std::size_t>(grid.cell_count()), value)};
}

CoefficientField CoefficientField::from_raster(const CartesianGrid& grid, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open raster " + path);
  Index rx = 0, ry = 0;
  if (!(is >> rx >> ry) || rx < 1 || ry < 1) throw Error(ErrorKind::Io, "bad raster header in " + path);
  std::vector<double> raster(static_cast<std::size_t>(rx * ry));
  for (auto& v : raster) {
    if (!(is >> v)) throw Error(ErrorKind::Io, "truncated raster " + path);
    if (!(v > 0.0)) throw Error(ErrorKind::NonpositiveCoefficient, "raster value must be > 0");
  }
  CoefficientField out;
  out.values.resize(static_cast<std::size_t>(grid.cell_count()));
  for (Index iy = 0; iy < grid.ny; ++iy) {
    const Index sy = std::min<Index>(ry - 1, (2 * iy + 1) * ry / (2 * grid.ny));
    for (Index ix = 0; ix < grid.nx; ++ix) {
      const Index sx = std::min<Index>(rx - 1, (2 * ix + 1) * rx / (2 * grid.nx));
      out.values[static_cast<std::size_t>(grid.cell(ix, iy))] = raster[static_cast<std::size_t>(sy * rx + sx)];
    }
  }
  return out;
}

CoefficientField skyscraper_coefficient(const CartesianGrid& grid, double contrast, Index bx,
                                        Index by, double inclusion_fraction, std::uint64_t seed) {
  if (!(contrast >= 1.0)) throw Error(ErrorKind::InvalidArgument, "contrast must be >= 1");
  if (bx < 1 || bx > grid.nx || by < 1 || by > grid.ny) {
    throw Error(ErrorKind::InvalidBlockCount, "block counts must satisfy 1 <= b <= cells per axis");
  }
  if (!(inclusion_fraction >= 0.0 && inclusion_fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "inclusion fraction must lie in [0, 1]");
  }
  const Index nblocks = bx * by;
  const auto selected = static_cast<Index>(std::llround(inclusion_fraction * nblocks));

  std::vector<Index> order(static_cast<std::size_t>(nblocks));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (Index k = nblocks - 1; k > 0; --k) {
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(k + 1));
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<bool> high(static_cast<std::size_t>(nblocks), false);
  for (Index k = 0; k < selected; ++k) high[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;

  CoefficientField out;
  out.values.resize(static_cast<std::size_t>(grid.cell_count()), 1.0);
  for (Index iy = 0; iy < grid.ny; ++iy) {
    const Index bj = iy * by / grid.ny;
    for (Index ix = 0; ix < grid.nx; ++ix) {
      const Index bi = ix * bx / grid.nx;
      if (high[static_cast<std::size_t>(bj * bx + bi)]) out.values[static_cast<std::size_t>(grid.cell(ix, iy))] = contrast;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Boundary conditions

SideCondition SideCondition::dirichlet(double g) {
  return dirichlet(ScalarFunction([g](double, double) { return g; }));
}

SideCondition SideCondition::dirichlet(ScalarFunction g) {
  SideCondition s;
  s.kind = Kind::dirichlet;
  s.value = std::move(g);
  return s;
}

SideCondition SideCondition::neumann(double q) {
  SideCondition s;
  s.kind = Kind::neumann;
  s.flux = q;
  return s;
}

BoundarySpec BoundarySpec::all_dirichlet(double g) {
  BoundarySpec bc;
  for (auto& s : bc.sides) s = SideCondition::dirichlet(g);
  return bc;
}

BoundarySpec BoundarySpec::all_dirichlet(ScalarFunction g) {
  BoundarySpec bc;
  for (auto& s : bc.sides) s = SideCondition::dirichlet(g);
  return bc;
}

// ---------------------------------------------------------------------------
// Element matrices and sources

std::array<std::array<double, 4>, 4> element_stiffness(double coeff, double hx, double hy) {
  if (!(coeff > 0.0)) throw Error(ErrorKind::NonpositiveCoefficient, "coefficient must be > 0");
  static constexpr std::array<std::array<double, 4>, 4> kx{{
      {2, -2, -1, 1}, {-2, 2, 1, -1}, {-1, 1, 2, -2}, {1, -1, -2, 2}}};
  static constexpr std::array<std::array<double, 4>, 4> ky{{
      {2, 1, -1, -2}, {1, 2, -2, -1}, {-1, -2, 2, 1}, {-2, -1, 1, 2}}};
  const double sx = coeff * hy / (6.0 * hx);
  const double sy = coeff * hx / (6.0 * hy);
  std::array<std::array<double, 4>, 4> ke{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) ke[i][j] = sx * kx[i][j] + sy * ky[i][j];
  }
  return ke;
}

double source_example1(double x, double y) {
  const double dx = x - 0.15;
  const double dy = y - 0.55;
  return 1000.0 * std::exp(-dx * dx - 10.0 * dy * dy);
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

struct DirichletData {
  std::vector<bool> is_dirichlet;
  Vector values;
};

DirichletData classify_nodes(const CartesianGrid& grid, const BoundarySpec& bc) {
  DirichletData d;
  d.is_dirichlet.assign(static_cast<std::size_t>(grid.node_count()), false);
  d.values = Vector::Zero(grid.node_count());
  bool any = false;
  for (const auto& s : bc.sides) any = any || s.kind == SideCondition::Kind::dirichlet;
  if (!any) throw Error(ErrorKind::AllNeumann, "at least one side must carry Dirichlet data");

  for (Index iy = 0; iy <= grid.ny; ++iy) {
    for (Index ix = 0; ix <= grid.nx; ++ix) {
      const std::array<bool, 4> on{ix == 0, ix == grid.nx, iy == 0, iy == grid.ny};
      for (std::size_t s = 0; s < 4; ++s) {
        if (!on[s] || bc.sides[s].kind != SideCondition::Kind::dirichlet) continue;
        const Index n = grid.node(ix, iy);
        const auto [x, y] = grid.node_coords(n);
        d.is_dirichlet[static_cast<std::size_t>(n)] = true;
        d.values[n] = bc.sides[s].value ? bc.sides[s].value(x, y) : 0.0;
        break;
      }
    }
  }
  return d;
}

AssembledSystem assemble_impl(const CartesianGrid& grid, const CoefficientField& coeff,
                              const BoundarySpec& bc, const Vector& nodal_source) {
  if (static_cast<Index>(coeff.values.size()) != grid.cell_count()) {
    throw Error(ErrorKind::DimensionMismatch, "coefficient field does not match the grid");
  }
  for (double v : coeff.values) {
    if (!(v > 0.0)) throw Error(ErrorKind::NonpositiveCoefficient, "coefficient must be > 0 on every cell");
  }
  const DirichletData dir = classify_nodes(grid, bc);

  AssembledSystem sys;
  sys.grid = grid;
  sys.coeff = coeff;
  sys.node_to_free.assign(static_cast<std::size_t>(grid.node_count()), -1);
  for (Index n = 0; n < grid.node_count(); ++n) {
    if (!dir.is_dirichlet[static_cast<std::size_t>(n)]) {
      sys.node_to_free[static_cast<std::size_t>(n)] = static_cast<Index>(sys.free_to_node.size());
      sys.free_to_node.push_back(n);
    }
  }
  sys.lift = dir.values;

  // Load: nodal quadrature for the source plus trapezoidal Neumann edges.
  const double hx = grid.hx();
  const double hy = grid.hy();
  Vector load = Vector::Zero(grid.node_count());
  for (Index iy = 0; iy <= grid.ny; ++iy) {
    const double wy = (iy == 0 || iy == grid.ny) ? 0.5 : 1.0;
    for (Index ix = 0; ix <= grid.nx; ++ix) {
      const double wx = (ix == 0 || ix == grid.nx) ? 0.5 : 1.0;
      const Index n = grid.node(ix, iy);
      load[n] += hx * hy * wx * wy * nodal_source[n];
    }
  }
  auto add_edge_flux = [&](Side side) {
    const SideCondition& s = bc[side];
    if (s.kind != SideCondition::Kind::neumann) return;
    const bool horizontal = side == Side::bottom || side == Side::top;
    const Index count = horizontal ? grid.nx : grid.ny;
    const double h = horizontal ? hx : hy;
    for (Index e = 0; e < count; ++e) {
      Index a = 0, b = 0;
      switch (side) {
      case Side::bottom: a = grid.node(e, 0); b = grid.node(e + 1, 0); break;
      case Side::top: a = grid.node(e, grid.ny); b = grid.node(e + 1, grid.ny); break;
      case Side::left: a = grid.node(0, e); b = grid.node(0, e + 1); break;
      case Side::right: a = grid.node(grid.nx, e); b = grid.node(grid.nx, e + 1); break;
      }
      load[a] += 0.5 * h * s.flux;
      load[b] += 0.5 * h * s.flux;
    }
  };
  for (Side s : {Side::left, Side::right, Side::bottom, Side::top}) add_edge_flux(s);

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(grid.cell_count()) * 16);
  Vector f = Vector::Zero(sys.free_count());
  for (Index c = 0; c < grid.cell_count(); ++c) {
    const auto ke = element_stiffness(coeff.values[static_cast<std::size_t>(c)], hx, hy);
    const auto nodes = grid.cell_nodes(c);
    for (int i = 0; i < 4; ++i) {
      const Index fi = sys.node_to_free[static_cast<std::size_t>(nodes[i])];
      if (fi < 0) continue;
      for (int j = 0; j < 4; ++j) {
        const Index fj = sys.node_to_free[static_cast<std::size_t>(nodes[j])];
        if (fj >= 0) {
          trips.emplace_back(fi, fj, ke[i][j]);
        } else {
          f[fi] -= ke[i][j] * sys.lift[nodes[j]];
        }
      }
    }
  }
  for (Index k = 0; k < sys.free_count(); ++k) f[k] += load[sys.free_to_node[static_cast<std::size_t>(k)]];
  sys.a_free = SparseSym::from_triplets(sys.free_count(), trips);
  sys.f_free = std::move(f);
  return sys;
}

} // namespace

AssembledSystem assemble(const CartesianGrid& grid, const CoefficientField& coeff,
                         const BoundarySpec& bc, const ScalarFunction& source) {
  Vector nodal = Vector::Zero(grid.node_count());
  if (source) {
    for (Index n = 0; n < grid.node_count(); ++n) {
      const auto [x, y] = grid.node_coords(n);
      nodal[n] = source(x, y);
    }
  }
  return assemble_impl(grid, coeff, bc, nodal);
}

AssembledSystem assemble(const CartesianGrid& grid, const CoefficientField& coeff,
                         const BoundarySpec& bc, std::span<const double> nodal_source) {
  if (static_cast<Index>(nodal_source.size()) != grid.node_count()) {
    throw Error(ErrorKind::DimensionMismatch, "nodal source length must equal the node count");
  }
  Vector nodal = Eigen::Map<const Vector>(nodal_source.data(), grid.node_count());
  return assemble_impl(grid, coeff, bc, nodal);
}

Vector AssembledSystem::recover(const Vector& u_free) const {
  if (u_free.size() != free_count()) throw Error(ErrorKind::DimensionMismatch, "recover: wrong length");
  Vector u = lift;
  for (Index k = 0; k < free_count(); ++k) u[free_to_node[static_cast<std::size_t>(k)]] += u_free[k];
  return u;
}

SparseSym assemble_cell_subset(const AssembledSystem& system, std::span<const Index> cells,
                               std::span<const Index> dofs) {
  std::vector<Index> local(static_cast<std::size_t>(system.free_count()), -1);
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    if (dofs[k] < 0 || dofs[k] >= system.free_count()) {
      throw Error(ErrorKind::IndexOutOfRange, "assemble_cell_subset: dof out of range");
    }
    local[static_cast<std::size_t>(dofs[k])] = static_cast<Index>(k);
  }
  const CartesianGrid& grid = system.grid;
  std::vector<Triplet> trips;
  trips.reserve(cells.size() * 16);
  for (Index c : cells) {
    const auto ke = element_stiffness(system.coeff.values[static_cast<std::size_t>(c)], grid.hx(), grid.hy());
    const auto nodes = grid.cell_nodes(c);
    std::array<Index, 4> loc{};
    for (int i = 0; i < 4; ++i) {
      const Index f = system.node_to_free[static_cast<std::size_t>(nodes[i])];
      loc[i] = f >= 0 ? local[static_cast<std::size_t>(f)] : -1;
    }
    for (int i = 0; i < 4; ++i) {
      if (loc[i] < 0) continue;
      for (int j = 0; j < 4; ++j) {
        if (loc[j] >= 0) trips.emplace_back(loc[i], loc[j], ke[i][j]);
      }
    }
  }
  return SparseSym::from_triplets(static_cast<Index>(dofs.size()), trips);
}

void write_solution_csv(const std::string& path, const CartesianGrid& grid, const Vector& u_nodal) {
  if (u_nodal.size() != grid.node_count()) throw Error(ErrorKind::DimensionMismatch, "solution length");
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path);
  os << "x,y,u\n" << std::setprecision(17);
  for (Index n = 0; n < grid.node_count(); ++n) {
    const auto [x, y] = grid.node_coords(n);
    os << x << ',' << y << ',' << u_nodal[n] << '\n';
  }
}

} // namespace msgfem
