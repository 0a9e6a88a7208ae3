#include "doctest.h"
#include "msgfem/error.hpp"
#include "msgfem/fem_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace msgfem;

namespace {

double zero_source(double, double) { return 0.0; }

Vector solve_nodal(const AssembledSystem& sys) {
  const Vector u = factorize(sys.a_free).solve(sys.f_free);
  return sys.recover(u);
}

// Q1 stiffness on [0,hx]x[0,hy] by 2x2 Gauss quadrature, nodes counter-clockwise
// from the lower-left corner.
std::array<std::array<double, 4>, 4> quadrature_stiffness(double c, double hx, double hy) {
  const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  std::array<std::array<double, 4>, 4> k{};
  for (double s : g) {
    for (double t : g) {
      const double dx[4] = {-(1 - t) / hx, (1 - t) / hx, t / hx, -t / hx};
      const double dy[4] = {-(1 - s) / hy, -s / hy, s / hy, (1 - s) / hy};
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) k[a][b] += 0.25 * hx * hy * c * (dx[a] * dx[b] + dy[a] * dy[b]);
      }
    }
  }
  return k;
}

} // namespace

TEST_CASE("grid numbering") {
  const CartesianGrid g(4, 3, 2.0, 1.5);
  CHECK(g.node_count() == 20);
  CHECK(g.cell_count() == 12);
  const auto nodes = g.cell_nodes(g.cell(1, 2));
  CHECK(nodes[0] == g.node(1, 2));
  CHECK(nodes[1] == g.node(2, 2));
  CHECK(nodes[2] == g.node(2, 3));
  CHECK(nodes[3] == g.node(1, 3));
  const auto xy = g.node_coords(g.node(4, 3));
  CHECK(xy[0] == doctest::Approx(2.0));
  CHECK(xy[1] == doctest::Approx(1.5));
  CHECK_THROWS_AS(CartesianGrid(1, 5), Error);
}

TEST_CASE("element stiffness equals Gauss quadrature of the bilinear gradients") {
  for (auto [c, hx, hy] : {std::array<double, 3>{1.0, 0.1, 0.1}, {3.5, 0.2, 0.05}, {1e6, 1.0 / 64, 1.0 / 32}}) {
    const auto k = element_stiffness(c, hx, hy);
    const auto ref = quadrature_stiffness(c, hx, hy);
    for (int a = 0; a < 4; ++a) {
      double row = 0.0;
      for (int b = 0; b < 4; ++b) {
        CHECK(k[a][b] == doctest::Approx(ref[a][b]).epsilon(1e-13));
        CHECK(k[a][b] == k[b][a]);
        row += k[a][b];
      }
      CHECK(std::abs(row) <= 1e-12 * c);
    }
  }
  CHECK_THROWS_AS((void)element_stiffness(0.0, 1.0, 1.0), Error);
}

TEST_CASE("patch test: linear Dirichlet data is reproduced exactly") {
  const CartesianGrid g(7, 5, 1.0, 2.0);
  const auto exact = [](double x, double y) { return 1.0 + 2.0 * x - 3.0 * y; };
  const AssembledSystem sys =
      assemble(g, CoefficientField::constant(g, 2.5), BoundarySpec::all_dirichlet(exact), zero_source);
  CHECK(sys.free_count() == 6 * 4);
  const Vector u = solve_nodal(sys);
  for (Index n = 0; n < g.node_count(); ++n) {
    const auto xy = g.node_coords(n);
    CHECK(u[n] == doctest::Approx(exact(xy[0], xy[1])).epsilon(1e-12));
  }
}

TEST_CASE("Neumann flux on the right side gives u = q x / c") {
  const CartesianGrid g(8, 6);
  const double c = 4.0, q = 2.0;
  BoundarySpec bc;
  bc[Side::left] = SideCondition::dirichlet(0.0);
  bc[Side::right] = SideCondition::neumann(q);
  bc[Side::bottom] = SideCondition::neumann(0.0);
  bc[Side::top] = SideCondition::neumann(0.0);
  const AssembledSystem sys = assemble(g, CoefficientField::constant(g, c), bc, zero_source);
  CHECK(sys.free_count() == 8 * 7);
  const Vector u = solve_nodal(sys);
  for (Index n = 0; n < g.node_count(); ++n) {
    CHECK(u[n] == doctest::Approx(q * g.node_coords(n)[0] / c).epsilon(1e-12));
  }
}

TEST_CASE("constant source: discrete solution satisfies the global balance") {
  // Sum of the free equations of a pure-Neumann-except-left problem: the
  // load vector of a unit source integrates to the area minus the Dirichlet column share.
  const CartesianGrid g(4, 4);
  BoundarySpec bc;
  bc[Side::left] = SideCondition::dirichlet(0.0);
  bc[Side::right] = SideCondition::neumann(0.0);
  bc[Side::bottom] = SideCondition::neumann(0.0);
  bc[Side::top] = SideCondition::neumann(0.0);
  const AssembledSystem sys =
      assemble(g, CoefficientField::constant(g, 1.0), bc, [](double, double) { return 1.0; });
  // Total load is 1; the left column of nodes carries h/2 * 1 of it.
  CHECK(sys.f_free.sum() == doctest::Approx(1.0 - 0.125).epsilon(1e-14));
}

TEST_CASE("Dirichlet corners take the value of the earlier side") {
  const CartesianGrid g(4, 4);
  BoundarySpec bc;
  bc[Side::left] = SideCondition::dirichlet(1.0);
  bc[Side::right] = SideCondition::dirichlet(2.0);
  bc[Side::bottom] = SideCondition::dirichlet(3.0);
  bc[Side::top] = SideCondition::dirichlet(4.0);
  const AssembledSystem sys = assemble(g, CoefficientField::constant(g, 1.0), bc, zero_source);
  CHECK(sys.lift[g.node(0, 0)] == 1.0);
  CHECK(sys.lift[g.node(0, 4)] == 1.0);
  CHECK(sys.lift[g.node(4, 0)] == 2.0);
  CHECK(sys.lift[g.node(4, 4)] == 2.0);
  CHECK(sys.lift[g.node(2, 0)] == 3.0);
  CHECK(sys.lift[g.node(2, 4)] == 4.0);
  CHECK(sys.free_count() == 9);
}

TEST_CASE("Neumann corners next to a Dirichlet side stay fixed") {
  const CartesianGrid g(4, 4);
  BoundarySpec bc;
  bc[Side::left] = SideCondition::dirichlet(5.0);
  bc[Side::right] = SideCondition::neumann(0.0);
  bc[Side::bottom] = SideCondition::neumann(0.0);
  bc[Side::top] = SideCondition::neumann(0.0);
  const AssembledSystem sys = assemble(g, CoefficientField::constant(g, 1.0), bc, zero_source);
  CHECK_FALSE(sys.is_free(g.node(0, 0)));
  CHECK(sys.is_free(g.node(4, 0)));
  CHECK(sys.lift[g.node(0, 4)] == 5.0);
}

TEST_CASE("invalid inputs") {
  const CartesianGrid g(4, 4);
  BoundarySpec neumann;
  for (auto& s : neumann.sides) s = SideCondition::neumann(0.0);
  try {
    (void)assemble(g, CoefficientField::constant(g, 1.0), neumann, zero_source);
    FAIL("expected AllNeumann");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::AllNeumann);
  }
  CoefficientField bad = CoefficientField::constant(g, 1.0);
  bad.values[3] = 0.0;
  try {
    (void)assemble(g, bad, BoundarySpec::all_dirichlet(0.0), zero_source);
    FAIL("expected NonpositiveCoefficient");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonpositiveCoefficient);
  }
  try {
    (void)skyscraper_coefficient(g, 1e3, 5, 2, 0.3, 1);
    FAIL("expected InvalidBlockCount");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidBlockCount);
  }
}

TEST_CASE("skyscraper field: block count, contrast and seeding") {
  const CartesianGrid g(64, 64);
  const auto a = skyscraper_coefficient(g, 1e6, 8, 8, 0.3, 7);
  const auto b = skyscraper_coefficient(g, 1e6, 8, 8, 0.3, 7);
  const auto c = skyscraper_coefficient(g, 1e6, 8, 8, 0.3, 8);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  const auto high = std::count(a.values.begin(), a.values.end(), 1e6);
  CHECK(high == 19 * 64);  // round(0.3 * 64) blocks of 8 x 8 cells
  CHECK(a.alpha() == 1.0);
  CHECK(a.beta() == 1e6);
  // Each block is uniform.
  for (Index by = 0; by < 8; ++by) {
    for (Index bx = 0; bx < 8; ++bx) {
      const double v = a.values[static_cast<std::size_t>(g.cell(8 * bx, 8 * by))];
      for (Index iy = 8 * by; iy < 8 * by + 8; ++iy) {
        for (Index ix = 8 * bx; ix < 8 * bx + 8; ++ix) CHECK(a.values[static_cast<std::size_t>(g.cell(ix, iy))] == v);
      }
    }
  }
}

TEST_CASE("assembling every cell on every free dof reproduces the global matrix") {
  const CartesianGrid g(12, 10);
  const auto coeff = skyscraper_coefficient(g, 1e4, 4, 5, 0.4, 3);
  BoundarySpec bc;
  bc[Side::left] = SideCondition::dirichlet(1.0);
  bc[Side::right] = SideCondition::dirichlet(-1.0);
  bc[Side::bottom] = SideCondition::neumann(-1.0);
  bc[Side::top] = SideCondition::neumann(1.0);
  const AssembledSystem sys = assemble(g, coeff, bc, source_example1);
  std::vector<Index> cells(static_cast<std::size_t>(g.cell_count()));
  std::iota(cells.begin(), cells.end(), 0);
  std::vector<Index> dofs(static_cast<std::size_t>(sys.free_count()));
  std::iota(dofs.begin(), dofs.end(), 0);
  const DenseMatrix full = assemble_cell_subset(sys, cells, dofs).to_dense();
  CHECK((full - sys.a_free.to_dense()).norm() <= 1e-14 * full.norm());
}
