#include "doctest.h"
#include "msgfem/decomposition.hpp"
#include "msgfem/error.hpp"
#include "test_support.hpp"

#include "json.hpp"

#include <algorithm>

using namespace msgfem;
using namespace msgfem::testing;

namespace {

AssembledSystem small_system(Index n) {
  return build_problem(skyscraper_config(n, 2, 1, 1, 4, 1e2)).system;
}

bool is_subset(const std::vector<Index>& a, const std::vector<Index>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

} // namespace

TEST_CASE("coloring constants") {
  const AssembledSystem sys = small_system(8);
  const Decomposition d = build_decomposition(sys, 2, 2, 1, 1);
  CHECK(d.size() == 4);
  CHECK(d.xi == 4);
  CHECK(d.xi_star == 4);

  const Decomposition strip = build_decomposition(sys, 4, 1, 1, 1);
  // Widths 2 grown by one layer: the node at x = 3 touches cells of omega_0..2.
  CHECK(strip.xi == 3);
  CHECK(strip.xi_star == 4);

  const Decomposition one = build_decomposition(sys, 1, 1, 1, 1);
  CHECK(one.xi == 1);
  CHECK(one.xi_star == 1);
}

TEST_CASE("boxes are nested and blocks tile the grid") {
  const AssembledSystem sys = small_system(16);
  const Decomposition d = build_decomposition(sys, 3, 2, 2, 3);
  std::vector<int> owner(static_cast<std::size_t>(sys.grid.cell_count()), 0);
  for (const auto& s : d.subdomains) {
    for (Index c : s.block.cells(sys.grid)) ++owner[static_cast<std::size_t>(c)];
    CHECK(s.omega == s.block.grown(2, sys.grid));
    CHECK(s.omega_star == s.omega.grown(3, sys.grid));
    CHECK(is_subset(s.dofs0, s.dofs));
    CHECK(is_subset(s.dofs, s.dofs0_star));
    CHECK(is_subset(s.dofs0_star, s.dofs_star));
    CHECK(s.boundary_star.size() + s.dofs0_star.size() == s.dofs_star.size());
    CHECK_FALSE(s.boundary_star.empty());
  }
  CHECK(std::all_of(owner.begin(), owner.end(), [](int k) { return k == 1; }));
}

TEST_CASE("dofs0 holds exactly the free nodes whose cells all lie in omega") {
  const AssembledSystem sys = small_system(10);
  const Decomposition d = build_decomposition(sys, 2, 2, 1, 2);
  const CartesianGrid& g = sys.grid;
  for (const auto& s : d.subdomains) {
    std::vector<Index> expected;
    for (Index f = 0; f < sys.free_count(); ++f) {
      const Index node = sys.free_to_node[static_cast<std::size_t>(f)];
      const Index ix = node % (g.nx + 1), iy = node / (g.nx + 1);
      bool inside = true;
      for (Index cy = iy - 1; cy <= iy; ++cy) {
        for (Index cx = ix - 1; cx <= ix; ++cx) {
          if (cx < 0 || cy < 0 || cx >= g.nx || cy >= g.ny) continue;
          inside = inside && s.omega.contains(cx, cy);
        }
      }
      if (inside) expected.push_back(f);
    }
    CHECK(s.dofs0 == expected);
  }
}

TEST_CASE("partition of unity sums to one and vanishes on interior sides") {
  const AssembledSystem sys = small_system(16);
  for (auto [px, py, l] : {std::array<Index, 3>{2, 2, 1}, {4, 4, 2}, {3, 1, 3}}) {
    const Decomposition d = build_decomposition(sys, px, py, l, 1);
    const PartitionOfUnity pu = build_partition_of_unity(d);
    Vector sum = Vector::Zero(sys.free_count());
    for (Index i = 0; i < d.size(); ++i) {
      const Subdomain& s = d[i];
      const Vector& w = pu.weights[static_cast<std::size_t>(i)];
      CHECK(w.minCoeff() >= 0.0);
      CHECK(w.maxCoeff() <= 1.0);
      add_extended(sum, s.dofs, w);
      const Vector on_edge = pu_weights_on(pu, d, i, s.dofs);
      for (std::size_t k = 0; k < s.dofs.size(); ++k) {
        if (!std::binary_search(s.dofs0.begin(), s.dofs0.end(), s.dofs[k])) {
          CHECK(on_edge[static_cast<Index>(k)] == 0.0);
        }
      }
    }
    CHECK((sum - Vector::Ones(sys.free_count())).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("single subdomain covers everything") {
  const AssembledSystem sys = small_system(8);
  const Decomposition d = build_decomposition(sys, 1, 1, 1, 1);
  const PartitionOfUnity pu = build_partition_of_unity(d);
  CHECK(d[0].boundary_star.empty());
  CHECK(static_cast<Index>(d[0].dofs0_star.size()) == sys.free_count());
  CHECK((pu.weights[0].array() == 1.0).all());
}

TEST_CASE("invalid decompositions") {
  const AssembledSystem sys = small_system(8);
  try {
    (void)build_decomposition(sys, 9, 1, 1, 1);
    FAIL("expected GridTooSmall");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GridTooSmall);
  }
  CHECK_THROWS_AS((void)build_decomposition(sys, 2, 2, 0, 1), Error);
  CHECK_THROWS_AS((void)build_decomposition(sys, 0, 2, 1, 1), Error);
}

TEST_CASE("restriction and extension are adjoint") {
  const Vector g = random_vector(20, 4);
  const std::vector<Index> dofs{1, 5, 6, 19};
  const Vector local = random_vector(4, 9);
  Vector ext = Vector::Zero(20);
  add_extended(ext, dofs, local);
  CHECK(restrict_to(g, dofs).dot(local) == doctest::Approx(g.dot(ext)).epsilon(1e-15));
  CHECK(restrict_to(ext, dofs) == local);
}

TEST_CASE("summary json") {
  const AssembledSystem sys = small_system(8);
  const Decomposition d = build_decomposition(sys, 2, 2, 1, 1);
  const auto j = nlohmann::json::parse(decomposition_summary_json(d));
  CHECK(j["xi"] == 4);
  CHECK(j["subdomains"].size() == 4);
  CHECK(j["subdomains"][0]["boundary_omega_star"] == d[0].boundary_star.size());
}
