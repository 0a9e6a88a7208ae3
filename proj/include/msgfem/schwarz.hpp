#pragma once

#include "msgfem/decomposition.hpp"
#include "msgfem/exec.hpp"
#include "msgfem/fem_grid.hpp"
#include "msgfem/linalg.hpp"
#include "msgfem/spectral_basis.hpp"

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace msgfem {

enum class Scheme { hybrid_ras, ras, as, hybrid_as, as2_geneo };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view name);
bool is_hybrid(Scheme s);
bool uses_partition_of_unity(Scheme s);
BasisKind coarse_kind(Scheme s);

using LinearOperator = std::function<Vector(const Vector&)>;

/// One local Dirichlet solve: restriction to `dofs`, factorized principal
/// submatrix of A with one refinement step, optional nodal scaling.
struct LocalSolver {
  std::vector<Index> dofs;
  SparseSym matrix;
  SparseFactor factor;
  Vector weights;  // empty when the scheme does not scale
};

/// Two-level Schwarz preconditioner. Application is read-only and thread safe.
class Preconditioner {
public:
  Preconditioner() = default;

  static Preconditioner build(const AssembledSystem& system, const Decomposition& decomp,
                              const PartitionOfUnity& pu, Scheme scheme,
                              std::shared_ptr<const CoarseSpace> coarse, Exec exec = Exec::parallel);

  Scheme scheme() const { return scheme_; }
  Exec exec() const { return exec_; }
  Index size() const { return n_; }
  const std::vector<LocalSolver>& local_solvers() const { return locals_; }
  const CoarseSpace* coarse() const { return coarse_.get(); }

  Vector apply_one_level(const Vector& r) const { return apply_one_level(r, exec_); }
  Vector apply_one_level(const Vector& r, Exec exec) const;

  /// R_S^T A_S^{-1} R_S r, or 0 without a coarse space.
  Vector coarse_correction(const Vector& r) const;

  Vector apply(const Vector& r) const { return apply(r, exec_); }
  Vector apply(const Vector& r, Exec exec) const;

  /// G(v) = B A v
  Vector msgfem_map(const Vector& v) const;

  LinearOperator as_operator() const;

private:
  Scheme scheme_ = Scheme::hybrid_ras;
  Exec exec_ = Exec::parallel;
  Index n_ = 0;
  const SparseSym* a_ = nullptr;
  std::vector<LocalSolver> locals_;
  std::shared_ptr<const CoarseSpace> coarse_;
};

} // namespace msgfem
