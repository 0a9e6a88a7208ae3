#include "msgfem/schwarz.hpp"
#include "msgfem/error.hpp"

namespace msgfem {

std::string_view to_string(Scheme s) {
  switch (s) {
  case Scheme::hybrid_ras: return "hybrid_ras";
  case Scheme::ras: return "ras";
  case Scheme::as: return "as";
  case Scheme::hybrid_as: return "hybrid_as";
  case Scheme::as2_geneo: return "as2_geneo";
  }
  return "unknown";
}

Scheme scheme_from_string(std::string_view name) {
  for (Scheme s : {Scheme::hybrid_ras, Scheme::ras, Scheme::as, Scheme::hybrid_as, Scheme::as2_geneo}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorKind::Config, "unknown scheme '" + std::string(name) + "'");
}

bool is_hybrid(Scheme s) { return s == Scheme::hybrid_ras || s == Scheme::hybrid_as; }

bool uses_partition_of_unity(Scheme s) { return s == Scheme::hybrid_ras || s == Scheme::ras; }

BasisKind coarse_kind(Scheme s) { return s == Scheme::as2_geneo ? BasisKind::geneo : BasisKind::msgfem; }

Preconditioner Preconditioner::build(const AssembledSystem& system, const Decomposition& decomp,
                                     const PartitionOfUnity& pu, Scheme scheme,
                                     std::shared_ptr<const CoarseSpace> coarse, Exec exec) {
  if (!coarse && decomp.size() > 1) {
    throw Error(ErrorKind::MissingCoarseSpace,
                std::string(to_string(scheme)) + " is a two-level scheme and needs a coarse space");
  }
  if (coarse && coarse->basis.rows() != system.free_count()) {
    throw Error(ErrorKind::DimensionMismatch, "coarse basis does not match the system size");
  }
  Preconditioner p;
  p.scheme_ = scheme;
  p.exec_ = exec;
  p.n_ = system.free_count();
  p.a_ = &system.a_free;
  p.coarse_ = std::move(coarse);

  const Index m = decomp.size();
  p.locals_.resize(static_cast<std::size_t>(m));
  std::vector<std::string> errors(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (Index i = 0; i < m; ++i) {
    LocalSolver& ls = p.locals_[static_cast<std::size_t>(i)];
    const Subdomain& s = decomp[i];
    ls.dofs = scheme == Scheme::as2_geneo ? s.dofs0 : s.dofs0_star;
    try {
      if (!ls.dofs.empty()) {
        ls.matrix = extract_submatrix(system.a_free, ls.dofs);
        ls.factor = factorize(ls.matrix);
      }
      if (uses_partition_of_unity(scheme)) ls.weights = pu_weights_on(pu, decomp, i, ls.dofs);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (Index i = 0; i < m; ++i) {
    if (!errors[static_cast<std::size_t>(i)].empty()) {
      throw Error(ErrorKind::NotPositiveDefinite,
                  "local matrix of subdomain " + std::to_string(i) + ": " + errors[static_cast<std::size_t>(i)]);
    }
  }
  return p;
}

Vector Preconditioner::apply_one_level(const Vector& r, Exec exec) const {
  if (r.size() != n_) throw Error(ErrorKind::DimensionMismatch, "preconditioner input length");
  const Index m = static_cast<Index>(locals_.size());
  std::vector<Vector> parts(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (Index i = 0; i < m; ++i) {
    const LocalSolver& ls = locals_[static_cast<std::size_t>(i)];
    if (ls.dofs.empty()) continue;
    Vector z = solve_refined(ls.matrix, ls.factor, restrict_to(r, ls.dofs));
    if (ls.weights.size() > 0) z.array() *= ls.weights.array();
    parts[static_cast<std::size_t>(i)] = std::move(z);
  }
  // Summation in subdomain order keeps the result independent of scheduling.
  Vector out = Vector::Zero(n_);
  for (Index i = 0; i < m; ++i) {
    const auto& z = parts[static_cast<std::size_t>(i)];
    if (z.size() > 0) add_extended(out, locals_[static_cast<std::size_t>(i)].dofs, z);
  }
  return out;
}

Vector Preconditioner::coarse_correction(const Vector& r) const {
  if (!coarse_) return Vector::Zero(n_);
  return coarse_->correction(r);
}

Vector Preconditioner::apply(const Vector& r, Exec exec) const {
  Vector z = apply_one_level(r, exec);
  if (!coarse_) return z;
  if (is_hybrid(scheme_)) {
    const Vector residual = r - a_->multiply(z, exec);
    z += coarse_->correction(residual);
  } else {
    z += coarse_->correction(r);
  }
  return z;
}

Vector Preconditioner::msgfem_map(const Vector& v) const {
  if (scheme_ != Scheme::hybrid_ras) {
    throw Error(ErrorKind::InvalidArgument, "the MS-GFEM map is defined for the hybrid RAS scheme");
  }
  if (v.size() != n_) throw Error(ErrorKind::DimensionMismatch, "msgfem_map input length");
  return apply(a_->multiply(v, exec_));
}

LinearOperator Preconditioner::as_operator() const {
  return [this](const Vector& r) { return apply(r); };
}

} // namespace msgfem
