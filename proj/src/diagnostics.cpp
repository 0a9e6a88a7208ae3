#include "msgfem/diagnostics.hpp"
#include "msgfem/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace msgfem {

namespace {

void check_size(Index n) {
  if (n > kDenseDiagnosticLimit) {
    throw Error(ErrorKind::TooLarge, std::to_string(n) + " dofs exceed the dense diagnostic limit of " +
                                         std::to_string(kDenseDiagnosticLimit));
  }
}

// L^T B L for the Cholesky factor of A.
DenseMatrix transformed(const LinearOperator& b, const SparseSym& a) {
  const Index n = a.size();
  Eigen::LLT<DenseMatrix> llt(a.to_dense());
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "dense Cholesky of A");
  const DenseMatrix l = llt.matrixL();
  DenseMatrix bl(n, n);
  for (Index j = 0; j < n; ++j) bl.col(j) = b(l.col(j));
  return l.transpose() * bl;
}

} // namespace

DenseMatrix dense_operator(const LinearOperator& op, Index n) {
  DenseMatrix out(n, n);
  Vector e = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    out.col(j) = op(e);
    e[j] = 0.0;
  }
  return out;
}

double contraction_norm(const LinearOperator& b, const SparseSym& a) {
  check_size(a.size());
  const DenseMatrix c = DenseMatrix::Identity(a.size(), a.size()) - transformed(b, a);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(c.transpose() * c, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "contraction eigen-solve");
  return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
}

double contraction_norm(const Preconditioner& b, const AssembledSystem& system) {
  return contraction_norm(b.as_operator(), system.a_free);
}

double preconditioned_condition_number(const LinearOperator& b, const SparseSym& a) {
  check_size(a.size());
  const DenseMatrix t = transformed(b, a);
  if ((t - t.transpose()).cwiseAbs().maxCoeff() > 1e-8 * t.cwiseAbs().maxCoeff()) {
    throw Error(ErrorKind::NotSymmetric, "preconditioner is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(0.5 * (t + t.transpose()), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "condition number eigen-solve");
  const double lo = eig.eigenvalues().minCoeff();
  if (!(lo > 0.0)) throw Error(ErrorKind::NotPositiveDefinite, "preconditioned operator is not positive");
  return eig.eigenvalues().maxCoeff() / lo;
}

double preconditioned_condition_number(const Preconditioner& b, const AssembledSystem& system) {
  return preconditioned_condition_number(b.as_operator(), system.a_free);
}

} // namespace msgfem
