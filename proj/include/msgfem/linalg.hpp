#pragma once

#include "msgfem/exec.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace msgfem {

using Index = int;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using Triplet = Eigen::Triplet<double, Index>;
/// Extended precision (x87 80-bit on x86-64) for ill-conditioned dense pencils.
using ExtendedMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

/// Symmetric sparse matrix in compressed row storage. Both triangles are
/// stored; symmetry is an invariant checked on construction.
class SparseSym {
public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

  SparseSym() = default;
  explicit SparseSym(Storage m);

  static SparseSym from_triplets(Index n, std::span<const Triplet> triplets);
  static SparseSym from_dense(const DenseMatrix& m);
  static SparseSym identity(Index n);

  Index size() const { return static_cast<Index>(m_.rows()); }
  Index nonzeros() const { return static_cast<Index>(m_.nonZeros()); }
  const Storage& matrix() const { return m_; }

  Vector multiply(const Vector& x, Exec exec = Exec::serial) const;
  void multiply(const Vector& x, Vector& y, Exec exec = Exec::serial) const;

  /// x^T A x
  double energy(const Vector& x, Exec exec = Exec::serial) const;

  double max_abs_diagonal() const;
  double norm_inf() const;
  DenseMatrix to_dense() const;

private:
  Storage m_;
};

/// Principal submatrix A[idx, idx]; idx must be strictly increasing.
SparseSym extract_submatrix(const SparseSym& a, std::span<const Index> idx);

/// Off-diagonal block A[rows, cols] as a dense matrix.
DenseMatrix extract_block(const SparseSym& a, std::span<const Index> rows,
                          std::span<const Index> cols);

/// Sparse LDL^T factorization with AMD fill-reducing ordering. Copies share
/// the same immutable numeric factor.
class SparseFactor {
public:
  SparseFactor() = default;

  Index size() const { return n_; }
  bool empty() const { return impl_ == nullptr; }

  Vector solve(const Vector& rhs) const;
  DenseMatrix solve(const DenseMatrix& rhs) const;

  /// Smallest and largest pivot of D, used by diagnostics.
  double min_pivot() const { return min_pivot_; }
  double max_pivot() const { return max_pivot_; }

  struct Impl;

private:
  friend SparseFactor factorize(const SparseSym& a);
  std::shared_ptr<const Impl> impl_;
  Index n_ = 0;
  double min_pivot_ = 0.0;
  double max_pivot_ = 0.0;
};

/// Throws NotPositiveDefinite when a pivot falls below 1e-14 * max|diag(A)|.
SparseFactor factorize(const SparseSym& a);
Vector solve(const SparseFactor& factor, const Vector& rhs);

/// Solve followed by one step of iterative refinement against `a`, the
/// matrix `factor` was computed from. Still a fixed linear map of `rhs`.
Vector solve_refined(const SparseSym& a, const SparseFactor& factor, const Vector& rhs);

/// Result of K x = lambda M x on the range of M.
struct DensePencilEig {
  Vector eigenvalues;         // descending
  DenseMatrix eigenvectors;   // M-orthonormal columns
  Index kernel_dim = 0;       // dim ker(M); these modes have lambda = +inf
  DenseMatrix kernel_vectors; // orthonormal basis of ker(M)
  /// ||K x - lambda M x|| / ((||K|| + |lambda| ||M||) ||x||) per finite pair
  Vector residuals;
};

/// Dense symmetric generalized eigensolver for PSD K and PSD (possibly
/// singular) M. When M is singular the finite spectrum is computed on the
/// complement of ker(M) that is K-orthogonal to ker(M).
DensePencilEig dense_generalized_sym_eig(const DenseMatrix& k, const DenseMatrix& m);
/// Same algorithm carried out in extended precision; results are rounded to double.
DensePencilEig dense_generalized_sym_eig(const ExtendedMatrix& k, const ExtendedMatrix& m);

/// Relative threshold below which an eigenvalue of M counts as zero.
inline constexpr double kKernelThreshold = 1e-12;

double symmetry_defect(const DenseMatrix& m);

void write_matrix_market(std::ostream& os, const SparseSym& a);
void write_matrix_market(const std::string& path, const SparseSym& a);
SparseSym read_matrix_market(std::istream& is);
SparseSym read_matrix_market(const std::string& path);

} // namespace msgfem
