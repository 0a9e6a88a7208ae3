#pragma once

// Instance builders and dense reference implementations shared by the unit
// tests and the acceptance runner. Everything here is deliberately naive:
// dense matrices, explicit inverses, SVD null spaces.

#include "msgfem/decomposition.hpp"
#include "msgfem/experiment.hpp"
#include "msgfem/fem_grid.hpp"
#include "msgfem/linalg.hpp"
#include "msgfem/schwarz.hpp"
#include "msgfem/spectral_basis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace msgfem::testing {

inline ExperimentConfig skyscraper_config(Index n, Index p, Index overlap, Index ovsp, Index modes,
                                          double contrast = 1e6) {
  ExperimentConfig c;
  c.grid.nx = c.grid.ny = n;
  c.coefficient.contrast = contrast;
  c.decomposition = {p, p, overlap, ovsp};
  c.modes = {modes};
  return c;
}

inline Vector random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline double a_norm(const SparseSym& a, const Vector& v) { return std::sqrt(std::max(a.energy(v), 0.0)); }

inline DenseMatrix restriction(Index n, const std::vector<Index>& dofs) {
  DenseMatrix r = DenseMatrix::Zero(static_cast<Index>(dofs.size()), n);
  for (std::size_t k = 0; k < dofs.size(); ++k) r(static_cast<Index>(k), dofs[k]) = 1.0;
  return r;
}

/// Dense B for a scheme, assembled from explicit inverses of the local
/// principal submatrices and of the coarse matrix.
inline DenseMatrix dense_preconditioner(const AssembledSystem& sys, const Decomposition& decomp,
                                        const PartitionOfUnity& pu, Scheme scheme,
                                        const CoarseSpace* coarse) {
  const Index n = sys.free_count();
  const DenseMatrix a = sys.a_free.to_dense();
  DenseMatrix b1 = DenseMatrix::Zero(n, n);
  for (Index i = 0; i < decomp.size(); ++i) {
    const auto& dofs = scheme == Scheme::as2_geneo ? decomp[i].dofs0 : decomp[i].dofs0_star;
    if (dofs.empty()) continue;
    const DenseMatrix r = restriction(n, dofs);
    const DenseMatrix ai = r * a * r.transpose();
    DenseMatrix inv = ai.inverse();
    if (scheme == Scheme::hybrid_ras || scheme == Scheme::ras) {
      inv = pu_weights_on(pu, decomp, i, dofs).asDiagonal() * inv;
    }
    b1 += r.transpose() * inv * r;
  }
  if (!coarse) return b1;
  const DenseMatrix c = DenseMatrix(coarse->basis);
  const DenseMatrix q = c * (c.transpose() * a * c).inverse() * c.transpose();
  if (scheme == Scheme::hybrid_ras || scheme == Scheme::hybrid_as) {
    return b1 + q * (DenseMatrix::Identity(n, n) - a * b1);
  }
  return b1 + q;
}

using Ext = long double;
using ExtMatrix = Eigen::Matrix<Ext, Eigen::Dynamic, Eigen::Dynamic>;
using ExtVector = Eigen::Matrix<Ext, Eigen::Dynamic, 1>;

/// Null space of a wide matrix from its SVD, rows equilibrated first.
inline ExtMatrix null_space(ExtMatrix rows, Index expected_dim) {
  for (Index i = 0; i < rows.rows(); ++i) rows.row(i) /= rows.row(i).norm();
  Eigen::BDCSVD<ExtMatrix> svd(rows, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(expected_dim);
}

struct OracleSpectrum {
  Index kernel_dim = 0;
  Vector eigenvalues;  // finite, descending
};

/// Finite eigenvalues of K x = lambda M x with M positive semidefinite: the
/// finite eigenvectors satisfy Z^T K x = 0 for Z spanning ker M, and on that
/// subspace M is definite. Computed in extended precision.
inline OracleSpectrum finite_pencil_spectrum(const ExtMatrix& k, const ExtMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ExtMatrix> me(Ext(0.5) * (m + m.transpose()));
  const Ext tol = Ext(1e-12) * me.eigenvalues().cwiseAbs().maxCoeff();
  Index zdim = 0;
  while (zdim < me.eigenvalues().size() && me.eigenvalues()[zdim] <= tol) ++zdim;
  OracleSpectrum out;
  out.kernel_dim = zdim;
  ExtMatrix w;
  if (zdim == 0) {
    w = ExtMatrix::Identity(k.rows(), k.rows());
  } else {
    const ExtMatrix z = me.eigenvectors().leftCols(zdim);
    const ExtMatrix ztk = z.transpose() * k;
    Eigen::BDCSVD<ExtMatrix> svd(ztk, Eigen::ComputeFullV);
    w = svd.matrixV().rightCols(k.rows() - zdim);
  }
  const ExtMatrix kw = w.transpose() * k * w;
  const ExtMatrix mw = w.transpose() * m * w;
  Eigen::GeneralizedSelfAdjointEigenSolver<ExtMatrix> ge(Ext(0.5) * (kw + kw.transpose()),
                                                          Ext(0.5) * (mw + mw.transpose()));
  out.eigenvalues = ge.eigenvalues().reverse().cast<double>();
  return out;
}

/// MS-GFEM spectrum from an explicit basis of the discrete a-harmonic space
/// on omega_i*: the null space of the interior rows of the local stiffness.
inline OracleSpectrum harmonic_basis_oracle(const AssembledSystem& sys, const Decomposition& decomp,
                                            const PartitionOfUnity& pu, Index i) {
  const Subdomain& s = decomp[i];
  const ExtMatrix a_star = assemble_cell_subset(sys, s.cells_star, s.dofs_star).to_dense().cast<Ext>();
  const auto n_star = static_cast<Index>(s.dofs_star.size());
  std::vector<Index> interior;
  for (std::size_t p = 0, q = 0; p < s.dofs_star.size(); ++p) {
    while (q < s.dofs0_star.size() && s.dofs0_star[q] < s.dofs_star[p]) ++q;
    if (q < s.dofs0_star.size() && s.dofs0_star[q] == s.dofs_star[p]) interior.push_back(static_cast<Index>(p));
  }
  ExtMatrix rows(static_cast<Index>(interior.size()), n_star);
  for (std::size_t r = 0; r < interior.size(); ++r) rows.row(static_cast<Index>(r)) = a_star.row(interior[r]);
  const ExtMatrix basis = null_space(rows, n_star - static_cast<Index>(interior.size()));

  const ExtVector chi = pu_weights_on(pu, decomp, i, s.dofs_star).cast<Ext>();
  const ExtMatrix a_omega = assemble_cell_subset(sys, s.cells, s.dofs_star).to_dense().cast<Ext>();
  const ExtMatrix p = chi.asDiagonal() * a_omega * chi.asDiagonal();
  return finite_pencil_spectrum(basis.transpose() * p * basis, basis.transpose() * a_star * basis);
}

/// GenEO spectrum assembled cell by cell from element matrices.
inline OracleSpectrum geneo_oracle(const AssembledSystem& sys, const Decomposition& decomp,
                                   const PartitionOfUnity& pu, Index i) {
  const Subdomain& s = decomp[i];
  const CartesianGrid& g = sys.grid;
  const auto n = static_cast<Index>(s.dofs.size());
  std::vector<Index> pos(static_cast<std::size_t>(sys.free_count()), -1);
  for (std::size_t k = 0; k < s.dofs.size(); ++k) pos[static_cast<std::size_t>(s.dofs[k])] = static_cast<Index>(k);
  ExtMatrix lhs_raw = ExtMatrix::Zero(n, n), rhs = ExtMatrix::Zero(n, n);
  for (Index c : s.cells) {
    const Index ix = c % g.nx, iy = c / g.nx;
    bool in_overlap = false;
    for (const auto& o : decomp.subdomains) in_overlap = in_overlap || (o.id != s.id && o.omega.contains(ix, iy));
    const auto ke = element_stiffness(sys.coeff.values[static_cast<std::size_t>(c)], g.hx(), g.hy());
    const auto nodes = g.cell_nodes(c);
    for (int a = 0; a < 4; ++a) {
      const Index fa = sys.node_to_free[static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)])];
      if (fa < 0) continue;
      for (int b = 0; b < 4; ++b) {
        const Index fb = sys.node_to_free[static_cast<std::size_t>(nodes[static_cast<std::size_t>(b)])];
        if (fb < 0) continue;
        const Index pa = pos[static_cast<std::size_t>(fa)], pb = pos[static_cast<std::size_t>(fb)];
        const double v = ke[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        rhs(pa, pb) += v;
        if (in_overlap) lhs_raw(pa, pb) += v;
      }
    }
  }
  const ExtVector chi = pu_weights_on(pu, decomp, i, s.dofs).cast<Ext>();
  return finite_pencil_spectrum(chi.asDiagonal() * lhs_raw * chi.asDiagonal(), rhs);
}

inline double max_relative_gap(const Vector& a, const Vector& b, Index count) {
  double worst = 0.0;
  for (Index k = 0; k < count; ++k) {
    const double scale = std::max(std::abs(a[k]), std::abs(b[k]));
    if (scale > 0.0) worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

} // namespace msgfem::testing
