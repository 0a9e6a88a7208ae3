#pragma once

#include "msgfem/decomposition.hpp"
#include "msgfem/exec.hpp"
#include "msgfem/fem_grid.hpp"
#include "msgfem/linalg.hpp"

#include <Eigen/Cholesky>

#include <string>
#include <vector>

namespace msgfem {

enum class BasisKind { msgfem, geneo };

/// Local solution of the PDE on omega_i* with zero data on the interior
/// boundary, returned on dofs(omega_i*).
Vector local_particular_solve(const AssembledSystem& system, const Decomposition& decomp, Index i);

/// Particular functions of all subdomains and their PU-glued sum u^p.
struct ParticularField {
  std::vector<Vector> local;
  Vector glued;
};

ParticularField build_particular_field(const AssembledSystem& system, const Decomposition& decomp,
                                       const PartitionOfUnity& pu);

/// The a-harmonic eigenproblem on omega_i* after eliminating the interior
/// dofs. Boundary values x (on boundary_star) extend harmonically to H x on
/// dofs_star; the pencil is gram x = lambda schur x.
/// The pencil is formed in extended precision: with high contrast its
/// eigenvalues span many orders of magnitude and the Schur complement
/// cancels large entries. The double members are rounded copies.
struct HarmonicReduction {
  Index subdomain = 0;
  std::vector<Index> interior_pos;  // positions of dofs0_star inside dofs_star
  std::vector<Index> boundary_pos;  // positions of boundary_star inside dofs_star
  SparseSym local_stiffness;        // a_{omega*} on dofs_star
  ExtendedMatrix extension_ext;     // H, |dofs_star| x |boundary_star|
  ExtendedMatrix schur_ext;         // S = A22 - A21 A11^{-1} A12
  ExtendedMatrix gram_ext;          // H^T P H, P_kl = a_omega(chi psi_k, chi psi_l)
  DenseMatrix extension;
  DenseMatrix schur;
  DenseMatrix gram;
};

HarmonicReduction reduce_to_harmonic(const AssembledSystem& system, const Decomposition& decomp,
                                     const PartitionOfUnity& pu, Index i);

/// Every eigenpair of one local eigenproblem, kept so that bases of any size
/// can be cut from a single eigensolve.
struct LocalSpectrum {
  Index subdomain = 0;
  BasisKind kind = BasisKind::msgfem;
  std::vector<Index> dofs;     // support of the vectors (global free ids)
  DenseMatrix kernel_vectors;  // lambda = +inf modes, Euclidean-normalized
  Vector eigenvalues;          // finite part, descending
  DenseMatrix eigenvectors;    // energy-normalized, matching eigenvalues

  Index kernel_dim() const { return static_cast<Index>(kernel_vectors.cols()); }
  Index available_modes() const { return kernel_dim() + static_cast<Index>(eigenvalues.size()); }
};

struct LocalSpectralBasis {
  Index subdomain = 0;
  BasisKind kind = BasisKind::msgfem;
  std::vector<Index> dofs;
  Index modes = 0;              // m_i, kernel modes included
  Index kernel_dim = 0;         // l_i
  Vector eigenvalues;           // retained finite eigenvalues, descending
  double next_eigenvalue = 0.0; // lambda_{i, m_i + 1}; 0 once the spectrum is exhausted
  DenseMatrix vectors;          // |dofs| x m_i, kernel modes first
};

LocalSpectrum harmonic_spectrum(const HarmonicReduction& reduction, const Decomposition& decomp);

/// Keeps every kernel mode plus the top (m - l) finite modes. A request
/// smaller than the kernel dimension is raised to it.
LocalSpectralBasis select_modes(const LocalSpectrum& spectrum, Index modes);

LocalSpectralBasis solve_local_eigenproblem(const HarmonicReduction& reduction,
                                            const Decomposition& decomp, Index modes);

/// Overlap-zone eigenproblem on V_h(omega_i) without oversampling.
LocalSpectrum geneo_spectrum(const AssembledSystem& system, const Decomposition& decomp,
                             const PartitionOfUnity& pu, Index i);

LocalSpectralBasis geneo_eigenproblem(const AssembledSystem& system, const Decomposition& decomp,
                                      const PartitionOfUnity& pu, Index i, Index modes);

/// Spectra of all subdomains, computed independently and stored in id order.
/// An oversampling domain covering the whole domain has a trivial harmonic
/// space and yields an empty spectrum.
std::vector<LocalSpectrum> compute_spectra(const AssembledSystem& system, const Decomposition& decomp,
                                           const PartitionOfUnity& pu, BasisKind kind,
                                           Exec exec = Exec::parallel);

std::vector<LocalSpectralBasis> select_all(const std::vector<LocalSpectrum>& spectra,
                                           const std::vector<Index>& modes);

/// (xi * xi_star * max_i lambda_{i, m_i + 1})^{1/2}
double lambda_bound(Index xi, Index xi_star, double max_next_eigenvalue);

/// (1 + xi)(2 + xi(2 xi + 1)) (1 + max_i lambda_{i, m_i + 1})
double geneo_condition_bound(Index xi, double max_next_eigenvalue);

struct CoarseSpace {
  BasisKind kind = BasisKind::msgfem;
  Eigen::SparseMatrix<double> basis;  // R_S^T, columns normalized in the energy norm
  DenseMatrix a_s;                    // R_S A R_S^T
  Eigen::LLT<DenseMatrix> a_s_factor;
  std::vector<Index> column_owner;    // subdomain of each kept column
  Index requested = 0;                // sum of m_i
  Index dropped = 0;                  // columns removed by rank filtering
  double max_next_eigenvalue = 0.0;
  double lambda = 0.0;                // MS-GFEM error bound
  double kappa_bound = 0.0;           // GenEO condition bound

  Index dimension() const { return static_cast<Index>(basis.cols()); }
  /// R_S^T A_S^{-1} R_S r
  Vector correction(const Vector& r) const;
};

CoarseSpace build_coarse_space(const AssembledSystem& system, const Decomposition& decomp,
                               const PartitionOfUnity& pu,
                               const std::vector<LocalSpectralBasis>& bases);

/// CSV "i,k,lambda" with k counted from 1; kernel modes come first as "inf".
void write_spectrum_csv(const std::string& path, const std::vector<LocalSpectrum>& spectra);

} // namespace msgfem
