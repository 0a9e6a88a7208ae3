#include "msgfem/spectral_basis.hpp"
#include "msgfem/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace msgfem {

namespace {

std::vector<Index> positions_in(std::span<const Index> super, std::span<const Index> sub) {
  std::vector<Index> pos;
  pos.reserve(sub.size());
  std::size_t a = 0;
  for (Index v : sub) {
    while (a < super.size() && super[a] < v) ++a;
    if (a == super.size() || super[a] != v) {
      throw Error(ErrorKind::InvalidArgument, "dof list is not a subset of its parent list");
    }
    pos.push_back(static_cast<Index>(a));
  }
  return pos;
}

Eigen::SparseMatrix<double> diagonal_scaled(const SparseSym& a, const Vector& d) {
  Eigen::SparseMatrix<double> m = a.matrix();
  return d.asDiagonal() * m * d.asDiagonal();
}

DenseMatrix symmetrized(const DenseMatrix& m) { return 0.5 * (m + m.transpose()); }

} // namespace

// ---------------------------------------------------------------------------
// Particular solves

Vector local_particular_solve(const AssembledSystem& system, const Decomposition& decomp, Index i) {
  if (i < 0 || i >= decomp.size()) throw Error(ErrorKind::IndexOutOfRange, "subdomain id");
  const Subdomain& s = decomp[i];
  Vector out = Vector::Zero(static_cast<Index>(s.dofs_star.size()));
  if (s.dofs0_star.empty()) return out;
  const SparseSym a0 = extract_submatrix(system.a_free, s.dofs0_star);
  SparseFactor factor;
  try {
    factor = factorize(a0);
  } catch (const Error& e) {
    throw Error(ErrorKind::NotPositiveDefinite, "local particular solve on subdomain " +
                                                    std::to_string(i) + ": " + e.what());
  }
  const Vector phi = factor.solve(restrict_to(system.f_free, s.dofs0_star));
  const auto pos = positions_in(s.dofs_star, s.dofs0_star);
  for (std::size_t k = 0; k < pos.size(); ++k) out[pos[k]] = phi[static_cast<Index>(k)];
  return out;
}

ParticularField build_particular_field(const AssembledSystem& system, const Decomposition& decomp,
                                       const PartitionOfUnity& pu) {
  ParticularField field;
  field.glued = Vector::Zero(system.free_count());
  for (Index i = 0; i < decomp.size(); ++i) {
    field.local.push_back(local_particular_solve(system, decomp, i));
    add_extended(field.glued, decomp[i].dofs_star, pu_apply(pu, decomp, i, field.local.back()));
  }
  return field;
}

// ---------------------------------------------------------------------------
// Harmonic eigenproblem

HarmonicReduction reduce_to_harmonic(const AssembledSystem& system, const Decomposition& decomp,
                                     const PartitionOfUnity& pu, Index i) {
  if (i < 0 || i >= decomp.size()) throw Error(ErrorKind::IndexOutOfRange, "subdomain id");
  const Subdomain& s = decomp[i];
  if (s.boundary_star.empty()) {
    throw Error(ErrorKind::EmptyBoundary,
                "oversampling domain of subdomain " + std::to_string(i) + " has no interior boundary");
  }
  HarmonicReduction red;
  red.subdomain = i;
  red.interior_pos = positions_in(s.dofs_star, s.dofs0_star);
  red.boundary_pos = positions_in(s.dofs_star, s.boundary_star);
  red.local_stiffness = assemble_cell_subset(system, s.cells_star, s.dofs_star);

  using Ext = long double;
  using ExtSparse = Eigen::SparseMatrix<Ext, Eigen::RowMajor, Index>;
  const auto n_star = static_cast<Index>(s.dofs_star.size());
  const auto nb = static_cast<Index>(s.boundary_star.size());
  const DenseMatrix a12 = extract_block(red.local_stiffness, red.interior_pos, red.boundary_pos);
  const ExtendedMatrix a12_ext = a12.cast<Ext>();
  const ExtendedMatrix a22_ext =
      extract_block(red.local_stiffness, red.boundary_pos, red.boundary_pos).cast<Ext>();

  ExtendedMatrix x = ExtendedMatrix::Zero(static_cast<Index>(red.interior_pos.size()), nb);
  if (!red.interior_pos.empty()) {
    // Interior rows of a_{omega*} coincide with rows of the global matrix.
    // X = A11^{-1} A12 from the double factorization, refined against
    // extended-precision residuals.
    const SparseSym a11 = extract_submatrix(system.a_free, s.dofs0_star);
    const SparseFactor factor = factorize(a11);
    const ExtSparse a11_ext = a11.matrix().cast<Ext>();
    x = factor.solve(a12).cast<Ext>();
    for (int step = 0; step < 3; ++step) {
      const ExtendedMatrix r = a12_ext - a11_ext * x;
      x += factor.solve(DenseMatrix(r.cast<double>())).cast<Ext>();
    }
  }
  red.extension_ext = ExtendedMatrix::Zero(n_star, nb);
  for (std::size_t k = 0; k < red.interior_pos.size(); ++k) {
    red.extension_ext.row(red.interior_pos[k]) = -x.row(static_cast<Index>(k));
  }
  for (Index k = 0; k < nb; ++k) red.extension_ext(red.boundary_pos[static_cast<std::size_t>(k)], k) = 1.0L;
  const ExtendedMatrix schur = a22_ext - a12_ext.transpose() * x;
  red.schur_ext = Ext(0.5) * (schur + schur.transpose());

  const Vector chi = pu_weights_on(pu, decomp, i, s.dofs_star);
  const SparseSym a_omega = assemble_cell_subset(system, s.cells, s.dofs_star);
  const Eigen::Matrix<Ext, Eigen::Dynamic, 1> chi_ext = chi.cast<Ext>();
  const ExtSparse p = chi_ext.asDiagonal() * ExtSparse(a_omega.matrix().cast<Ext>()) * chi_ext.asDiagonal();
  const ExtendedMatrix ph = p * red.extension_ext;
  const ExtendedMatrix gram = red.extension_ext.transpose() * ph;
  red.gram_ext = Ext(0.5) * (gram + gram.transpose());

  red.extension = red.extension_ext.cast<double>();
  red.schur = red.schur_ext.cast<double>();
  red.gram = red.gram_ext.cast<double>();
  return red;
}

LocalSpectrum harmonic_spectrum(const HarmonicReduction& reduction, const Decomposition& decomp) {
  const DensePencilEig eig = dense_generalized_sym_eig(reduction.gram_ext, reduction.schur_ext);
  LocalSpectrum out;
  out.subdomain = reduction.subdomain;
  out.kind = BasisKind::msgfem;
  out.dofs = decomp[reduction.subdomain].dofs_star;
  out.eigenvalues = eig.eigenvalues;
  out.eigenvectors = (reduction.extension_ext * eig.eigenvectors.cast<long double>()).cast<double>();
  out.kernel_vectors = (reduction.extension_ext * eig.kernel_vectors.cast<long double>()).cast<double>();
  for (Index k = 0; k < out.kernel_vectors.cols(); ++k) out.kernel_vectors.col(k).normalize();
  return out;
}

LocalSpectralBasis select_modes(const LocalSpectrum& spectrum, Index modes) {
  if (modes < 0) throw Error(ErrorKind::InvalidArgument, "mode count must be >= 0");
  if (modes > spectrum.available_modes()) {
    throw Error(ErrorKind::TooManyModes, "subdomain " + std::to_string(spectrum.subdomain) + " has " +
                                             std::to_string(spectrum.available_modes()) +
                                             " modes, requested " + std::to_string(modes));
  }
  const Index l = spectrum.kernel_dim();
  const Index m = std::max(modes, l);
  const Index finite = m - l;
  LocalSpectralBasis b;
  b.subdomain = spectrum.subdomain;
  b.kind = spectrum.kind;
  b.dofs = spectrum.dofs;
  b.modes = m;
  b.kernel_dim = l;
  b.eigenvalues = spectrum.eigenvalues.head(finite);
  b.next_eigenvalue =
      finite < spectrum.eigenvalues.size() ? std::max(spectrum.eigenvalues[finite], 0.0) : 0.0;
  b.vectors.resize(static_cast<Index>(spectrum.dofs.size()), m);
  b.vectors.leftCols(l) = spectrum.kernel_vectors;
  b.vectors.rightCols(finite) = spectrum.eigenvectors.leftCols(finite);
  return b;
}

LocalSpectralBasis solve_local_eigenproblem(const HarmonicReduction& reduction,
                                            const Decomposition& decomp, Index modes) {
  return select_modes(harmonic_spectrum(reduction, decomp), modes);
}

// ---------------------------------------------------------------------------
// GenEO

LocalSpectrum geneo_spectrum(const AssembledSystem& system, const Decomposition& decomp,
                             const PartitionOfUnity& pu, Index i) {
  if (i < 0 || i >= decomp.size()) throw Error(ErrorKind::IndexOutOfRange, "subdomain id");
  const Subdomain& s = decomp[i];
  const CartesianGrid& g = decomp.grid;

  std::vector<Index> overlap_cells;
  for (Index c : s.cells) {
    const Index ix = c % g.nx;
    const Index iy = c / g.nx;
    for (const Subdomain& o : decomp.subdomains) {
      if (o.id != s.id && o.omega.contains(ix, iy)) {
        overlap_cells.push_back(c);
        break;
      }
    }
  }
  const SparseSym a_overlap = assemble_cell_subset(system, overlap_cells, s.dofs);
  const SparseSym a_omega = assemble_cell_subset(system, s.cells, s.dofs);
  const Vector chi = pu_weights_on(pu, decomp, i, s.dofs);
  const DenseMatrix lhs = symmetrized(DenseMatrix(diagonal_scaled(a_overlap, chi)));
  const DensePencilEig eig = dense_generalized_sym_eig(lhs, a_omega.to_dense());

  LocalSpectrum out;
  out.subdomain = i;
  out.kind = BasisKind::geneo;
  out.dofs = s.dofs;
  out.eigenvalues = eig.eigenvalues;
  out.eigenvectors = eig.eigenvectors;
  out.kernel_vectors = eig.kernel_vectors;
  return out;
}

LocalSpectralBasis geneo_eigenproblem(const AssembledSystem& system, const Decomposition& decomp,
                                      const PartitionOfUnity& pu, Index i, Index modes) {
  return select_modes(geneo_spectrum(system, decomp, pu, i), modes);
}

std::vector<LocalSpectrum> compute_spectra(const AssembledSystem& system, const Decomposition& decomp,
                                           const PartitionOfUnity& pu, BasisKind kind, Exec exec) {
  const Index m = decomp.size();
  std::vector<LocalSpectrum> out(static_cast<std::size_t>(m));
  std::vector<std::string> errors(static_cast<std::size_t>(m));
  std::vector<ErrorKind> kinds(static_cast<std::size_t>(m), ErrorKind::NonConvergence);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (Index i = 0; i < m; ++i) {
    auto& slot = out[static_cast<std::size_t>(i)];
    try {
      if (kind == BasisKind::geneo) {
        slot = geneo_spectrum(system, decomp, pu, i);
      } else if (decomp[i].boundary_star.empty()) {
        slot.subdomain = i;
        slot.kind = BasisKind::msgfem;
        slot.dofs = decomp[i].dofs_star;
        slot.kernel_vectors.resize(static_cast<Index>(slot.dofs.size()), 0);
        slot.eigenvectors.resize(static_cast<Index>(slot.dofs.size()), 0);
      } else {
        slot = harmonic_spectrum(reduce_to_harmonic(system, decomp, pu, i), decomp);
      }
    } catch (const Error& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
      kinds[static_cast<std::size_t>(i)] = e.kind();
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (Index i = 0; i < m; ++i) {
    if (!errors[static_cast<std::size_t>(i)].empty()) {
      throw Error(kinds[static_cast<std::size_t>(i)],
                  "subdomain " + std::to_string(i) + ": " + errors[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

std::vector<LocalSpectralBasis> select_all(const std::vector<LocalSpectrum>& spectra,
                                           const std::vector<Index>& modes) {
  if (modes.size() != 1 && modes.size() != spectra.size()) {
    throw Error(ErrorKind::DimensionMismatch, "mode list must have one entry or one per subdomain");
  }
  std::vector<LocalSpectralBasis> out;
  out.reserve(spectra.size());
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    out.push_back(select_modes(spectra[i], modes.size() == 1 ? modes[0] : modes[i]));
  }
  return out;
}

double lambda_bound(Index xi, Index xi_star, double max_next_eigenvalue) {
  return std::sqrt(static_cast<double>(xi) * static_cast<double>(xi_star) * max_next_eigenvalue);
}

double geneo_condition_bound(Index xi, double max_next_eigenvalue) {
  const double x = static_cast<double>(xi);
  return (1.0 + x) * (2.0 + x * (2.0 * x + 1.0)) * (1.0 + max_next_eigenvalue);
}

// ---------------------------------------------------------------------------
// Coarse space

Vector CoarseSpace::correction(const Vector& r) const {
  if (r.size() != basis.rows()) throw Error(ErrorKind::DimensionMismatch, "coarse correction input");
  const Vector rs = basis.transpose() * r;
  return basis * a_s_factor.solve(rs);
}

CoarseSpace build_coarse_space(const AssembledSystem& system, const Decomposition& decomp,
                               const PartitionOfUnity& pu,
                               const std::vector<LocalSpectralBasis>& bases) {
  CoarseSpace cs;
  cs.kind = bases.empty() ? BasisKind::msgfem : bases.front().kind;
  const Index n = system.free_count();
  const SparseSym& a = system.a_free;

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<Index> owner;
  Index col = 0;
  for (const auto& b : bases) {
    cs.requested += b.modes;
    cs.max_next_eigenvalue = std::max(cs.max_next_eigenvalue, b.next_eigenvalue);
    const Vector chi = pu_weights_on(pu, decomp, b.subdomain, b.dofs);
    for (Index k = 0; k < b.modes; ++k) {
      const Vector local = chi.cwiseProduct(b.vectors.col(k));
      Vector global = Vector::Zero(n);
      add_extended(global, b.dofs, local);
      const double norm = std::sqrt(std::max(a.energy(global), 0.0));
      if (!(norm > 0.0)) {
        ++cs.dropped;
        continue;
      }
      for (std::size_t p = 0; p < b.dofs.size(); ++p) {
        const double v = local[static_cast<Index>(p)];
        if (v != 0.0) trips.emplace_back(b.dofs[p], col, v / norm);
      }
      owner.push_back(b.subdomain);
      ++col;
    }
  }
  if (cs.requested == 0) throw Error(ErrorKind::EmptyCoarseSpace, "every subdomain contributes zero modes");

  Eigen::SparseMatrix<double> cols(n, col);
  cols.setFromTriplets(trips.begin(), trips.end());
  const Eigen::SparseMatrix<double> a_col = a.matrix();
  const DenseMatrix gram = DenseMatrix(cols.transpose() * (a_col * cols));

  // Diagonally pivoted Cholesky; columns whose remaining energy drops below
  // 1e-12 ||A_S|| are treated as linearly dependent and removed.
  const Index m = static_cast<Index>(gram.rows());
  const double tol = 1e-12 * (m > 0 ? gram.cwiseAbs().rowwise().sum().maxCoeff() : 0.0);
  Vector diag = gram.diagonal();
  DenseMatrix l = DenseMatrix::Zero(m, m);
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  std::vector<Index> kept;
  for (Index step = 0; step < m; ++step) {
    Index piv = -1;
    double best = tol;
    for (Index j = 0; j < m; ++j) {
      if (!used[static_cast<std::size_t>(j)] && diag[j] > best) {
        best = diag[j];
        piv = j;
      }
    }
    if (piv < 0) break;
    used[static_cast<std::size_t>(piv)] = true;
    kept.push_back(piv);
    const double root = std::sqrt(diag[piv]);
    for (Index j = 0; j < m; ++j) {
      if (used[static_cast<std::size_t>(j)] && j != piv) continue;
      double v = gram(j, piv);
      for (Index q = 0; q < step; ++q) v -= l(j, q) * l(piv, q);
      l(j, step) = j == piv ? root : v / root;
      if (j != piv) diag[j] -= l(j, step) * l(j, step);
    }
  }
  std::sort(kept.begin(), kept.end());
  cs.dropped += m - static_cast<Index>(kept.size());

  std::vector<Eigen::Triplet<double>> kept_trips;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(cols, kept[k]); it; ++it) {
      kept_trips.emplace_back(static_cast<Index>(it.row()), static_cast<Index>(k), it.value());
    }
    cs.column_owner.push_back(owner[static_cast<std::size_t>(kept[k])]);
  }
  cs.basis.resize(n, static_cast<Index>(kept.size()));
  cs.basis.setFromTriplets(kept_trips.begin(), kept_trips.end());
  cs.a_s.resize(static_cast<Index>(kept.size()), static_cast<Index>(kept.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) {
    for (std::size_t c = 0; c < kept.size(); ++c) {
      cs.a_s(static_cast<Index>(r), static_cast<Index>(c)) = gram(kept[r], kept[c]);
    }
  }
  if (cs.a_s.rows() == 0) throw Error(ErrorKind::EmptyCoarseSpace, "all coarse columns were filtered out");
  cs.a_s_factor.compute(cs.a_s);
  if (cs.a_s_factor.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "coarse matrix factorization failed");
  }
  cs.lambda = lambda_bound(decomp.xi, decomp.xi_star, cs.max_next_eigenvalue);
  cs.kappa_bound = geneo_condition_bound(decomp.xi, cs.max_next_eigenvalue);
  return cs;
}

void write_spectrum_csv(const std::string& path, const std::vector<LocalSpectrum>& spectra) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path);
  os << "i,k,lambda\n" << std::setprecision(17);
  for (const auto& s : spectra) {
    Index k = 1;
    for (Index j = 0; j < s.kernel_dim(); ++j) os << s.subdomain << ',' << k++ << ",inf\n";
    for (Index j = 0; j < s.eigenvalues.size(); ++j) os << s.subdomain << ',' << k++ << ',' << s.eigenvalues[j] << '\n';
  }
}

} // namespace msgfem
