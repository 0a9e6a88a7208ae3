#include "msgfem/linalg.hpp"
#include "msgfem/error.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace msgfem {

namespace {

std::vector<Index> position_map(Index n, std::span<const Index> idx) {
  std::vector<Index> pos(static_cast<std::size_t>(n), -1);
  Index prev = -1;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Index i = idx[k];
    if (i < 0 || i >= n) {
      throw Error(ErrorKind::IndexOutOfRange,
                  "index " + std::to_string(i) + " outside [0, " + std::to_string(n) + ")");
    }
    if (i <= prev) {
      throw Error(ErrorKind::InvalidArgument, "index list must be strictly increasing");
    }
    prev = i;
    pos[static_cast<std::size_t>(i)] = static_cast<Index>(k);
  }
  return pos;
}

} // namespace

// ---------------------------------------------------------------------------
// SparseSym

SparseSym::SparseSym(Storage m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "SparseSym requires a square matrix");
  }
  m_.makeCompressed();
  const Storage t = m_.transpose();
  const double scale = std::max(norm_inf(), std::numeric_limits<double>::min());
  Storage diff = m_ - t;
  diff.makeCompressed();
  double defect = 0.0;
  for (Index p = 0; p < diff.nonZeros(); ++p) defect = std::max(defect, std::abs(diff.valuePtr()[p]));
  if (defect > 1e-12 * scale) {
    throw Error(ErrorKind::NotSymmetric, "matrix is not symmetric (defect " + std::to_string(defect) + ")");
  }
}

SparseSym SparseSym::from_triplets(Index n, std::span<const Triplet> triplets) {
  Storage m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SparseSym(std::move(m));
}

SparseSym SparseSym::from_dense(const DenseMatrix& d) {
  Storage m = d.sparseView();
  return SparseSym(std::move(m));
}

SparseSym SparseSym::identity(Index n) {
  Storage m(n, n);
  m.setIdentity();
  return SparseSym(std::move(m));
}

void SparseSym::multiply(const Vector& x, Vector& y, Exec exec) const {
  if (x.size() != size()) {
    throw Error(ErrorKind::DimensionMismatch, "multiply: vector length does not match matrix");
  }
  y.resize(size());
  const Index n = size();
  const Index* outer = m_.outerIndexPtr();
  const Index* inner = m_.innerIndexPtr();
  const double* values = m_.valuePtr();
  // Row-wise products are independent, so the parallel path is bitwise
  // identical to the serial one.
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (Index r = 0; r < n; ++r) {
    double acc = 0.0;
    for (Index p = outer[r]; p < outer[r + 1]; ++p) acc += values[p] * x[inner[p]];
    y[r] = acc;
  }
}

Vector SparseSym::multiply(const Vector& x, Exec exec) const {
  Vector y;
  multiply(x, y, exec);
  return y;
}

double SparseSym::energy(const Vector& x, Exec exec) const {
  return x.dot(multiply(x, exec));
}

double SparseSym::max_abs_diagonal() const {
  double d = 0.0;
  for (Index r = 0; r < size(); ++r) d = std::max(d, std::abs(m_.coeff(r, r)));
  return d;
}

double SparseSym::norm_inf() const {
  double best = 0.0;
  for (Index r = 0; r < size(); ++r) {
    double row = 0.0;
    for (Storage::InnerIterator it(m_, r); it; ++it) row += std::abs(it.value());
    best = std::max(best, row);
  }
  return best;
}

DenseMatrix SparseSym::to_dense() const { return DenseMatrix(m_); }

SparseSym extract_submatrix(const SparseSym& a, std::span<const Index> idx) {
  const auto pos = position_map(a.size(), idx);
  std::vector<Triplet> trips;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    for (SparseSym::Storage::InnerIterator it(a.matrix(), idx[k]); it; ++it) {
      const Index c = pos[static_cast<std::size_t>(it.col())];
      if (c >= 0) trips.emplace_back(static_cast<Index>(k), c, it.value());
    }
  }
  return SparseSym::from_triplets(static_cast<Index>(idx.size()), trips);
}

DenseMatrix extract_block(const SparseSym& a, std::span<const Index> rows,
                          std::span<const Index> cols) {
  const auto pos = position_map(a.size(), cols);
  DenseMatrix out = DenseMatrix::Zero(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= a.size()) {
      throw Error(ErrorKind::IndexOutOfRange, "extract_block: row index out of range");
    }
    for (SparseSym::Storage::InnerIterator it(a.matrix(), rows[k]); it; ++it) {
      const Index c = pos[static_cast<std::size_t>(it.col())];
      if (c >= 0) out(static_cast<Index>(k), c) = it.value();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SparseFactor

struct SparseFactor::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double, Eigen::ColMajor, Index>, Eigen::Lower,
                        Eigen::AMDOrdering<Index>>
      ldlt;
};

SparseFactor factorize(const SparseSym& a) {
  SparseFactor f;
  f.n_ = a.size();
  auto impl = std::make_shared<SparseFactor::Impl>();
  if (a.size() == 0) {
    f.impl_ = std::move(impl);
    return f;
  }
  const Eigen::SparseMatrix<double, Eigen::ColMajor, Index> col = a.matrix();
  impl->ldlt.compute(col);
  const double tol = 1e-14 * a.max_abs_diagonal();
  if (impl->ldlt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "LDL^T factorization hit a zero pivot");
  }
  const Vector d = impl->ldlt.vectorD();
  f.min_pivot_ = d.minCoeff();
  f.max_pivot_ = d.maxCoeff();
  if (!(f.min_pivot_ > tol)) {
    std::ostringstream msg;
    msg << "pivot " << f.min_pivot_ << " below tolerance " << tol;
    throw Error(ErrorKind::NotPositiveDefinite, msg.str());
  }
  f.impl_ = std::move(impl);
  return f;
}

Vector SparseFactor::solve(const Vector& rhs) const {
  if (impl_ == nullptr) throw Error(ErrorKind::InvalidArgument, "solve on an empty factor");
  if (rhs.size() != n_) {
    throw Error(ErrorKind::DimensionMismatch, "solve: rhs length " + std::to_string(rhs.size()) +
                                                  " != " + std::to_string(n_));
  }
  if (n_ == 0) return Vector();
  return impl_->ldlt.solve(rhs);
}

DenseMatrix SparseFactor::solve(const DenseMatrix& rhs) const {
  if (impl_ == nullptr) throw Error(ErrorKind::InvalidArgument, "solve on an empty factor");
  if (rhs.rows() != n_) throw Error(ErrorKind::DimensionMismatch, "solve: rhs rows mismatch");
  if (n_ == 0) return DenseMatrix(0, rhs.cols());
  return impl_->ldlt.solve(rhs);
}

Vector solve(const SparseFactor& factor, const Vector& rhs) { return factor.solve(rhs); }

Vector solve_refined(const SparseSym& a, const SparseFactor& factor, const Vector& rhs) {
  if (a.size() != factor.size()) throw Error(ErrorKind::DimensionMismatch, "solve_refined: matrix and factor sizes");
  Vector x = factor.solve(rhs);
  x += factor.solve(Vector(rhs - a.multiply(x)));
  return x;
}

// ---------------------------------------------------------------------------
// Dense generalized eigensolver

double symmetry_defect(const DenseMatrix& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

namespace {

template <typename Scalar>
using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Column = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
double defect(const Dense<Scalar>& m) {
  const Scalar scale = m.cwiseAbs().maxCoeff();
  if (scale == Scalar(0)) return 0.0;
  return static_cast<double>((m - m.transpose()).cwiseAbs().maxCoeff() / scale);
}

template <typename Scalar>
Dense<Scalar> pseudo_inverse_sym(const Dense<Scalar>& m) {
  if (m.rows() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Dense<Scalar>> es(m);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "pseudo-inverse eigensolve");
  const Column<Scalar>& w = es.eigenvalues();
  const Scalar cut = Scalar(kKernelThreshold) * std::max(w.cwiseAbs().maxCoeff(), std::numeric_limits<Scalar>::min());
  Column<Scalar> inv = Column<Scalar>::Zero(w.size());
  for (Index k = 0; k < w.size(); ++k) {
    if (w[k] > cut) inv[k] = Scalar(1) / w[k];
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

void sort_descending(Vector& values, DenseMatrix& vectors) {
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values[a] > values[b]; });
  Vector v(values.size());
  DenseMatrix x(vectors.rows(), vectors.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    v[static_cast<Index>(k)] = values[order[k]];
    x.col(static_cast<Index>(k)) = vectors.col(order[k]);
  }
  values = std::move(v);
  vectors = std::move(x);
}

template <typename Scalar>
DensePencilEig pencil_eig(const Dense<Scalar>& k_in, const Dense<Scalar>& m_in) {
  const Index n = static_cast<Index>(k_in.rows());
  if (k_in.cols() != n || m_in.rows() != n || m_in.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "pencil matrices must be square and equal-sized");
  }
  if (defect<Scalar>(k_in) > 1e-10 || defect<Scalar>(m_in) > 1e-10) {
    throw Error(ErrorKind::NotSymmetric, "pencil matrices must be symmetric");
  }
  DensePencilEig out;
  if (n == 0) return out;

  const Dense<Scalar> k = Scalar(0.5) * (k_in + k_in.transpose());
  const Dense<Scalar> m = Scalar(0.5) * (m_in + m_in.transpose());

  Eigen::SelfAdjointEigenSolver<Dense<Scalar>> meig(m);
  if (meig.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "eigensolve of M");
  const Column<Scalar>& theta = meig.eigenvalues();
  const Scalar theta_max = theta.cwiseAbs().maxCoeff();
  Index kernel = 0;
  while (kernel < n && theta[kernel] <= Scalar(kKernelThreshold) * theta_max) ++kernel;

  if (theta_max == Scalar(0) || kernel == n) {
    out.kernel_dim = n;
    out.kernel_vectors = meig.eigenvectors().template cast<double>();
    out.eigenvalues = Vector(0);
    out.eigenvectors = DenseMatrix(n, 0);
    return out;
  }

  if (kernel == 0) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Dense<Scalar>> ges(k, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (ges.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "generalized eigensolve");
    out.eigenvalues = ges.eigenvalues().template cast<double>();
    out.eigenvectors = ges.eigenvectors().template cast<double>();
    out.kernel_vectors = DenseMatrix(n, 0);
  } else {
    const Index r = n - kernel;
    const Dense<Scalar> z = meig.eigenvectors().leftCols(kernel);
    const Dense<Scalar> y = meig.eigenvectors().rightCols(r);
    const Column<Scalar> theta_y = theta.tail(r);

    // Restrict to range(M) and eliminate the kernel directions against K:
    // x = Y a + Z b with Z^T K x = 0.
    const Dense<Scalar> kzz = z.transpose() * k * z;
    const Dense<Scalar> kzy = z.transpose() * k * y;
    const Dense<Scalar> kzz_pinv = pseudo_inverse_sym<Scalar>(Scalar(0.5) * (kzz + kzz.transpose()));
    const Dense<Scalar> reduced = y.transpose() * k * y - kzy.transpose() * kzz_pinv * kzy;

    const Column<Scalar> scale = theta_y.cwiseSqrt().cwiseInverse();
    Dense<Scalar> c = scale.asDiagonal() * reduced * scale.asDiagonal();
    c = Scalar(0.5) * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Dense<Scalar>> ceig(c);
    if (ceig.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "reduced eigensolve");

    const Dense<Scalar> a = scale.asDiagonal() * ceig.eigenvectors();
    out.eigenvalues = ceig.eigenvalues().template cast<double>();
    out.eigenvectors = (y * a - z * (kzz_pinv * (kzy * a))).template cast<double>();
    out.kernel_vectors = z.template cast<double>();
  }
  out.kernel_dim = kernel;
  sort_descending(out.eigenvalues, out.eigenvectors);

  // Relative residuals of the returned (rounded) pairs, with spectral norms.
  Eigen::SelfAdjointEigenSolver<Dense<Scalar>> keig(k, Eigen::EigenvaluesOnly);
  const Scalar k_norm = keig.eigenvalues().cwiseAbs().maxCoeff();
  out.residuals.resize(out.eigenvalues.size());
  for (Index j = 0; j < out.eigenvalues.size(); ++j) {
    const Column<Scalar> x = out.eigenvectors.col(j).template cast<Scalar>();
    const Scalar lambda = out.eigenvalues[j];
    const Scalar den = (k_norm + std::abs(lambda) * theta_max) * x.norm();
    const Scalar num = (k * x - lambda * (m * x)).norm();
    out.residuals[j] = den > Scalar(0) ? static_cast<double>(num / den) : 0.0;
  }
  return out;
}

} // namespace

DensePencilEig dense_generalized_sym_eig(const DenseMatrix& k, const DenseMatrix& m) {
  return pencil_eig<double>(k, m);
}

DensePencilEig dense_generalized_sym_eig(const ExtendedMatrix& k, const ExtendedMatrix& m) {
  return pencil_eig<long double>(k, m);
}

// ---------------------------------------------------------------------------
// Matrix Market

void write_matrix_market(std::ostream& os, const SparseSym& a) {
  const auto& m = a.matrix();
  Index lower = 0;
  for (Index r = 0; r < a.size(); ++r) {
    for (SparseSym::Storage::InnerIterator it(m, r); it; ++it) {
      if (it.col() <= r) ++lower;
    }
  }
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  os << a.size() << ' ' << a.size() << ' ' << lower << '\n';
  os << std::setprecision(17);
  for (Index r = 0; r < a.size(); ++r) {
    for (SparseSym::Storage::InnerIterator it(m, r); it; ++it) {
      if (it.col() <= r) os << r + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

void write_matrix_market(const std::string& path, const SparseSym& a) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path);
  write_matrix_market(os, a);
}

SparseSym read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::Io, "empty Matrix Market stream");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  if (tag != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate" ||
      lower(field) != "real") {
    throw Error(ErrorKind::Io, "unsupported Matrix Market header: " + line);
  }
  const bool symmetric = lower(symmetry) == "symmetric";
  if (!symmetric && lower(symmetry) != "general") {
    throw Error(ErrorKind::Io, "unsupported Matrix Market symmetry: " + symmetry);
  }
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream size_line(line);
  Index rows = 0, cols = 0, nnz = 0;
  if (!(size_line >> rows >> cols >> nnz) || rows != cols) {
    throw Error(ErrorKind::Io, "bad Matrix Market size line: " + line);
  }
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  for (Index k = 0; k < nnz; ++k) {
    Index r = 0, c = 0;
    double v = 0.0;
    if (!(is >> r >> c >> v)) throw Error(ErrorKind::Io, "truncated Matrix Market data");
    if (r < 1 || r > rows || c < 1 || c > cols) throw Error(ErrorKind::IndexOutOfRange, "Matrix Market entry");
    trips.emplace_back(r - 1, c - 1, v);
    if (symmetric && r != c) trips.emplace_back(c - 1, r - 1, v);
  }
  return SparseSym::from_triplets(rows, trips);
}

SparseSym read_matrix_market(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_matrix_market(is);
}

} // namespace msgfem
