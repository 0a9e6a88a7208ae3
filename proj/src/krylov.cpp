#include "msgfem/krylov.hpp"
#include "msgfem/error.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace msgfem {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double a_norm_error(const SparseSym& a, const Vector& v, const SolveOptions& opts) {
  if (!opts.reference) return std::numeric_limits<double>::quiet_NaN();
  const Vector e = v - *opts.reference;
  return std::sqrt(std::max(a.energy(e), 0.0));
}

void check_inputs(const SparseSym& a, const Vector& f, const Vector& v0, const SolveOptions& opts) {
  if (f.size() != a.size() || v0.size() != a.size()) {
    throw Error(ErrorKind::DimensionMismatch, "solver vectors must match the matrix size");
  }
  if (!(opts.target_reduction > 0.0 && opts.target_reduction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "target_reduction must lie in (0, 1)");
  }
  if (opts.maxit < 0) throw Error(ErrorKind::InvalidArgument, "maxit must be >= 0");
  if (opts.reference && opts.reference->size() != a.size()) {
    throw Error(ErrorKind::DimensionMismatch, "reference solution length");
  }
}

} // namespace

std::string_view to_string(SolveStatus s) {
  switch (s) {
  case SolveStatus::converged: return "converged";
  case SolveStatus::max_iterations: return "max_iterations";
  case SolveStatus::stagnation: return "stagnation";
  case SolveStatus::breakdown: return "breakdown";
  }
  return "unknown";
}

bool IterationHistory::has_reference() const {
  return !records.empty() && !std::isnan(records.front().err_a);
}

std::string IterationHistory::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "iter,res_b,err_a,time_ms\n";
  for (const auto& r : records) {
    os << r.iter << ',' << r.res_b << ',';
    if (!std::isnan(r.err_a)) os << r.err_a;
    os << ',' << r.time_ms << '\n';
  }
  return os.str();
}

void IterationHistory::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path);
  os << to_csv();
}

SolveResult richardson(const SparseSym& a, const Vector& f, const LinearOperator& b, const Vector& v0,
                       const SolveOptions& opts) {
  check_inputs(a, f, v0, opts);
  const auto t0 = Clock::now();
  SolveResult out;
  Vector v = v0;
  Vector r = f - a.multiply(v);
  const double r0 = r.norm();
  double prev = r0;
  int non_decreasing = 0;

  for (Index j = 0;; ++j) {
    const double res = r.norm();
    const bool done = res <= opts.target_reduction * r0;
    Vector z = b(r);
    out.history.records.push_back({j, res, z.norm(), a_norm_error(a, v, opts), elapsed_ms(t0)});
    if (!std::isfinite(res)) {
      out.status = SolveStatus::breakdown;
      break;
    }
    if (done) {
      out.status = SolveStatus::converged;
      break;
    }
    if (j > 0) {
      non_decreasing = res >= prev ? non_decreasing + 1 : 0;
      if (non_decreasing >= 5) {
        out.status = SolveStatus::stagnation;
        break;
      }
    }
    if (j == opts.maxit) {
      out.status = SolveStatus::max_iterations;
      break;
    }
    prev = res;
    v += z;
    r = f - a.multiply(v);
    out.iterations = j + 1;
  }
  out.solution = std::move(v);
  return out;
}

SolveResult gmres(const SparseSym& a, const Vector& f, const LinearOperator& b, const Vector& u0,
                  const SolveOptions& opts) {
  check_inputs(a, f, u0, opts);
  const auto t0 = Clock::now();
  const Index n = a.size();
  const Index maxit = opts.maxit;
  SolveResult out;

  Vector r = f - a.multiply(u0);
  Vector z = b(r);
  const double beta = z.norm();
  out.history.records.push_back({0, r.norm(), beta, a_norm_error(a, u0, opts), elapsed_ms(t0)});
  out.solution = u0;
  if (beta == 0.0) {
    out.status = SolveStatus::converged;
    return out;
  }
  if (!std::isfinite(beta)) {
    out.status = SolveStatus::breakdown;
    return out;
  }

  DenseMatrix v(n, maxit + 1);
  DenseMatrix h = DenseMatrix::Zero(maxit + 1, maxit);
  Vector cs = Vector::Zero(maxit), sn = Vector::Zero(maxit);
  Vector g = Vector::Zero(maxit + 1);
  v.col(0) = z / beta;
  g[0] = beta;
  out.status = SolveStatus::max_iterations;

  for (Index k = 0; k < maxit; ++k) {
    Vector w = b(a.multiply(v.col(k)));
    const double w_norm0 = w.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i <= k; ++i) {
        const double c = v.col(i).dot(w);
        h(i, k) += c;
        w -= c * v.col(i);
      }
    }
    h(k + 1, k) = w.norm();
    const bool happy = h(k + 1, k) <= 1e-14 * w_norm0;
    if (!happy) v.col(k + 1) = w / h(k + 1, k);

    for (Index i = 0; i < k; ++i) {
      const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
      h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
      h(i, k) = t;
    }
    const double rho = std::hypot(h(k, k), h(k + 1, k));
    if (!(rho > 0.0) || !std::isfinite(rho)) {
      out.status = SolveStatus::breakdown;
      break;
    }
    cs[k] = h(k, k) / rho;
    sn[k] = h(k + 1, k) / rho;
    h(k, k) = rho;
    h(k + 1, k) = 0.0;
    g[k + 1] = -sn[k] * g[k];
    g[k] = cs[k] * g[k];

    const Index m = k + 1;
    const Vector y = h.topLeftCorner(m, m).triangularView<Eigen::Upper>().solve(g.head(m));
    Vector u = u0 + v.leftCols(m) * y;
    const double prec_res = std::abs(g[m]);
    out.history.records.push_back(
        {m, (f - a.multiply(u)).norm(), prec_res, a_norm_error(a, u, opts), elapsed_ms(t0)});
    out.solution = std::move(u);
    out.iterations = m;
    if (happy || prec_res <= opts.target_reduction * beta) {
      out.status = SolveStatus::converged;
      break;
    }
  }
  return out;
}

SolveResult richardson(const Preconditioner& b, const AssembledSystem& system, const Vector& v0,
                       const SolveOptions& opts) {
  return richardson(system.a_free, system.f_free, b.as_operator(), v0, opts);
}

SolveResult gmres(const Preconditioner& b, const AssembledSystem& system, const Vector& u0,
                  const SolveOptions& opts) {
  return gmres(system.a_free, system.f_free, b.as_operator(), u0, opts);
}

} // namespace msgfem
