#pragma once

#include "msgfem/linalg.hpp"
#include "msgfem/schwarz.hpp"

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace msgfem {

struct IterationRecord {
  Index iter = 0;
  double res_b = 0.0;     // ||f - A v^j||_2
  double prec_res = 0.0;  // ||B (f - A v^j)||_2
  double err_a = std::numeric_limits<double>::quiet_NaN();  // ||v^j - u_ref||_a, NaN without reference
  double time_ms = 0.0;   // since the start of the solve
};

struct IterationHistory {
  std::vector<IterationRecord> records;

  bool has_reference() const;
  /// CSV "iter,res_b,err_a,time_ms"; err_a is left empty without a reference.
  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

enum class SolveStatus { converged, max_iterations, stagnation, breakdown };

std::string_view to_string(SolveStatus s);

struct SolveOptions {
  double target_reduction = 1e-10;
  Index maxit = 200;
  std::optional<Vector> reference;  // exact solution for the a-norm error column
};

struct SolveResult {
  Vector solution;
  IterationHistory history;
  SolveStatus status = SolveStatus::max_iterations;
  Index iterations = 0;

  bool converged() const { return status == SolveStatus::converged; }
};

/// v^{j+1} = v^j + B (f - A v^j), stopping on the reduction of ||f - A v^j||_2.
/// Five consecutive steps without residual decrease end the run as stagnation.
SolveResult richardson(const SparseSym& a, const Vector& f, const LinearOperator& b, const Vector& v0,
                       const SolveOptions& opts);

/// Left-preconditioned GMRES on B A u = B f without restart. Arnoldi uses
/// modified Gram-Schmidt with one reorthogonalization pass; stops on the
/// reduction of the preconditioned residual.
SolveResult gmres(const SparseSym& a, const Vector& f, const LinearOperator& b, const Vector& u0,
                  const SolveOptions& opts);

SolveResult richardson(const Preconditioner& b, const AssembledSystem& system, const Vector& v0,
                       const SolveOptions& opts);
SolveResult gmres(const Preconditioner& b, const AssembledSystem& system, const Vector& u0,
                  const SolveOptions& opts);

} // namespace msgfem
