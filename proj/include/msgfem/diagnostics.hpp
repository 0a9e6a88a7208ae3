#pragma once

#include "msgfem/linalg.hpp"
#include "msgfem/schwarz.hpp"

namespace msgfem {

/// Largest system the dense diagnostics accept.
inline constexpr Index kDenseDiagnosticLimit = 3000;

/// Dense matrix of a linear operator, column by column.
DenseMatrix dense_operator(const LinearOperator& op, Index n);

/// ||I - B A||_a, computed as the spectral norm of I - L^T B L with A = L L^T.
double contraction_norm(const Preconditioner& b, const AssembledSystem& system);
double contraction_norm(const LinearOperator& b, const SparseSym& a);

/// lambda_max / lambda_min of B A, assuming B symmetric positive definite.
double preconditioned_condition_number(const Preconditioner& b, const AssembledSystem& system);
double preconditioned_condition_number(const LinearOperator& b, const SparseSym& a);

} // namespace msgfem
