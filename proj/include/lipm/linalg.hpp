#pragma once

#include "lipm/types.hpp"

namespace lipm {

/// Positive diagonal of a symmetric scaling D.
struct ScalingDiag {
  Vector d;

  static ScalingDiag identity(Index size) { return {Vector::Ones(size)}; }
  Index size() const { return d.size(); }
};

/// Minimizer of ½‖Ay − b‖² via column-pivoted Householder QR. Columns found
/// rank deficient receive zero coefficients in the pivoted basis.
Vector qr_least_squares(const Matrix& A, const Vector& b);

/// Partial-pivot LU solve. Throws SingularMatrixError when a pivot falls below
/// 1e-14·‖A‖∞.
Vector lu_solve(const Matrix& A, const Vector& b);

/// Symmetric Ruiz equilibration of H: returns D with every row of DHD having
/// ∞-norm in [1 − tol, 1 + tol], or the scaling reached after max_sweeps.
/// Rows that are identically zero keep dᵢ = 1.
ScalingDiag ruiz_equilibrate(const Matrix& H, int max_sweeps = 10, double tol = 0.05);

/// D·H·D for a diagonal scaling.
Matrix apply_scaling(const Matrix& H, const ScalingDiag& D);

/// σ_max/σ_min estimate: power iteration on AᵀA for σ_max, inverse power
/// iteration through a QR factorization of A for σ_min. Returns +∞ when
/// σ_min < 1e-14·σ_max.
double cond_estimate(const Matrix& A);

}  // namespace lipm
