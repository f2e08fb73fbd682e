#pragma once

#include <optional>
#include <string_view>

#include "lipm/linalg.hpp"
#include "lipm/lstm.hpp"

namespace lipm {

enum class InnerKind { Direct, GradientDescent, Lstm };

std::string_view to_string(InnerKind kind);
InnerKind inner_kind_from_string(std::string_view name);

/// Inputs required by the non-direct solvers. `theta`, `D` and `T` are read by
/// Lstm; `gd_steps` and `gd_tol` by GradientDescent.
struct InnerContext {
  const LstmParams* theta = nullptr;
  std::optional<ScalingDiag> D;
  Index T = 0;
  Index gd_steps = 0;
  double gd_tol = 0.0;
};

struct InnerSolution {
  Vector y;
  double residual_norm = 0.0;  // ‖Jy + F‖₂, recomputed from y
  Index steps = 0;
  InnerKind kind = InnerKind::Direct;
};

/// Approximately minimizes ½‖Jy + F‖². GradientDescent runs steepest descent
/// with exact line search (on the scaled problem JD when ctx.D is set).
InnerSolution inner_solve(InnerKind kind, const Matrix& J, const Vector& F,
                          const InnerContext& ctx);

/// Steepest descent on ½‖Ay + F‖² from zero, exact step ‖g‖²/‖Ag‖².
Vector gradient_descent(const Matrix& A, const Vector& F, Index max_steps, double tol,
                        Index* steps_taken = nullptr);

}  // namespace lipm
