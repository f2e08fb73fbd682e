#include "lipm/inner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lipm {

std::string_view to_string(InnerKind kind) {
  switch (kind) {
    case InnerKind::Direct: return "direct";
    case InnerKind::GradientDescent: return "gd";
    case InnerKind::Lstm: return "lstm";
  }
  return "?";
}

InnerKind inner_kind_from_string(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "direct") return InnerKind::Direct;
  if (s == "gd" || s == "gradient_descent") return InnerKind::GradientDescent;
  if (s == "lstm") return InnerKind::Lstm;
  throw std::invalid_argument("unknown inner solver '" + std::string(name) + "'");
}

Vector gradient_descent(const Matrix& A, const Vector& F, Index max_steps, double tol,
                        Index* steps_taken) {
  Vector y = Vector::Zero(A.cols());
  Vector r = F;
  Index k = 0;
  for (; k < max_steps; ++k) {
    const Vector g = A.transpose() * r;
    const double gg = g.squaredNorm();
    if (std::sqrt(gg) <= tol) break;
    const Vector Ag = A * g;
    const double denom = Ag.squaredNorm();
    if (denom <= 0.0) break;
    const double alpha = gg / denom;
    y -= alpha * g;
    r -= alpha * Ag;
  }
  if (steps_taken) *steps_taken = k;
  return y;
}

InnerSolution inner_solve(InnerKind kind, const Matrix& J, const Vector& F,
                          const InnerContext& ctx) {
  if (J.rows() != F.size()) throw std::invalid_argument("inner_solve: dimension mismatch");
  InnerSolution out;
  out.kind = kind;
  switch (kind) {
    case InnerKind::Direct:
      out.y = qr_least_squares(J, -F);
      out.steps = 1;
      break;
    case InnerKind::GradientDescent: {
      if (ctx.gd_steps < 1) throw std::invalid_argument("inner_solve: gd_steps required");
      if (ctx.D) {
        const Matrix A = J * ctx.D->d.asDiagonal();
        out.y = ctx.D->d.cwiseProduct(gradient_descent(A, F, ctx.gd_steps, ctx.gd_tol, &out.steps));
      } else {
        out.y = gradient_descent(J, F, ctx.gd_steps, ctx.gd_tol, &out.steps);
      }
      break;
    }
    case InnerKind::Lstm: {
      if (!ctx.theta || ctx.T < 1)
        throw std::invalid_argument("inner_solve: Lstm requires theta and T");
      const ScalingDiag D = ctx.D ? *ctx.D : ScalingDiag::identity(J.cols());
      auto run = forward_unroll(*ctx.theta, J, F, D, ctx.T);
      out.y = std::move(run.y.back());
      out.steps = ctx.T;
      break;
    }
  }
  if (!out.y.allFinite()) throw NonFiniteError("inner_solve: non-finite solution");
  out.residual_norm = (J * out.y + F).norm();
  return out;
}

}  // namespace lipm
