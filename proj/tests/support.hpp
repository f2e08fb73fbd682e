#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/SVD>

#include "lipm/kkt.hpp"
#include "lipm/problem.hpp"

namespace lipm::testing {

using Rng = std::mt19937_64;

inline Vector normal_vector(Rng& rng, Index n) {
  std::normal_distribution<double> d(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline Matrix normal_matrix(Rng& rng, Index r, Index c) {
  std::normal_distribution<double> d(0.0, 1.0);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = d(rng);
  return m;
}

inline Vector uniform_vector(Rng& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

/// min ½‖x‖² s.t. x₁ + x₂ = 2; optimum x = (1, 1), λ = −1.
inline NlpInstance equality_qp() {
  return NlpInstance(Matrix::Identity(2, 2), Vector::Zero(2), false, {},
                     {EqualityConstraint{Vector::Ones(2), 2.0}}, FamilyTag::External);
}

/// Random equality-only convex QP with full-row-rank constraints.
inline NlpInstance random_equality_qp(Rng& rng, Index n, Index m) {
  const Matrix G = normal_matrix(rng, n, n);
  const Matrix Q = G * G.transpose() / static_cast<double>(n) + 0.1 * Matrix::Identity(n, n);
  std::vector<EqualityConstraint> eq;
  for (Index j = 0; j < m; ++j) eq.push_back({normal_vector(rng, n), normal_vector(rng, 1)[0]});
  return NlpInstance(Q, normal_vector(rng, n), false, {}, std::move(eq), FamilyTag::QpRhs);
}

/// Instance exercising every block: quadratic and linear inequalities,
/// equalities, one- and two-sided bounds, optional sin objective.
inline NlpInstance mixed_instance(Rng& rng, Index n, bool sin_term) {
  const Matrix G = normal_matrix(rng, n, n);
  const Matrix Q0 = G * G.transpose() / static_cast<double>(n) + 0.01 * Matrix::Identity(n, n);
  std::vector<InequalityConstraint> ineq;
  const Matrix H = normal_matrix(rng, n, n);
  ineq.push_back({Matrix(H * H.transpose() / static_cast<double>(n)), normal_vector(rng, n), 3.0});
  ineq.push_back({std::nullopt, normal_vector(rng, n), 1.0});
  std::vector<EqualityConstraint> eq{{normal_vector(rng, n), 0.3}};
  Vector lower = Vector::Constant(n, -kInf);
  Vector upper = Vector::Constant(n, kInf);
  lower[0] = -2.0;
  upper[1] = 2.5;
  if (n > 2) {
    lower[2] = -1.0;
    upper[2] = 3.0;
  }
  return NlpInstance(Q0, normal_vector(rng, n), sin_term, std::move(ineq), std::move(eq), lower,
                     upper, sin_term ? FamilyTag::NonconvexSin : FamilyTag::QcqpRhs);
}

/// Strictly interior state with random positive duals and slacks.
inline IterateState random_interior_state(const NlpInstance& inst, Rng& rng) {
  IterateState st;
  st.x = uniform_vector(rng, inst.n(), -0.5, 0.5);
  for (Index i = 0; i < inst.n(); ++i) {
    const double lo = inst.lower()[i];
    const double up = inst.upper()[i];
    if (std::isfinite(lo) && std::isfinite(up))
      st.x[i] = lo + (up - lo) * uniform_vector(rng, 1, 0.2, 0.8)[0];
    else if (std::isfinite(lo))
      st.x[i] = lo + uniform_vector(rng, 1, 0.3, 2.0)[0];
    else if (std::isfinite(up))
      st.x[i] = up - uniform_vector(rng, 1, 0.3, 2.0)[0];
  }
  st.eta = uniform_vector(rng, inst.m_ineq(), 0.2, 2.0);
  st.s = uniform_vector(rng, inst.m_ineq(), 0.2, 2.0);
  st.lambda = normal_vector(rng, inst.m_eq());
  st.zL = uniform_vector(rng, inst.n_lower(), 0.2, 2.0);
  st.zU = uniform_vector(rng, inst.n_upper(), 0.2, 2.0);
  st.mu = 0.05;
  return st;
}

/// Central-difference Jacobian of fn at x.
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x,
                          double eps = 1e-6) {
  const Vector f0 = fn(x);
  Matrix J(f0.size(), x.size());
  for (Index j = 0; j < x.size(); ++j) {
    Vector xp = x, xm = x;
    xp[j] += eps;
    xm[j] -= eps;
    J.col(j) = (fn(xp) - fn(xm)) / (2.0 * eps);
  }
  return J;
}

/// max |a − b| / max(1, max|b|).
inline double rel_err(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double svd_condition(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A);
  const Vector& s = svd.singularValues();
  return s[0] / s[s.size() - 1];
}

}  // namespace lipm::testing
