#pragma once

#include "lipm/problem.hpp"

namespace lipm {

/// Primal-dual point (x, η, λ, s, z^L, z^U) with barrier parameter μ.
/// z^L and z^U are indexed by the instance's I^L and I^U.
struct IterateState {
  Vector x;
  Vector eta;
  Vector lambda;
  Vector s;
  Vector zL;
  Vector zU;
  double mu = 0.0;

  friend bool operator==(const IterateState& a, const IterateState& b);
};

/// Block offsets of the Newton system. Unknowns are ordered
/// (Δx, Δη, Δλ, Δs, Δz^L, Δz^U); equations are ordered
/// (stationarity, g + s, η∘s, h, z^L∘(x − x^L), z^U∘(x^U − x)).
struct KktLayout {
  Index n = 0;
  Index m_ineq = 0;
  Index m_eq = 0;
  Index n_lower = 0;
  Index n_upper = 0;

  explicit KktLayout(const NlpInstance& instance);

  Index size() const { return n + 2 * m_ineq + m_eq + n_lower + n_upper; }

  // Column (unknown) offsets.
  Index col_x() const { return 0; }
  Index col_eta() const { return n; }
  Index col_lambda() const { return n + m_ineq; }
  Index col_s() const { return n + m_ineq + m_eq; }
  Index col_zL() const { return n + 2 * m_ineq + m_eq; }
  Index col_zU() const { return col_zL() + n_lower; }

  // Row (equation) offsets.
  Index row_stationarity() const { return 0; }
  Index row_ineq() const { return n; }
  Index row_comp() const { return n + m_ineq; }
  Index row_eq() const { return n + 2 * m_ineq; }
  Index row_lower() const { return n + 2 * m_ineq + m_eq; }
  Index row_upper() const { return row_lower() + n_lower; }

  /// Number of complementarity pairs: m_ineq + |I^L| + |I^U|.
  Index pairs() const { return m_ineq + n_lower + n_upper; }
};

/// Search direction split into its variable groups.
struct Direction {
  Vector dx;
  Vector deta;
  Vector dlambda;
  Vector ds;
  Vector dzL;
  Vector dzU;
};

Direction split_direction(const KktLayout& layout, const Vector& y);
Vector pack_state(const KktLayout& layout, const IterateState& state);
IterateState unpack_state(const KktLayout& layout, const Vector& packed, double mu);

/// Strict interiority: η, s, z > 0 and x strictly inside its finite bounds.
bool is_interior(const NlpInstance& instance, const IterateState& state);

struct KktSystem {
  Matrix J;
  Vector F;
};

Vector residual(const NlpInstance& instance, const IterateState& state, double mu);
Matrix jacobian(const NlpInstance& instance, const IterateState& state);
KktSystem assemble(const NlpInstance& instance, const IterateState& state, double mu);

/// ηᵀs + (z^L)ᵀ(x − x^L) + (z^U)ᵀ(x^U − x).
double complementarity_sum(const NlpInstance& instance, const IterateState& state);
/// complementarity_sum / pairs, or 0 when there are no pairs.
double complementarity_average(const NlpInstance& instance, const IterateState& state);
/// σ times the complementarity average.
double complementarity_mu(const NlpInstance& instance, const IterateState& state, double sigma);

/// F at μ = 0, and its Euclidean norm.
Vector f0(const NlpInstance& instance, const IterateState& state);
double f0_norm(const NlpInstance& instance, const IterateState& state);

/// Indicator of the complementarity rows; F₀ = F + μ·e_c.
Vector complementarity_rows(const KktLayout& layout);

/// Runtime check of the inexact-Newton conditions
///   ‖Jy + F‖ ≤ η_tol · (complementarity average)
///   ‖y‖ ≤ (1 + σ + η_tol)‖F₀‖.
struct AssumptionCheck {
  bool residual_ok = false;
  bool bound_ok = false;
  double lhs_r = 0.0;
  double rhs_r = 0.0;
  double lhs_b = 0.0;
  double rhs_b = 0.0;
};

AssumptionCheck check_assumption(const NlpInstance& instance, const IterateState& state,
                                 const Matrix& J, const Vector& F, const Vector& y,
                                 double eta_tol, double sigma);

}  // namespace lipm
