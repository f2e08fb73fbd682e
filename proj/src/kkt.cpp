#include "lipm/kkt.hpp"

#include <stdexcept>

namespace lipm {

namespace {

bool same(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

void require_interior(const NlpInstance& instance, const IterateState& state) {
  if (!is_interior(instance, state))
    throw std::logic_error("KKT assembly requires a strictly interior state");
}

}  // namespace

bool operator==(const IterateState& a, const IterateState& b) {
  return same(a.x, b.x) && same(a.eta, b.eta) && same(a.lambda, b.lambda) &&
         same(a.s, b.s) && same(a.zL, b.zL) && same(a.zU, b.zU) && a.mu == b.mu;
}

KktLayout::KktLayout(const NlpInstance& instance)
    : n(instance.n()),
      m_ineq(instance.m_ineq()),
      m_eq(instance.m_eq()),
      n_lower(instance.n_lower()),
      n_upper(instance.n_upper()) {}

Direction split_direction(const KktLayout& L, const Vector& y) {
  if (y.size() != L.size()) throw std::invalid_argument("direction length mismatch");
  return {y.segment(L.col_x(), L.n),         y.segment(L.col_eta(), L.m_ineq),
          y.segment(L.col_lambda(), L.m_eq), y.segment(L.col_s(), L.m_ineq),
          y.segment(L.col_zL(), L.n_lower),  y.segment(L.col_zU(), L.n_upper)};
}

Vector pack_state(const KktLayout& L, const IterateState& st) {
  Vector v(L.size());
  v << st.x, st.eta, st.lambda, st.s, st.zL, st.zU;
  return v;
}

IterateState unpack_state(const KktLayout& L, const Vector& packed, double mu) {
  const Direction d = split_direction(L, packed);
  return {d.dx, d.deta, d.dlambda, d.ds, d.dzL, d.dzU, mu};
}

bool is_interior(const NlpInstance& instance, const IterateState& st) {
  const KktLayout L(instance);
  if (st.x.size() != L.n || st.eta.size() != L.m_ineq || st.lambda.size() != L.m_eq ||
      st.s.size() != L.m_ineq || st.zL.size() != L.n_lower || st.zU.size() != L.n_upper)
    return false;
  if (!st.x.allFinite() || !st.lambda.allFinite()) return false;
  auto positive = [](const Vector& v) { return v.size() == 0 || (v.array() > 0.0).all(); };
  if (!positive(st.eta) || !positive(st.s) || !positive(st.zL) || !positive(st.zU)) return false;
  if (!st.eta.allFinite() || !st.s.allFinite() || !st.zL.allFinite() || !st.zU.allFinite())
    return false;
  for (Index i : instance.lower_indices())
    if (!(st.x[i] > instance.lower()[i])) return false;
  for (Index i : instance.upper_indices())
    if (!(st.x[i] < instance.upper()[i])) return false;
  return true;
}

Vector residual(const NlpInstance& instance, const IterateState& st, double mu) {
  require_interior(instance, st);
  const KktLayout L(instance);
  const auto& lo_idx = instance.lower_indices();
  const auto& up_idx = instance.upper_indices();

  Vector F(L.size());
  Vector stat = instance.objective_gradient(st.x);
  if (L.m_ineq > 0) stat.noalias() += instance.ineq_jacobian(st.x).transpose() * st.eta;
  if (L.m_eq > 0) stat.noalias() += instance.eq_matrix().transpose() * st.lambda;
  for (Index k = 0; k < L.n_lower; ++k) stat[lo_idx[static_cast<std::size_t>(k)]] -= st.zL[k];
  for (Index k = 0; k < L.n_upper; ++k) stat[up_idx[static_cast<std::size_t>(k)]] += st.zU[k];

  F.segment(L.row_stationarity(), L.n) = stat;
  F.segment(L.row_ineq(), L.m_ineq) = instance.ineq_values(st.x) + st.s;
  F.segment(L.row_comp(), L.m_ineq) = st.eta.cwiseProduct(st.s).array() - mu;
  F.segment(L.row_eq(), L.m_eq) = instance.eq_values(st.x);
  for (Index k = 0; k < L.n_lower; ++k) {
    const Index i = lo_idx[static_cast<std::size_t>(k)];
    F[L.row_lower() + k] = st.zL[k] * (st.x[i] - instance.lower()[i]) - mu;
  }
  for (Index k = 0; k < L.n_upper; ++k) {
    const Index i = up_idx[static_cast<std::size_t>(k)];
    F[L.row_upper() + k] = st.zU[k] * (instance.upper()[i] - st.x[i]) - mu;
  }
  return F;
}

Matrix jacobian(const NlpInstance& instance, const IterateState& st) {
  require_interior(instance, st);
  const KktLayout L(instance);
  const auto& lo_idx = instance.lower_indices();
  const auto& up_idx = instance.upper_indices();
  const Index N = L.size();
  Matrix J = Matrix::Zero(N, N);

  const Matrix Jg = instance.ineq_jacobian(st.x);
  const Matrix& Jh = instance.eq_matrix();

  // Stationarity rows.
  J.block(L.row_stationarity(), L.col_x(), L.n, L.n) = instance.lagrangian_hessian(st.x, st.eta);
  J.block(L.row_stationarity(), L.col_eta(), L.n, L.m_ineq) = Jg.transpose();
  J.block(L.row_stationarity(), L.col_lambda(), L.n, L.m_eq) = Jh.transpose();
  for (Index k = 0; k < L.n_lower; ++k) J(lo_idx[static_cast<std::size_t>(k)], L.col_zL() + k) = -1.0;
  for (Index k = 0; k < L.n_upper; ++k) J(up_idx[static_cast<std::size_t>(k)], L.col_zU() + k) = 1.0;

  // g(x) + s.
  J.block(L.row_ineq(), L.col_x(), L.m_ineq, L.n) = Jg;
  J.block(L.row_ineq(), L.col_s(), L.m_ineq, L.m_ineq).diagonal().setOnes();

  // η∘s.
  J.block(L.row_comp(), L.col_eta(), L.m_ineq, L.m_ineq).diagonal() = st.s;
  J.block(L.row_comp(), L.col_s(), L.m_ineq, L.m_ineq).diagonal() = st.eta;

  // h(x).
  J.block(L.row_eq(), L.col_x(), L.m_eq, L.n) = Jh;

  // Bound complementarity.
  for (Index k = 0; k < L.n_lower; ++k) {
    const Index i = lo_idx[static_cast<std::size_t>(k)];
    J(L.row_lower() + k, L.col_x() + i) = st.zL[k];
    J(L.row_lower() + k, L.col_zL() + k) = st.x[i] - instance.lower()[i];
  }
  for (Index k = 0; k < L.n_upper; ++k) {
    const Index i = up_idx[static_cast<std::size_t>(k)];
    J(L.row_upper() + k, L.col_x() + i) = -st.zU[k];
    J(L.row_upper() + k, L.col_zU() + k) = instance.upper()[i] - st.x[i];
  }
  return J;
}

KktSystem assemble(const NlpInstance& instance, const IterateState& state, double mu) {
  return {jacobian(instance, state), residual(instance, state, mu)};
}

double complementarity_sum(const NlpInstance& instance, const IterateState& st) {
  double sum = st.eta.dot(st.s);
  const auto& lo_idx = instance.lower_indices();
  const auto& up_idx = instance.upper_indices();
  for (std::size_t k = 0; k < lo_idx.size(); ++k)
    sum += st.zL[static_cast<Index>(k)] * (st.x[lo_idx[k]] - instance.lower()[lo_idx[k]]);
  for (std::size_t k = 0; k < up_idx.size(); ++k)
    sum += st.zU[static_cast<Index>(k)] * (instance.upper()[up_idx[k]] - st.x[up_idx[k]]);
  return sum;
}

double complementarity_average(const NlpInstance& instance, const IterateState& state) {
  const Index pairs = KktLayout(instance).pairs();
  if (pairs == 0) return 0.0;
  return complementarity_sum(instance, state) / static_cast<double>(pairs);
}

double complementarity_mu(const NlpInstance& instance, const IterateState& state, double sigma) {
  return sigma * complementarity_average(instance, state);
}

Vector f0(const NlpInstance& instance, const IterateState& state) {
  return residual(instance, state, 0.0);
}

double f0_norm(const NlpInstance& instance, const IterateState& state) {
  return f0(instance, state).norm();
}

Vector complementarity_rows(const KktLayout& L) {
  Vector e = Vector::Zero(L.size());
  e.segment(L.row_comp(), L.m_ineq).setOnes();
  e.segment(L.row_lower(), L.n_lower + L.n_upper).setOnes();
  return e;
}

AssumptionCheck check_assumption(const NlpInstance& instance, const IterateState& state,
                                 const Matrix& J, const Vector& F, const Vector& y,
                                 double eta_tol, double sigma) {
  AssumptionCheck c;
  c.lhs_r = (J * y + F).norm();
  c.rhs_r = eta_tol * complementarity_average(instance, state);
  c.lhs_b = y.norm();
  c.rhs_b = (1.0 + sigma + eta_tol) * f0_norm(instance, state);
  c.residual_ok = c.lhs_r <= c.rhs_r;
  c.bound_ok = c.lhs_b <= c.rhs_b;
  return c;
}

}  // namespace lipm
