#include "lipm/ipm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "lipm/linalg.hpp"
#include "lipm/problem_io.hpp"

namespace lipm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// min(1, τ·min{−vᵢ/Δvᵢ : Δvᵢ < 0}).
double boundary_ratio(const Vector& v, const Vector& dv, double tau) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, tau * (-v[i] / dv[i]));
  return alpha;
}

void fill_point_metrics(const NlpInstance& instance, const IterateState& st, IpmLogRow& row) {
  row.objective = instance.objective(st.x);
  row.viol = violations(instance, st.x);
  row.interior = is_interior(instance, st);
}

void fill_condition(const Matrix& J, const ScalingDiag* D, IpmLogRow& row) {
  row.cond_J = cond_estimate(J);
  const Matrix H = J.transpose() * J;
  row.cond_H = cond_estimate(H);
  const ScalingDiag scale = D ? *D : ruiz_equilibrate(H);
  row.cond_H_scaled = cond_estimate(apply_scaling(H, scale));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate_config(const IpmConfig& c) {
  if (!(c.sigma > 0.0 && c.sigma < 1.0)) throw std::invalid_argument("sigma must lie in (0, 1)");
  if (!(c.tau > 0.0 && c.tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (!(c.eta_tol > 0.0 && c.eta_tol < 1.0)) throw std::invalid_argument("eta_tol must lie in (0, 1)");
  if (c.max_iters < 0 || c.K < 0) throw std::invalid_argument("iteration counts must be >= 0");
  if (!(c.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (c.inner_kind == InnerKind::Lstm && c.T < 1) throw std::invalid_argument("T must be >= 1");
  if (c.max_backtracks < 0) throw std::invalid_argument("max_backtracks must be >= 0");
}

double StepLengths::min() const {
  return std::min({alpha_eta, alpha_s, alpha_zL, alpha_zU, alpha_x_lambda});
}

IterateState initial_point(const NlpInstance& instance, double sigma) {
  const Index n = instance.n();
  IterateState st;
  st.x = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const double lo = instance.lower()[i];
    const double up = instance.upper()[i];
    const bool has_lo = std::isfinite(lo);
    const bool has_up = std::isfinite(up);
    if (has_lo && has_up)
      st.x[i] = 0.5 * (lo + up);
    else if (has_lo)
      st.x[i] = lo + 1.0;
    else if (has_up)
      st.x[i] = up - 1.0;
  }
  st.eta = Vector::Ones(instance.m_ineq());
  st.s = Vector::Ones(instance.m_ineq());
  st.lambda = Vector::Zero(instance.m_eq());
  st.zL = Vector::Ones(instance.n_lower());
  st.zU = Vector::Ones(instance.n_upper());
  st.mu = complementarity_mu(instance, st, sigma);
  return st;
}

StepLengths step_lengths(const NlpInstance& instance, const IterateState& st,
                         const Direction& dir, double tau) {
  StepLengths a;
  a.alpha_eta = boundary_ratio(st.eta, dir.deta, tau);
  a.alpha_s = boundary_ratio(st.s, dir.ds, tau);
  a.alpha_zL = boundary_ratio(st.zL, dir.dzL, tau);
  a.alpha_zU = boundary_ratio(st.zU, dir.dzU, tau);

  const auto& lo_idx = instance.lower_indices();
  const auto& up_idx = instance.upper_indices();
  if (!lo_idx.empty() || !up_idx.empty()) {
    double alpha = 1.0;
    for (Index i : lo_idx)
      if (dir.dx[i] < 0.0)
        alpha = std::min(alpha, tau * ((st.x[i] - instance.lower()[i]) / -dir.dx[i]));
    for (Index i : up_idx)
      if (dir.dx[i] > 0.0)
        alpha = std::min(alpha, tau * ((instance.upper()[i] - st.x[i]) / dir.dx[i]));
    a.alpha_x_lambda = alpha;
  } else if (instance.m_ineq() > 0) {
    a.alpha_x_lambda = a.alpha_s;
  } else {
    a.alpha_x_lambda = 1.0;
  }
  return a;
}

PreparedSystem prepare_system(const NlpInstance& instance, const IterateState& state,
                              bool precondition) {
  PreparedSystem p{assemble(instance, state, state.mu), ScalingDiag{}};
  if (precondition)
    p.D = ruiz_equilibrate(p.sys.J.transpose() * p.sys.J);
  else
    p.D = ScalingDiag::identity(p.sys.J.cols());
  return p;
}

IterateState apply_group_step(const NlpInstance& instance, const IterateState& st,
                              const Direction& dir, const StepLengths& a, double sigma) {
  IterateState next = st;
  next.x += a.alpha_x_lambda * dir.dx;
  next.lambda += a.alpha_x_lambda * dir.dlambda;
  next.eta += a.alpha_eta * dir.deta;
  next.s += a.alpha_s * dir.ds;
  next.zL += a.alpha_zL * dir.dzL;
  next.zU += a.alpha_zU * dir.dzU;
  next.mu = complementarity_mu(instance, next, sigma);
  return next;
}

IterateState apply_common_step(const NlpInstance& instance, const IterateState& st,
                               const Direction& dir, double alpha, double sigma) {
  return apply_group_step(instance, st, dir, {alpha, alpha, alpha, alpha, alpha}, sigma);
}

std::pair<IterateState, IpmLogRow> ipm_step(const NlpInstance& instance,
                                            const IterateState& state, const IpmConfig& config,
                                            const LstmParams* theta) {
  const auto start = Clock::now();
  const KktLayout layout(instance);
  const bool scaled = config.precondition && config.inner_kind != InnerKind::Direct;
  const PreparedSystem prep = prepare_system(instance, state, scaled);
  const Matrix& J = prep.sys.J;
  const Vector& F = prep.sys.F;
  const Vector F0 = F + state.mu * complementarity_rows(layout);

  IpmLogRow row;
  row.mu = state.mu;
  row.f0_inf = F0.lpNorm<Eigen::Infinity>();
  row.f0_2 = F0.norm();
  row.merit_before = row.f0_2;

  const Stage stage = config.stage;
  const InnerKind kind = stage == Stage::Two ? InnerKind::Direct : config.inner_kind;
  InnerContext ctx;
  ctx.theta = theta;
  if (scaled) ctx.D = prep.D;
  ctx.T = config.T;
  ctx.gd_steps = config.gd_steps;
  ctx.gd_tol = config.gd_tol;
  const InnerSolution sol = inner_solve(kind, J, F, ctx);
  row.inner_residual = sol.residual_norm;
  const double F_norm = F.norm();
  row.inner_rel_residual = F_norm > 0.0 ? sol.residual_norm / F_norm : 0.0;
  row.assumption = check_assumption(instance, state, J, F, sol.y, config.eta_tol, config.sigma);

  const Direction dir = split_direction(layout, sol.y);
  row.alphas = step_lengths(instance, state, dir, config.tau);

  IterateState next;
  if (stage == Stage::One) {
    next = apply_group_step(instance, state, dir, row.alphas, config.sigma);
    row.alpha = row.alphas.min();
    row.merit_after = f0_norm(instance, next);
  } else {
    const double rho =
        row.merit_before > 0.0 ? std::min(1.0, (F0 + J * sol.y).norm() / row.merit_before) : 0.0;
    double alpha = row.alphas.min();
    for (int bt = 0;; ++bt) {
      next = apply_common_step(instance, state, dir, alpha, config.sigma);
      row.alpha = alpha;
      row.backtracks = bt;
      row.eta_hat = 1.0 - alpha * (1.0 - rho);
      row.merit_after = is_interior(instance, next) ? f0_norm(instance, next) : kInf;
      if (row.merit_after <= (1.0 - config.beta * (1.0 - row.eta_hat)) * row.merit_before) break;
      if (bt == config.max_backtracks) {
        row.backtrack_exhausted = true;
        break;
      }
      alpha *= 0.5;
    }
  }
  fill_point_metrics(instance, next, row);
  row.time = seconds_since(start);
  return {std::move(next), row};
}

IpmResult solve_stage1(const NlpInstance& instance, const LstmParams* theta,
                       const IpmConfig& config) {
  validate_config(config);
  if (config.inner_kind == InnerKind::Lstm && !theta)
    throw std::invalid_argument("solve_stage1: Lstm inner solver requires parameters");
  IpmConfig cfg = config;
  cfg.stage = Stage::One;
  const auto start = Clock::now();
  IpmResult res;
  res.state = initial_point(instance, cfg.sigma);
  res.log.reserve(static_cast<std::size_t>(cfg.K));
  for (Index k = 0; k < cfg.K; ++k) {
    auto [next, row] = ipm_step(instance, res.state, cfg, theta);
    row.iter = k;
    if (cfg.cond_every > 0 && k % cfg.cond_every == 0) {
      const bool scaled = cfg.precondition && cfg.inner_kind != InnerKind::Direct;
      const PreparedSystem prep = prepare_system(instance, res.state, scaled);
      fill_condition(prep.sys.J, scaled ? &prep.D : nullptr, row);
    }
    row.time = seconds_since(start);
    res.log.push_back(row);
    res.state = std::move(next);
    if (!row.interior) throw std::logic_error("stage 1 left the interior");
  }
  res.iterations = cfg.K;
  res.converged = f0(instance, res.state).lpNorm<Eigen::Infinity>() <= cfg.tol;
  res.elapsed = seconds_since(start);
  return res;
}

IterateState clamp_interior(const NlpInstance& instance, const IterateState& state,
                            double margin) {
  IterateState st = state;
  auto floor_at = [margin](Vector& v) { v = v.cwiseMax(margin); };
  floor_at(st.eta);
  floor_at(st.s);
  floor_at(st.zL);
  floor_at(st.zU);
  for (Index i : instance.lower_indices()) {
    const double lo = instance.lower()[i];
    const double up = instance.upper()[i];
    const double cap = std::isfinite(up) ? 0.5 * (lo + up) : kInf;
    st.x[i] = std::max(st.x[i], std::min(lo + margin, cap));
  }
  for (Index i : instance.upper_indices()) {
    const double lo = instance.lower()[i];
    const double up = instance.upper()[i];
    const double cap = std::isfinite(lo) ? 0.5 * (lo + up) : -kInf;
    st.x[i] = std::min(st.x[i], std::max(up - margin, cap));
  }
  return st;
}

IpmResult solve_stage2(const NlpInstance& instance, const IterateState& start_state,
                       const IpmConfig& config) {
  validate_config(config);
  IpmConfig cfg = config;
  cfg.stage = Stage::Two;
  cfg.inner_kind = InnerKind::Direct;
  const auto start = Clock::now();
  IpmResult res;
  res.state = clamp_interior(instance, start_state);
  res.state.mu = complementarity_mu(instance, res.state, cfg.sigma);
  if (!is_interior(instance, res.state))
    throw std::invalid_argument("solve_stage2: start state cannot be made interior");
  for (Index k = 0;; ++k) {
    if (f0(instance, res.state).lpNorm<Eigen::Infinity>() <= cfg.tol) {
      res.converged = true;
      break;
    }
    if (k >= cfg.max_iters) break;
    auto [next, row] = ipm_step(instance, res.state, cfg);
    row.iter = k;
    if (cfg.cond_every > 0 && k % cfg.cond_every == 0)
      fill_condition(assemble(instance, res.state, res.state.mu).J, nullptr, row);
    row.time = seconds_since(start);
    res.log.push_back(row);
    res.state = std::move(next);
    ++res.iterations;
    if (!row.interior) throw std::logic_error("stage 2 left the interior");
  }
  res.elapsed = seconds_since(start);
  return res;
}

IpmResult solve_stage2_cold(const NlpInstance& instance, const IpmConfig& config) {
  return solve_stage2(instance, initial_point(instance, config.sigma), config);
}

nlohmann::json state_to_json(const IterateState& st) {
  return {{"x", vector_to_json(st.x)},     {"eta", vector_to_json(st.eta)},
          {"lambda", vector_to_json(st.lambda)}, {"s", vector_to_json(st.s)},
          {"zL", vector_to_json(st.zL)},   {"zU", vector_to_json(st.zU)},
          {"mu", st.mu}};
}

IterateState state_from_json(const nlohmann::json& j) {
  IterateState st;
  st.x = vector_from_json(j.at("x"));
  st.eta = vector_from_json(j.at("eta"));
  st.lambda = vector_from_json(j.at("lambda"));
  st.s = vector_from_json(j.at("s"));
  st.zL = vector_from_json(j.at("zL"));
  st.zU = vector_from_json(j.at("zU"));
  st.mu = j.at("mu").get<double>();
  return st;
}

void save_warm_start(const IterateState& state, const std::filesystem::path& path) {
  write_json_file(state_to_json(state), path);
}

IterateState load_warm_start(const std::filesystem::path& path) {
  return state_from_json(read_json_file(path));
}

void write_log_csv(const std::vector<IpmLogRow>& log, std::ostream& out, bool include_timing) {
  out << "iter,mu,f0_inf,f0_2,inner_residual,inner_rel_residual,alpha_eta,alpha_s,alpha_zL,"
         "alpha_zU,alpha_x_lambda,alpha,backtracks,backtrack_exhausted,eta_hat,merit_before,"
         "merit_after,cond_J,cond_H,cond_H_scaled,residual_ok,bound_ok,lhs_r,rhs_r,lhs_b,rhs_b,"
         "objective,max_ineq,mean_ineq,max_eq,mean_eq,interior";
  if (include_timing) out << ",time";
  out << '\n';
  for (const auto& r : log) {
    const auto& a = r.assumption;
    out << r.iter << ',' << fmt(r.mu) << ',' << fmt(r.f0_inf) << ',' << fmt(r.f0_2) << ','
        << fmt(r.inner_residual) << ',' << fmt(r.inner_rel_residual) << ','
        << fmt(r.alphas.alpha_eta) << ',' << fmt(r.alphas.alpha_s) << ','
        << fmt(r.alphas.alpha_zL) << ',' << fmt(r.alphas.alpha_zU) << ','
        << fmt(r.alphas.alpha_x_lambda) << ',' << fmt(r.alpha) << ',' << r.backtracks << ','
        << int(r.backtrack_exhausted) << ',' << fmt(r.eta_hat) << ',' << fmt(r.merit_before)
        << ',' << fmt(r.merit_after) << ',' << fmt(r.cond_J) << ',' << fmt(r.cond_H) << ','
        << fmt(r.cond_H_scaled) << ',' << int(a.residual_ok) << ',' << int(a.bound_ok) << ','
        << fmt(a.lhs_r) << ',' << fmt(a.rhs_r) << ',' << fmt(a.lhs_b) << ',' << fmt(a.rhs_b)
        << ',' << fmt(r.objective) << ',' << fmt(r.viol.max_ineq) << ','
        << fmt(r.viol.mean_ineq) << ',' << fmt(r.viol.max_eq) << ',' << fmt(r.viol.mean_eq)
        << ',' << int(r.interior);
    if (include_timing) out << ',' << fmt(r.time);
    out << '\n';
  }
}

void save_log_csv(const std::vector<IpmLogRow>& log, const std::filesystem::path& path,
                  bool include_timing) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_log_csv(log, out, include_timing);
}

}  // namespace lipm
