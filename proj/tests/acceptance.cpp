// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "lipm/bench.hpp"
#include "lipm/ipm.hpp"
#include "lipm/linalg.hpp"
#include "lipm/lstm.hpp"
#include "lipm/train.hpp"
#include "support.hpp"

using namespace lipm;
using namespace lipm::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Equality-QP oracle

Outcome kkt_oracle() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  int converged = 0;
  for (int i = 0; i < 50; ++i) {
    const Index n = 2 + static_cast<Index>(rng() % 19);
    const Index m = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(n - 1));
    const NlpInstance inst = random_equality_qp(rng, n, m);
    Matrix K = Matrix::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = inst.Q0();
    K.topRightCorner(n, m) = inst.eq_matrix().transpose();
    K.bottomLeftCorner(m, n) = inst.eq_matrix();
    Vector rhs(n + m);
    rhs << -inst.p0(), inst.eq_rhs();
    const Vector sol = K.fullPivLu().solve(rhs);

    const IpmResult res = solve_stage2_cold(inst, IpmConfig{});
    converged += res.converged;
    const double ex = (res.state.x - sol.head(n)).norm() / std::max(1.0, sol.head(n).norm());
    const double el = (res.state.lambda - sol.tail(m)).norm() / std::max(1.0, sol.tail(m).norm());
    worst = std::max({worst, ex, el});
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && converged == 50 && secs < 1.0,
          format("max rel err %.2e, converged %d/50, %.3f s", worst, converged, secs)};
}

// ---------------------------------------------------------------------------
// 2. LSTM gradient vs central differences

double gradient_error(const LstmParams& theta, const Matrix& J, const Vector& F,
                      const ScalingDiag& D, Index T) {
  const Vector analytic = backward(forward_unroll(theta, J, F, D, T).trace, theta).flatten();
  const Vector flat = theta.flatten();
  auto loss = [&](const Vector& v) {
    return inner_loss(J, F, forward_unroll(LstmParams::unflatten(theta.hidden_dim(), v), J, F, D, T).y);
  };
  Vector numeric(flat.size());
  const double h = 1e-6;
  for (Index k = 0; k < flat.size(); ++k) {
    Vector p = flat, m = flat;
    p[k] += h;
    m[k] -= h;
    numeric[k] = (loss(p) - loss(m)) / (2.0 * h);
  }
  const double floor = 1e-4 * std::max(numeric.cwiseAbs().maxCoeff(), 1e-12);
  double worst = 0.0;
  for (Index k = 0; k < flat.size(); ++k)
    worst = std::max(worst, std::abs(analytic[k] - numeric[k]) /
                                std::max({std::abs(analytic[k]), std::abs(numeric[k]), floor}));
  return worst;
}

Outcome gradient_checks() {
  const auto t0 = Clock::now();
  Rng rng(202);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Index H = 1 + static_cast<Index>(rng() % 8);
    const Index T = 1 + static_cast<Index>(rng() % 4);
    const Index N = 2 + static_cast<Index>(rng() % 9);
    LstmParams theta = LstmParams::initialized(H, rng());
    theta.W *= 5.0;
    theta.w_out = 0.3 * normal_vector(rng, H);
    theta.b_out = 0.1 * normal_vector(rng, 1)[0];
    const Matrix J = normal_matrix(rng, N, N) / std::sqrt(double(N));
    const Vector F = normal_vector(rng, N);
    const ScalingDiag D{uniform_vector(rng, N, 0.5, 2.0)};
    worst = std::max(worst, gradient_error(theta, J, F, D, T));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && secs < 10.0, format("max rel err %.2e over 20 configs, %.2f s", worst, secs)};
}

// ---------------------------------------------------------------------------
// 3. KKT Jacobian vs central differences

Outcome jacobian_checks() {
  const auto t0 = Clock::now();
  Rng rng(303);
  std::vector<NlpInstance> pool;
  const std::vector<FamilyConfig> fams{
      {6, 3, 2, FamilyTag::QpRhs, PerturbMode::Rhs, 3, 1},
      {6, 3, 2, FamilyTag::QpAll, PerturbMode::All, 2, 2},
      {6, 3, 2, FamilyTag::QcqpRhs, PerturbMode::Rhs, 3, 3},
      {6, 3, 2, FamilyTag::QcqpAll, PerturbMode::All, 2, 4},
      {6, 3, 2, FamilyTag::NonconvexSin, PerturbMode::Rhs, 5, 5}};
  for (const auto& fc : fams)
    for (auto& inst : generate(fc).instances) pool.push_back(std::move(inst));
  for (int i = 0; i < 5; ++i) pool.push_back(mixed_instance(rng, 5, i % 2 == 1));

  double worst = 0.0;
  for (const auto& inst : pool) {
    const IterateState st = random_interior_state(inst, rng);
    const KktLayout L(inst);
    auto fn = [&](const Vector& v) { return residual(inst, unpack_state(L, v, st.mu), st.mu); };
    worst = std::max(worst, rel_err(jacobian(inst, st), fd_jacobian(fn, pack_state(L, st))));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && pool.size() == 20 && secs < 10.0,
          format("max rel err %.2e at %zu states (QP, QCQP, nonconvex, bounded external), %.2f s",
                 worst, pool.size(), secs)};
}

// ---------------------------------------------------------------------------
// 4-6. Convergence suite, log audit, preconditioning

struct ConvergenceRun {
  std::vector<NlpInstance> instances;
  std::vector<IpmResult> results;
  double seconds = 0.0;
};

ConvergenceRun convergence_runs() {
  ConvergenceRun run;
  const auto t0 = Clock::now();
  for (FamilyTag tag : {FamilyTag::QpRhs, FamilyTag::QcqpRhs})
    for (auto& inst : generate({50, 25, 25, tag, PerturbMode::Rhs, 100, 404}).instances)
      run.instances.push_back(std::move(inst));
  IpmConfig cfg;
  cfg.max_iters = 200;
  for (const auto& inst : run.instances) run.results.push_back(solve_stage2_cold(inst, cfg));
  run.seconds = seconds_since(t0);
  return run;
}

std::string logs_csv(const std::vector<IpmResult>& results) {
  std::ostringstream out;
  for (const auto& r : results) write_log_csv(r.log, out, false);
  return out.str();
}

Outcome convergence(const ConvergenceRun& run) {
  int qp = 0, qcqp = 0;
  double qp_iters = 0, qcqp_iters = 0;
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    const auto& r = run.results[i];
    const bool ok = r.converged && r.iterations <= 200;
    (i < 100 ? qp : qcqp) += ok;
    (i < 100 ? qp_iters : qcqp_iters) += double(r.iterations);
  }
  return {qp >= 95 && qcqp >= 95 && run.seconds < 120.0,
          format("QP %d/100 (mean %.1f iters), QCQP %d/100 (mean %.1f iters), %.1f s", qp,
                 qp_iters / 100, qcqp, qcqp_iters / 100, run.seconds)};
}

Outcome log_audit(const ConvergenceRun& run) {
  const double beta = IpmConfig{}.beta;
  long rows = 0, not_interior = 0, decrease_violations = 0, exhausted = 0;
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    if (!is_interior(run.instances[i], run.results[i].state)) ++not_interior;
    for (const auto& row : run.results[i].log) {
      ++rows;
      if (!row.interior) ++not_interior;
      if (row.backtrack_exhausted) ++exhausted;
      if (!(row.merit_after <= (1.0 - beta * (1.0 - row.eta_hat)) * row.merit_before))
        ++decrease_violations;
    }
  }
  return {rows > 0 && not_interior == 0 && decrease_violations == 0,
          format("%ld logged steps, %ld non-interior, %ld decrease-test violations, %ld exhausted backtracks",
                 rows, not_interior, decrease_violations, exhausted)};
}

Outcome preconditioning(const ConvergenceRun& run) {
  int reduced = 0, sampled = 0;
  double log_ratio = 0.0;
  IpmConfig cfg;
  cfg.max_iters = 200;
  for (std::size_t i = 0; i < run.results.size() && sampled < 100; i += 2) {
    const NlpInstance& inst = run.instances[i];
    const Index iters = run.results[i].iterations;
    if (iters == 0) continue;
    // Replays the deterministic solve up to a spread of iteration indices.
    cfg.max_iters = static_cast<Index>(i / 2) % iters;
    const IterateState st = solve_stage2_cold(inst, cfg).state;
    const Matrix J = assemble(inst, st, st.mu).J;
    const Matrix H = J.transpose() * J;
    const double before = cond_estimate(H);
    const double after = cond_estimate(apply_scaling(H, ruiz_equilibrate(H)));
    reduced += after < before;
    log_ratio += std::log10(before / after);
    ++sampled;
  }
  return {sampled == 100 && reduced >= 90,
          format("reduced on %d/%d systems, mean log10 reduction %.2f", reduced, sampled,
                 log_ratio / std::max(sampled, 1))};
}

// ---------------------------------------------------------------------------
// 7-9. Training probe, warm-start effect, inexact-Newton condition monitor

struct ProbeRun {
  Dataset dataset;
  TrainConfig config;
  TrainResult result;
  double seconds = 0.0;
  std::string artifacts;  // timing-free CSV/JSON outputs for determinism
};

Dataset probe_dataset() {
  Dataset ds = generate({10, 5, 5, FamilyTag::QpRhs, PerturbMode::Rhs, 260, 0});
  ds.train_end = 200;
  ds.val_end = 230;
  return ds;
}

TrainConfig probe_config() {
  TrainConfig c;
  c.K = 20;
  c.T = 10;
  c.hidden_dim = 20;
  c.lr = 1e-3;
  c.batch_size = 16;
  c.max_epochs = 100;
  c.patience = 100;
  c.seed = 0;
  return c;
}

IpmConfig probe_ipm(const TrainConfig& c) {
  IpmConfig cfg;
  cfg.inner_kind = InnerKind::Lstm;
  cfg.K = c.K;
  cfg.T = c.T;
  return cfg;
}

ProbeRun training_probe() {
  ProbeRun run;
  run.dataset = probe_dataset();
  run.config = probe_config();
  const auto t0 = Clock::now();
  run.result = train(run.dataset, run.config);
  run.seconds = seconds_since(t0);

  std::ostringstream out;
  write_history_csv(run.result.history.epochs, out);
  out << params_to_json(run.result.theta).dump() << '\n';
  const IpmConfig cfg = probe_ipm(run.config);
  for (const auto& inst : run.dataset.validation())
    write_log_csv(solve_stage1(inst, &run.result.theta, cfg).log, out, false);
  run.artifacts = out.str();
  return run;
}

Outcome training_effect(const ProbeRun& run) {
  const auto& h = run.result.history;
  if (h.epochs.empty() || !h.best) return {false, "no epochs recorded"};
  const double first = h.epochs.front().val.loss;
  const double kept = h.epochs[*h.best].val.loss;
  const double last = h.epochs.back().val.loss;

  double rel_sum = 0.0;
  long systems = 0, monotone = 0;
  const LstmParams& theta = run.result.theta;
  for (const auto& inst : run.dataset.validation()) {
    IterateState st = initial_point(inst, run.config.sigma);
    for (Index k = 0; k < run.config.K; ++k) {
      const PreparedSystem prep = prepare_system(inst, st, run.config.precondition);
      const auto unroll = forward_unroll(theta, prep.sys.J, prep.sys.F, prep.D, run.config.T);
      const double f_norm = prep.sys.F.norm();
      double prev = f_norm;
      bool mono = true;
      for (const Vector& y : unroll.y) {
        const double r = (prep.sys.J * y + prep.sys.F).norm();
        mono = mono && r <= prev;
        prev = r;
      }
      rel_sum += prev / f_norm;
      monotone += mono;
      ++systems;
      const Direction dir = split_direction(KktLayout(inst), unroll.y.back());
      st = apply_group_step(inst, st, dir, step_lengths(inst, st, dir, run.config.tau),
                            run.config.sigma);
    }
  }
  const double mean_rel = rel_sum / double(systems);
  const double mono_frac = double(monotone) / double(systems);
  const bool a = kept <= 0.5 * first;
  const bool b = mean_rel <= 0.5;
  const bool c = mono_frac >= 0.8;
  return {a && b && c && run.seconds <= 900.0,
          format("(a) %s val loss %.4f -> %.4f kept (last %.4f, epoch-1 %.4f); (b) %s mean "
                 "rel residual %.3f; (c) %s monotone on %.1f%% of %ld systems; %zu epochs in %.0f s",
                 a ? "ok" : "FAIL", first, kept, last, first, b ? "ok" : "FAIL", mean_rel,
                 c ? "ok" : "FAIL", 100.0 * mono_frac, systems, h.epochs.size(), run.seconds)};
}

Outcome warm_start_effect(const ProbeRun& run, BenchSummary* summary_out) {
  const auto t0 = Clock::now();
  const auto test = run.dataset.test();
  const auto results = run_benchmark(test, run.result.theta, probe_ipm(run.config), 1,
                                     static_cast<Index>(run.dataset.val_end));
  const BenchSummary s = summarize(results);
  *summary_out = s;
  const double secs = seconds_since(t0);
  const bool gain_ok = s.ite_gain >= 0.2;
  const bool eq_ok = s.s1.max_eq <= 0.02;
  return {test.size() >= 30 && gain_ok && eq_ok && secs <= 300.0,
          format("%zu test instances: cold %.2f iters, two-stage %.2f iters, ite_gain %.1f%% %s "
                 "(mean of per-instance %.1f%%); stage-1 max_eq %.4f %s, max_ineq %.4f; time_gain "
                 "%.1f%% (not gated); %.1f s",
                 test.size(), s.cold_iters, s.warm_iters, 100.0 * s.ite_gain,
                 gain_ok ? "ok" : "FAIL", 100.0 * s.mean_ite_gain, s.s1.max_eq,
                 eq_ok ? "ok" : "FAIL", s.s1.max_ineq, 100.0 * s.time_gain, secs)};
}

Outcome assumption_monitor(const ProbeRun& run) {
  const IpmConfig cfg = probe_ipm(run.config);
  const Index K = cfg.K;
  std::vector<double> lhs(static_cast<std::size_t>(K), 0.0), rhs(lhs.size(), 0.0);
  long late = 0, late_ok = 0;
  const auto val = run.dataset.validation();
  for (const auto& inst : val) {
    const IpmResult r = solve_stage1(inst, &run.result.theta, cfg);
    for (Index k = 0; k < K; ++k) {
      const auto& a = r.log[static_cast<std::size_t>(k)].assumption;
      lhs[static_cast<std::size_t>(k)] += a.lhs_r / double(val.size());
      rhs[static_cast<std::size_t>(k)] += a.rhs_r / double(val.size());
      if (k >= K / 4) {
        ++late;
        late_ok += a.residual_ok;
      }
    }
  }
  const Index q = std::max<Index>(K / 4, 1);
  double head = 0.0, tail = 0.0;
  for (Index k = 0; k < q; ++k) {
    head += lhs[static_cast<std::size_t>(k)] / double(q);
    tail += lhs[static_cast<std::size_t>(K - q + k)] / double(q);
  }
  const bool decreasing = tail < head;
  const double frac = double(late_ok) / double(std::max(late, 1L));
  const bool majority = frac > 0.5;
  return {decreasing && majority,
          format("mean lhs_r first quarter %.3f -> last quarter %.3f %s (rhs_r %.3f -> %.3f); "
                 "residual_ok on %.1f%% of iterations after the first quarter %s",
                 head, tail, decreasing ? "ok" : "FAIL", rhs.front(), rhs.back(), 100.0 * frac,
                 majority ? "ok" : "FAIL")};
}

// ---------------------------------------------------------------------------

void print(int id, const std::string& title, const Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " | "
            << o.detail << std::endl;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& title, const Outcome& o) {
    print(id, title, o);
    failures += !o.pass;
  };

  report(1, "equality QPs match the analytic KKT solution", kkt_oracle());
  report(2, "LSTM gradient matches finite differences", gradient_checks());
  report(3, "KKT Jacobian matches finite differences", jacobian_checks());

  const ConvergenceRun conv = convergence_runs();
  report(4, "cold stage-2 convergence on QPs and QCQPs", convergence(conv));
  report(5, "interiority and residual-decrease audit", log_audit(conv));
  report(6, "Ruiz scaling reduces the condition of J^T J", preconditioning(conv));

  const ProbeRun probe = training_probe();
  report(7, "training probe", training_effect(probe));
  BenchSummary summary;
  report(8, "warm-start effect on the test split", warm_start_effect(probe, &summary));
  report(9, "inexact-Newton condition monitor shape", assumption_monitor(probe));

  const ConvergenceRun conv2 = convergence_runs();
  const ProbeRun probe2 = training_probe();
  const bool same_conv = logs_csv(conv.results) == logs_csv(conv2.results);
  const bool same_probe = probe.artifacts == probe2.artifacts;
  report(10, "determinism of repeated runs",
         {same_conv && same_probe,
          format("convergence logs %s (%zu bytes), training outputs %s (%zu bytes)",
                 same_conv ? "identical" : "DIFFER", logs_csv(conv.results).size(),
                 same_probe ? "identical" : "DIFFER", probe.artifacts.size())});

  std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
