#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lipm/inner.hpp"
#include "lipm/kkt.hpp"
#include "lipm/lstm.hpp"

namespace lipm {

enum class Stage { One, Two };

struct IpmConfig {
  double sigma = 0.1;
  double tau = 0.995;
  Index max_iters = 500;
  double tol = 1e-4;
  InnerKind inner_kind = InnerKind::Direct;
  Index T = 50;
  Index K = 100;
  Stage stage = Stage::Two;

  double eta_tol = 0.9;
  double beta = 1e-4;
  int max_backtracks = 30;
  /// Record condition estimates every this many iterations; 0 disables.
  Index cond_every = 0;
  /// Ruiz-scale JᵀJ before the learned or first-order inner solve.
  bool precondition = true;
  Index gd_steps = 50;
  double gd_tol = 0.0;
};

void validate_config(const IpmConfig& config);

/// Fraction-to-boundary step lengths per variable group.
struct StepLengths {
  double alpha_eta = 1.0;
  double alpha_s = 1.0;
  double alpha_zL = 1.0;
  double alpha_zU = 1.0;
  double alpha_x_lambda = 1.0;

  double min() const;
};

struct IpmLogRow {
  Index iter = 0;
  double mu = 0.0;
  double f0_inf = 0.0;  // at the start of the iteration
  double f0_2 = 0.0;
  double inner_residual = 0.0;
  double inner_rel_residual = 0.0;  // ‖Jy + F‖/‖F‖
  StepLengths alphas;
  double alpha = 1.0;  // common step applied in stage 2
  int backtracks = 0;
  bool backtrack_exhausted = false;
  double eta_hat = 0.0;
  double merit_before = 0.0;  // ‖F₀‖₂ before the step
  double merit_after = 0.0;   // ‖F₀‖₂ after the step
  double cond_J = kNaN;
  double cond_H = kNaN;         // κ(JᵀJ)
  double cond_H_scaled = kNaN;  // κ(DJᵀJD)
  AssumptionCheck assumption;
  double objective = 0.0;  // at the accepted point
  Violations viol;
  bool interior = true;
  double time = 0.0;  // seconds since the solve started
};

struct IpmResult {
  IterateState state;
  std::vector<IpmLogRow> log;
  Index iterations = 0;
  bool converged = false;
  double elapsed = 0.0;
};

/// Bound-based primal start, unit duals and slacks, λ = 0, μ from σ.
IterateState initial_point(const NlpInstance& instance, double sigma);

StepLengths step_lengths(const NlpInstance& instance, const IterateState& state,
                         const Direction& dir, double tau);

/// Newton system at the state's μ together with the Ruiz scaling of JᵀJ.
struct PreparedSystem {
  KktSystem sys;
  ScalingDiag D;
};

PreparedSystem prepare_system(const NlpInstance& instance, const IterateState& state,
                              bool precondition);

/// Per-group update (x and λ share a step), then μ ← complementarity_mu.
IterateState apply_group_step(const NlpInstance& instance, const IterateState& state,
                              const Direction& dir, const StepLengths& alphas, double sigma);

/// Common-step update of every group, then μ ← complementarity_mu.
IterateState apply_common_step(const NlpInstance& instance, const IterateState& state,
                               const Direction& dir, double alpha, double sigma);

/// One iteration of the configured stage. Stage one applies group step
/// lengths without line search; stage two takes a common step and backtracks
/// on ‖F₀‖.
std::pair<IterateState, IpmLogRow> ipm_step(const NlpInstance& instance,
                                            const IterateState& state, const IpmConfig& config,
                                            const LstmParams* theta = nullptr);

/// Exactly config.K iterations with config.inner_kind.
IpmResult solve_stage1(const NlpInstance& instance, const LstmParams* theta,
                       const IpmConfig& config);

/// Moves every bounded quantity at least `margin` inside its bound.
IterateState clamp_interior(const NlpInstance& instance, const IterateState& state,
                            double margin = 1e-10);

/// Exact-Newton IPM from `start` (clamped) until ‖F₀‖∞ ≤ tol or max_iters.
IpmResult solve_stage2(const NlpInstance& instance, const IterateState& start,
                       const IpmConfig& config);
IpmResult solve_stage2_cold(const NlpInstance& instance, const IpmConfig& config);

nlohmann::json state_to_json(const IterateState& state);
IterateState state_from_json(const nlohmann::json& j);
void save_warm_start(const IterateState& state, const std::filesystem::path& path);
IterateState load_warm_start(const std::filesystem::path& path);

/// One CSV row per iteration. Timing columns are omitted when
/// `include_timing` is false so runs can be compared byte for byte.
void write_log_csv(const std::vector<IpmLogRow>& log, std::ostream& out,
                   bool include_timing = true);
void save_log_csv(const std::vector<IpmLogRow>& log, const std::filesystem::path& path,
                  bool include_timing = true);

}  // namespace lipm
