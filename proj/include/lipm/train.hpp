#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "lipm/ipm.hpp"
#include "lipm/lstm.hpp"
#include "lipm/problem.hpp"

namespace lipm {

struct TrainConfig {
  Index K = 100;
  Index T = 50;
  Index hidden_dim = 50;
  double lr = 1e-4;
  Index batch_size = 128;
  Index max_epochs = 500;
  Index patience = 50;
  double feas_ineq_tol = 0.005;
  double feas_eq_tol = 0.01;
  std::uint64_t seed = 0;

  double sigma = 0.1;
  double tau = 0.995;
  bool precondition = true;
  std::size_t jobs = 1;
};

void validate_config(const TrainConfig& config);
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Averages over instances of the stage-1 loss and of the final-point metrics.
struct ValidationMetrics {
  double loss = 0.0;
  double obj = 0.0;
  double max_ineq = 0.0;
  double mean_ineq = 0.0;
  double max_eq = 0.0;
  double mean_eq = 0.0;
};

struct EpochRecord {
  Index epoch = 0;  // 1-based
  double train_loss = 0.0;
  ValidationMetrics val;
};

struct FeasibilityTols {
  double ineq = 0.005;
  double eq = 0.01;
};

bool is_feasible(const ValidationMetrics& m, const FeasibilityTols& tols);

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  /// Index into `epochs` of the returned checkpoint; empty when no epoch ran.
  std::optional<std::size_t> best;
  /// False when no epoch met the feasibility tolerances and the best-loss
  /// checkpoint was returned instead.
  bool best_is_feasible = false;
};

struct TrainResult {
  LstmParams theta;       // best checkpoint
  LstmParams last_theta;  // parameters after the final epoch
  TrainHistory history;
};

/// Per-instance result of a stage-1 rollout that also records the inner loss.
struct Rollout {
  IterateState state;
  double loss = 0.0;  // mean over IPM iterations of the inner loss
};

Rollout stage1_rollout(const NlpInstance& instance, const LstmParams& theta, Index K, Index T,
                       double sigma, double tau, bool precondition);

ValidationMetrics validate(const LstmParams& theta, std::span<const NlpInstance> val_set,
                           const TrainConfig& config);

/// True when the best qualifying validation loss is at least `patience`
/// epochs old (or no epoch qualified within the last `patience`).
bool early_stop(const std::vector<EpochRecord>& history, Index patience,
                const FeasibilityTols& tols);

/// Index of the checkpoint to keep and whether it met the tolerances.
std::pair<std::optional<std::size_t>, bool> select_checkpoint(
    const std::vector<EpochRecord>& history, const FeasibilityTols& tols);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Training with one Adam update per (batch, IPM iteration). `initial` replaces
/// the seeded initialization when given.
TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch = {},
                  std::optional<LstmParams> initial = std::nullopt);

/// Writes config.json, history.csv, best_model.json and last_model.json.
void write_run_directory(const std::filesystem::path& dir, const TrainConfig& config,
                         const TrainResult& result);
void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out);

/// Throws unless every instance shares n, m_ineq, m_eq and the bound pattern.
void check_homogeneous(std::span<const NlpInstance> instances);

}  // namespace lipm
