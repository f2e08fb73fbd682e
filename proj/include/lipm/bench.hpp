#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lipm/ipm.hpp"
#include "lipm/lstm.hpp"

namespace lipm {

struct SolutionMetrics {
  double obj = 0.0;
  double max_ineq = 0.0;
  double mean_ineq = 0.0;
  double max_eq = 0.0;
  double mean_eq = 0.0;
  double time = 0.0;
};

SolutionMetrics solution_metrics(const NlpInstance& instance, const IterateState& state,
                                 double elapsed);

struct RunResult {
  Index instance_id = 0;
  SolutionMetrics s1;
  Index warm_iters = 0;
  double warm_time = 0.0;
  bool warm_converged = false;
  Index cold_iters = 0;
  double cold_time = 0.0;
  bool cold_converged = false;
  double total_time = 0.0;  // s1.time + warm_time
  double ite_gain = 0.0;
  double time_gain = 0.0;
};

/// (1 − warm_iters/cold_iters, 1 − warm_total_time/cold_time). Requires
/// positive cold values.
std::pair<double, double> gains(double cold_iters, double cold_time, double warm_iters,
                                double warm_total_time);

/// Stage 1 with the learned solver, stage 2 warm-started from it, and a cold
/// stage-2 baseline, for one instance.
RunResult run_instance(const NlpInstance& instance, Index instance_id, const LstmParams& theta,
                       const IpmConfig& config);

std::vector<RunResult> run_benchmark(std::span<const NlpInstance> instances,
                                     const LstmParams& theta, const IpmConfig& config,
                                     std::size_t jobs = 1, Index first_id = 0);

/// Arithmetic means of every column plus gains computed from the mean
/// iteration counts and times.
struct BenchSummary {
  std::size_t count = 0;
  SolutionMetrics s1;
  double warm_iters = 0.0;
  double warm_time = 0.0;
  double cold_iters = 0.0;
  double cold_time = 0.0;
  double total_time = 0.0;
  double mean_ite_gain = 0.0;
  double mean_time_gain = 0.0;
  double ite_gain = 0.0;   // from the means
  double time_gain = 0.0;  // from the means
  double warm_converged_rate = 0.0;
  double cold_converged_rate = 0.0;
};

BenchSummary summarize(std::span<const RunResult> results);
nlohmann::json to_json(const BenchSummary& summary);

void write_results_csv(std::span<const RunResult> results, std::ostream& out);
std::vector<RunResult> read_results_csv(std::istream& in);

/// Writes `csv_path` and a JSON summary next to it (same stem, .json).
void report(std::span<const RunResult> results, const std::filesystem::path& csv_path);
std::vector<RunResult> load_results_csv(const std::filesystem::path& path);

}  // namespace lipm
