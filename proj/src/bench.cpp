#include "lipm/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lipm/parallel.hpp"
#include "lipm/problem_io.hpp"

namespace lipm {

namespace {

constexpr const char* kHeader =
    "instance_id,s1_obj,s1_max_ineq,s1_mean_ineq,s1_max_eq,s1_mean_eq,s1_time,warm_iters,"
    "warm_time,cold_iters,cold_time,total_time,ite_gain,time_gain,warm_converged,cold_converged";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

SolutionMetrics solution_metrics(const NlpInstance& instance, const IterateState& state,
                                 double elapsed) {
  if (!state.x.allFinite()) throw NonFiniteError("solution_metrics: non-finite state");
  const Violations v = violations(instance, state.x);
  return {evaluate(instance, state.x).f, v.max_ineq, v.mean_ineq, v.max_eq, v.mean_eq, elapsed};
}

std::pair<double, double> gains(double cold_iters, double cold_time, double warm_iters,
                                double warm_total_time) {
  if (!(cold_iters > 0.0) || !(cold_time > 0.0))
    throw std::invalid_argument("gains: cold iterations and time must be positive");
  return {1.0 - warm_iters / cold_iters, 1.0 - warm_total_time / cold_time};
}

RunResult run_instance(const NlpInstance& instance, Index instance_id, const LstmParams& theta,
                       const IpmConfig& config) {
  RunResult r;
  r.instance_id = instance_id;
  IpmConfig s1_cfg = config;
  s1_cfg.inner_kind = InnerKind::Lstm;
  const IpmResult s1 = solve_stage1(instance, &theta, s1_cfg);
  r.s1 = solution_metrics(instance, s1.state, s1.elapsed);

  const IpmResult warm = solve_stage2(instance, s1.state, config);
  r.warm_iters = warm.iterations;
  r.warm_time = warm.elapsed;
  r.warm_converged = warm.converged;

  const IpmResult cold = solve_stage2_cold(instance, config);
  r.cold_iters = cold.iterations;
  r.cold_time = cold.elapsed;
  r.cold_converged = cold.converged;

  r.total_time = r.s1.time + r.warm_time;
  if (r.cold_iters > 0 && r.cold_time > 0.0) {
    std::tie(r.ite_gain, r.time_gain) = gains(static_cast<double>(r.cold_iters), r.cold_time,
                                              static_cast<double>(r.warm_iters), r.total_time);
  } else {
    r.ite_gain = r.time_gain = kNaN;
  }
  return r;
}

std::vector<RunResult> run_benchmark(std::span<const NlpInstance> instances,
                                     const LstmParams& theta, const IpmConfig& config,
                                     std::size_t jobs, Index first_id) {
  std::vector<RunResult> out(instances.size());
  parallel_for(instances.size(), jobs, [&](std::size_t i) {
    out[i] = run_instance(instances[i], first_id + static_cast<Index>(i), theta, config);
  });
  return out;
}

BenchSummary summarize(std::span<const RunResult> results) {
  BenchSummary s;
  s.count = results.size();
  if (results.empty()) {
    s.ite_gain = s.time_gain = s.mean_ite_gain = s.mean_time_gain = kNaN;
    return s;
  }
  for (const auto& r : results) {
    s.s1.obj += r.s1.obj;
    s.s1.max_ineq += r.s1.max_ineq;
    s.s1.mean_ineq += r.s1.mean_ineq;
    s.s1.max_eq += r.s1.max_eq;
    s.s1.mean_eq += r.s1.mean_eq;
    s.s1.time += r.s1.time;
    s.warm_iters += static_cast<double>(r.warm_iters);
    s.warm_time += r.warm_time;
    s.cold_iters += static_cast<double>(r.cold_iters);
    s.cold_time += r.cold_time;
    s.total_time += r.total_time;
    s.mean_ite_gain += r.ite_gain;
    s.mean_time_gain += r.time_gain;
    s.warm_converged_rate += r.warm_converged ? 1.0 : 0.0;
    s.cold_converged_rate += r.cold_converged ? 1.0 : 0.0;
  }
  const double c = static_cast<double>(s.count);
  for (double* v : {&s.s1.obj, &s.s1.max_ineq, &s.s1.mean_ineq, &s.s1.max_eq, &s.s1.mean_eq,
                    &s.s1.time, &s.warm_iters, &s.warm_time, &s.cold_iters, &s.cold_time,
                    &s.total_time, &s.mean_ite_gain, &s.mean_time_gain, &s.warm_converged_rate,
                    &s.cold_converged_rate})
    *v /= c;
  if (s.cold_iters > 0.0 && s.cold_time > 0.0)
    std::tie(s.ite_gain, s.time_gain) = gains(s.cold_iters, s.cold_time, s.warm_iters, s.total_time);
  else
    s.ite_gain = s.time_gain = kNaN;
  return s;
}

nlohmann::json to_json(const BenchSummary& s) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"count", s.count},
          {"s1_obj", num(s.s1.obj)},
          {"s1_max_ineq", num(s.s1.max_ineq)},
          {"s1_mean_ineq", num(s.s1.mean_ineq)},
          {"s1_max_eq", num(s.s1.max_eq)},
          {"s1_mean_eq", num(s.s1.mean_eq)},
          {"s1_time", num(s.s1.time)},
          {"warm_iters", num(s.warm_iters)},
          {"warm_time", num(s.warm_time)},
          {"cold_iters", num(s.cold_iters)},
          {"cold_time", num(s.cold_time)},
          {"total_time", num(s.total_time)},
          {"ite_gain", num(s.ite_gain)},
          {"time_gain", num(s.time_gain)},
          {"mean_ite_gain", num(s.mean_ite_gain)},
          {"mean_time_gain", num(s.mean_time_gain)},
          {"warm_converged_rate", num(s.warm_converged_rate)},
          {"cold_converged_rate", num(s.cold_converged_rate)}};
}

void write_results_csv(std::span<const RunResult> results, std::ostream& out) {
  out << kHeader << '\n';
  for (const auto& r : results)
    out << r.instance_id << ',' << fmt(r.s1.obj) << ',' << fmt(r.s1.max_ineq) << ','
        << fmt(r.s1.mean_ineq) << ',' << fmt(r.s1.max_eq) << ',' << fmt(r.s1.mean_eq) << ','
        << fmt(r.s1.time) << ',' << r.warm_iters << ',' << fmt(r.warm_time) << ','
        << r.cold_iters << ',' << fmt(r.cold_time) << ',' << fmt(r.total_time) << ','
        << fmt(r.ite_gain) << ',' << fmt(r.time_gain) << ',' << int(r.warm_converged) << ','
        << int(r.cold_converged) << '\n';
}

std::vector<RunResult> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw std::runtime_error("results CSV: unexpected header");
  std::vector<RunResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 16) throw std::runtime_error("results CSV: expected 16 columns");
    RunResult r;
    r.instance_id = std::stoll(c[0]);
    r.s1 = {std::stod(c[1]), std::stod(c[2]), std::stod(c[3]),
            std::stod(c[4]), std::stod(c[5]), std::stod(c[6])};
    r.warm_iters = std::stoll(c[7]);
    r.warm_time = std::stod(c[8]);
    r.cold_iters = std::stoll(c[9]);
    r.cold_time = std::stod(c[10]);
    r.total_time = std::stod(c[11]);
    r.ite_gain = std::stod(c[12]);
    r.time_gain = std::stod(c[13]);
    r.warm_converged = c[14] == "1";
    r.cold_converged = c[15] == "1";
    out.push_back(r);
  }
  return out;
}

void report(std::span<const RunResult> results, const std::filesystem::path& csv_path) {
  {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path.string());
    write_results_csv(results, out);
  }
  std::filesystem::path json_path = csv_path;
  json_path.replace_extension(".json");
  write_json_file(to_json(summarize(results)), json_path);
}

std::vector<RunResult> load_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_results_csv(in);
}

}  // namespace lipm
