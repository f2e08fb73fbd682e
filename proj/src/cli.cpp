#include "lipm/cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "lipm/bench.hpp"
#include "lipm/ipm.hpp"
#include "lipm/problem_io.hpp"
#include "lipm/train.hpp"

namespace lipm::cli {

namespace {

namespace fs = std::filesystem;

struct IpmFlags {
  double sigma = 0.1;
  double tau = 0.995;
  double tol = 1e-4;
  Index max_iters = 500;
  Index K = 100;
  Index T = 50;
  Index cond_every = 0;
  bool no_precondition = false;

  void attach(CLI::App* app) {
    app->add_option("--sigma", sigma, "Centering parameter")->capture_default_str();
    app->add_option("--tau", tau, "Fraction-to-boundary factor")->capture_default_str();
    app->add_option("--tol", tol, "Stage-2 tolerance on the infinity norm of F0")->capture_default_str();
    app->add_option("--max-iters", max_iters, "Stage-2 iteration limit")->capture_default_str();
    app->add_option("--K", K, "Stage-1 IPM iterations")->capture_default_str();
    app->add_option("--T", T, "LSTM steps per IPM iteration")->capture_default_str();
    app->add_option("--cond-every", cond_every, "Log condition estimates every N iterations (0 = off)");
    app->add_flag("--no-precondition", no_precondition, "Disable Ruiz scaling for the learned solver");
  }

  IpmConfig config() const {
    IpmConfig c;
    c.sigma = sigma;
    c.tau = tau;
    c.tol = tol;
    c.max_iters = max_iters;
    c.K = K;
    c.T = T;
    c.cond_every = cond_every;
    c.precondition = !no_precondition;
    c.inner_kind = InnerKind::Lstm;
    validate_config(c);
    return c;
  }
};

struct Family {
  FamilyTag tag;
  PerturbMode mode;
};

Family parse_family(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  static const std::map<std::string, Family> table = {
      {"qp_rhs", {FamilyTag::QpRhs, PerturbMode::Rhs}},
      {"qp_all", {FamilyTag::QpAll, PerturbMode::All}},
      {"qcqp_rhs", {FamilyTag::QcqpRhs, PerturbMode::Rhs}},
      {"qcqp_all", {FamilyTag::QcqpAll, PerturbMode::All}},
      {"nonconvex", {FamilyTag::NonconvexSin, PerturbMode::Rhs}},
      {"nonconvex_sin", {FamilyTag::NonconvexSin, PerturbMode::Rhs}},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw CLI::ValidationError("--family", "unknown family '" + name + "'");
  return it->second;
}

std::span<const NlpInstance> select_split(const Dataset& ds, const std::string& split) {
  if (split == "train") return ds.train();
  if (split == "validation" || split == "val") return ds.validation();
  if (split == "test") return ds.test();
  if (split == "all") return {ds.instances.data(), ds.instances.size()};
  throw std::invalid_argument("unknown split '" + split + "'");
}

std::size_t split_offset(const Dataset& ds, const std::string& split) {
  if (split == "validation" || split == "val") return ds.train_end;
  if (split == "test") return ds.val_end;
  return 0;
}

void print_instance_summary(const NlpInstance& inst, std::ostream& out) {
  out << "family=" << to_string(inst.family_tag()) << " n=" << inst.n()
      << " m_ineq=" << inst.m_ineq() << " m_eq=" << inst.m_eq()
      << " lower_bounds=" << inst.n_lower() << " upper_bounds=" << inst.n_upper()
      << " quadratic_ineq=" << (inst.has_quadratic_ineq() ? "yes" : "no")
      << " sin_term=" << (inst.sin_term() ? "yes" : "no")
      << " kkt_size=" << KktLayout(inst).size() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage interior-point solver with a learned inner Newton solver", "lipm"};
  app.set_config("--config", "", "TOML/INI configuration file (flags take precedence)");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  auto add_seed = [&seed](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed")->envname("IPM_LSTM_SEED");
  };
  auto add_jobs = [&jobs](CLI::App* sub) {
    sub->add_option("--jobs", jobs, "Worker threads (0 = available parallelism)");
  };

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  std::string family = "qp_rhs";
  Index gen_n = 10, gen_m_ineq = 5, gen_m_eq = 5, gen_count = 120;
  std::string gen_out;
  gen->add_option("--family", family, "qp_rhs, qp_all, qcqp_rhs, qcqp_all or nonconvex")
      ->capture_default_str();
  gen->add_option("--n", gen_n, "Variables")->capture_default_str();
  gen->add_option("--m-ineq", gen_m_ineq, "Inequality constraints")->capture_default_str();
  gen->add_option("--m-eq", gen_m_eq, "Equality constraints")->capture_default_str();
  gen->add_option("--count", gen_count, "Number of instances")->capture_default_str();
  gen->add_option("--out", gen_out, "Output dataset JSON")->required();
  add_seed(gen);

  // train
  auto* tr = app.add_subcommand("train", "Train the LSTM inner solver");
  TrainConfig tc;
  std::string tr_dataset, tr_out, tr_init;
  tr->add_option("--dataset", tr_dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "Run directory")->required();
  tr->add_option("--K", tc.K, "IPM iterations per instance")->capture_default_str();
  tr->add_option("--T", tc.T, "LSTM steps per IPM iteration")->capture_default_str();
  tr->add_option("--hidden", tc.hidden_dim, "LSTM hidden size")->capture_default_str();
  tr->add_option("--lr", tc.lr, "Adam learning rate")->capture_default_str();
  tr->add_option("--batch", tc.batch_size, "Batch size")->capture_default_str();
  tr->add_option("--epochs", tc.max_epochs, "Maximum epochs")->capture_default_str();
  tr->add_option("--patience", tc.patience, "Early-stopping patience")->capture_default_str();
  tr->add_option("--feas-ineq", tc.feas_ineq_tol, "Validation inequality tolerance")->capture_default_str();
  tr->add_option("--feas-eq", tc.feas_eq_tol, "Validation equality tolerance")->capture_default_str();
  tr->add_option("--sigma", tc.sigma, "Centering parameter")->capture_default_str();
  tr->add_option("--tau", tc.tau, "Fraction-to-boundary factor")->capture_default_str();
  tr->add_option("--init", tr_init, "Start from this model instead of a fresh one")
      ->check(CLI::ExistingFile);
  bool tr_quiet = false;
  tr->add_flag("--quiet", tr_quiet, "Suppress per-epoch output");
  add_seed(tr);
  add_jobs(tr);

  // solve
  auto* so = app.add_subcommand("solve", "Solve instances and export warm starts and logs");
  IpmFlags so_ipm;
  std::string so_dataset, so_instance, so_model, so_out, so_mode = "two-stage", so_split = "test";
  std::optional<Index> so_index;
  so->add_option("--dataset", so_dataset, "Dataset JSON")->check(CLI::ExistingFile);
  so->add_option("--instance", so_instance, "Single instance JSON")->check(CLI::ExistingFile);
  so->add_option("--index", so_index, "Instance index within the dataset (default: whole split)");
  so->add_option("--split", so_split, "train, validation, test or all")->capture_default_str();
  so->add_option("--model", so_model, "Model JSON (required for stage1 and two-stage)")
      ->check(CLI::ExistingFile);
  so->add_option("--mode", so_mode, "stage1, cold or two-stage")
      ->check(CLI::IsMember({"stage1", "cold", "two-stage"}))
      ->capture_default_str();
  so->add_option("--out-dir", so_out, "Output directory")->required();
  so_ipm.attach(so);

  // bench
  auto* be = app.add_subcommand("bench", "Compare cold and two-stage solves over a split");
  IpmFlags be_ipm;
  std::string be_dataset, be_model, be_out, be_split = "test";
  be->add_option("--dataset", be_dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
  be->add_option("--model", be_model, "Model JSON")->required()->check(CLI::ExistingFile);
  be->add_option("--out", be_out, "results.csv path")->required();
  be->add_option("--split", be_split, "train, validation, test or all")->capture_default_str();
  be_ipm.attach(be);
  add_jobs(be);

  // inspect
  auto* in = app.add_subcommand("inspect", "Summarize an instance, dataset, model, log or results file");
  std::string in_path, in_kind = "auto";
  in->add_option("path", in_path, "File to inspect")->required()->check(CLI::ExistingFile);
  in->add_option("--kind", in_kind, "instance, dataset, model, log, results or auto")
      ->check(CLI::IsMember({"auto", "instance", "dataset", "model", "log", "results"}));

  std::vector<const char*> argv{"lipm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (*gen) {
      const Family f = parse_family(family);
      FamilyConfig fc{gen_n, gen_m_ineq, gen_m_eq, f.tag, f.mode, gen_count, seed};
      const Dataset ds = generate(fc);
      save_dataset(ds, gen_out);
      out << "wrote " << ds.instances.size() << " instances (train " << ds.train().size()
          << ", validation " << ds.validation().size() << ", test " << ds.test().size()
          << ") to " << gen_out << '\n';
    } else if (*tr) {
      tc.seed = seed;
      tc.jobs = jobs;
      const Dataset ds = load_dataset(tr_dataset);
      std::optional<LstmParams> init;
      if (!tr_init.empty()) init = load_params(tr_init, tc.hidden_dim);
      EpochCallback cb;
      if (!tr_quiet)
        cb = [&out](const EpochRecord& r) {
          out << "epoch " << r.epoch << " train_loss " << r.train_loss << " val_loss " << r.val.loss
              << " val_max_ineq " << r.val.max_ineq << " val_max_eq " << r.val.max_eq << '\n';
        };
      const TrainResult res = train(ds, tc, cb, init);
      write_run_directory(tr_out, tc, res);
      if (!res.history.best_is_feasible && !res.history.epochs.empty())
        err << "warning: no epoch met the feasibility tolerances; kept the lowest-loss model\n";
      out << "wrote run directory " << tr_out << '\n';
    } else if (*so) {
      if (so_dataset.empty() == so_instance.empty())
        throw CLI::ValidationError("solve", "give exactly one of --dataset or --instance");
      std::vector<NlpInstance> instances;
      std::vector<Index> ids;
      if (!so_instance.empty()) {
        instances.push_back(load_instance(so_instance));
        ids.push_back(0);
      } else {
        const Dataset ds = load_dataset(so_dataset);
        if (so_index) {
          if (*so_index < 0 || static_cast<std::size_t>(*so_index) >= ds.instances.size())
            throw std::out_of_range("--index outside the dataset");
          instances.push_back(ds.instances[static_cast<std::size_t>(*so_index)]);
          ids.push_back(*so_index);
        } else {
          const auto part = select_split(ds, so_split);
          const auto offset = split_offset(ds, so_split);
          for (std::size_t i = 0; i < part.size(); ++i) {
            instances.push_back(part[i]);
            ids.push_back(static_cast<Index>(offset + i));
          }
        }
      }
      const IpmConfig cfg = so_ipm.config();
      std::optional<LstmParams> theta;
      if (so_mode != "cold") {
        if (so_model.empty()) throw CLI::ValidationError("solve", "--model is required for " + so_mode);
        theta = load_params(so_model);
      }
      fs::create_directories(so_out);
      for (std::size_t i = 0; i < instances.size(); ++i) {
        const NlpInstance& inst = instances[i];
        const std::string tag = std::to_string(ids[i]);
        IterateState final_state;
        if (so_mode == "cold") {
          const IpmResult r = solve_stage2_cold(inst, cfg);
          save_log_csv(r.log, fs::path(so_out) / ("stage2_log_" + tag + ".csv"));
          final_state = r.state;
          out << "instance " << tag << ": cold iterations " << r.iterations
              << (r.converged ? " (converged)" : " (not converged)") << '\n';
        } else {
          const IpmResult s1 = solve_stage1(inst, &*theta, cfg);
          save_log_csv(s1.log, fs::path(so_out) / ("stage1_log_" + tag + ".csv"));
          save_warm_start(s1.state, fs::path(so_out) / ("warm_start_" + tag + ".json"));
          final_state = s1.state;
          const Violations v = violations(inst, s1.state.x);
          out << "instance " << tag << ": stage1 obj " << inst.objective(s1.state.x) << " max_ineq "
              << v.max_ineq << " max_eq " << v.max_eq;
          if (so_mode == "two-stage") {
            const IpmResult s2 = solve_stage2(inst, s1.state, cfg);
            save_log_csv(s2.log, fs::path(so_out) / ("stage2_log_" + tag + ".csv"));
            final_state = s2.state;
            out << "; stage2 iterations " << s2.iterations
                << (s2.converged ? " (converged)" : " (not converged)");
          }
          out << '\n';
        }
        save_warm_start(final_state, fs::path(so_out) / ("final_state_" + tag + ".json"));
      }
    } else if (*be) {
      const Dataset ds = load_dataset(be_dataset);
      const LstmParams theta = load_params(be_model);
      const auto part = select_split(ds, be_split);
      check_homogeneous(part);
      const IpmConfig cfg = be_ipm.config();
      const auto results = run_benchmark(part, theta, cfg, jobs,
                                         static_cast<Index>(split_offset(ds, be_split)));
      report(results, be_out);
      const BenchSummary s = summarize(results);
      out << "instances " << s.count << " cold_iters " << s.cold_iters << " warm_iters "
          << s.warm_iters << " ite_gain " << s.ite_gain << " time_gain " << s.time_gain
          << " s1_max_eq " << s.s1.max_eq << '\n';
    } else if (*in) {
      std::string kind = in_kind;
      const fs::path p(in_path);
      if (kind == "auto") {
        if (p.extension() == ".csv") {
          std::ifstream f(p);
          std::string header;
          std::getline(f, header);
          kind = header.rfind("instance_id", 0) == 0 ? "results" : "log";
        } else {
          const Json j = read_json_file(p);
          kind = j.contains("instances") ? "dataset" : j.contains("hidden_dim") ? "model" : "instance";
        }
      }
      if (kind == "dataset") {
        const Dataset ds = load_dataset(p);
        out << "dataset: " << ds.instances.size() << " instances (train " << ds.train().size()
            << ", validation " << ds.validation().size() << ", test " << ds.test().size() << ")\n";
        if (!ds.instances.empty()) print_instance_summary(ds.instances.front(), out);
      } else if (kind == "instance") {
        print_instance_summary(load_instance(p), out);
      } else if (kind == "model") {
        const LstmParams theta = load_params(p);
        out << "model: hidden_dim=" << theta.hidden_dim() << " parameters=" << theta.parameter_count()
            << " |w_out|=" << theta.w_out.norm() << " b_out=" << theta.b_out << '\n';
      } else if (kind == "results") {
        const auto results = load_results_csv(p);
        out << to_json(summarize(results)).dump(2) << '\n';
      } else {
        std::ifstream f(p);
        std::string line;
        std::size_t rows = 0;
        std::string last;
        std::string header;
        std::getline(f, header);
        while (std::getline(f, line))
          if (!line.empty()) {
            ++rows;
            last = line;
          }
        out << "log: " << rows << " iterations\n";
        if (rows > 0) out << "columns: " << header << "\nlast: " << last << '\n';
      }
    }
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kSuccess;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace lipm::cli
