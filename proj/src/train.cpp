#include "lipm/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "lipm/parallel.hpp"
#include "lipm/problem_io.hpp"

namespace lipm {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// One detached stage-1 update from the last inner estimate.
IterateState advance(const NlpInstance& instance, const IterateState& state, const Vector& y,
                     double sigma, double tau) {
  const Direction dir = split_direction(KktLayout(instance), y);
  return apply_group_step(instance, state, dir, step_lengths(instance, state, dir, tau), sigma);
}

}  // namespace

void validate_config(const TrainConfig& c) {
  if (c.K < 1 || c.T < 1 || c.hidden_dim < 1 || c.batch_size < 1)
    throw std::invalid_argument("K, T, hidden_dim and batch_size must be >= 1");
  if (!(c.lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (c.patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (c.max_epochs < 0) throw std::invalid_argument("max_epochs must be >= 0");
  if (!(c.feas_ineq_tol > 0.0 && c.feas_eq_tol > 0.0))
    throw std::invalid_argument("feasibility tolerances must be positive");
  if (!(c.sigma > 0.0 && c.sigma < 1.0) || !(c.tau > 0.0 && c.tau < 1.0))
    throw std::invalid_argument("sigma and tau must lie in (0, 1)");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"K", c.K},
          {"T", c.T},
          {"hidden_dim", c.hidden_dim},
          {"lr", c.lr},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"feas_ineq_tol", c.feas_ineq_tol},
          {"feas_eq_tol", c.feas_eq_tol},
          {"seed", c.seed},
          {"sigma", c.sigma},
          {"tau", c.tau},
          {"precondition", c.precondition}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  auto read = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("K", c.K);
  read("T", c.T);
  read("hidden_dim", c.hidden_dim);
  read("lr", c.lr);
  read("batch_size", c.batch_size);
  read("max_epochs", c.max_epochs);
  read("patience", c.patience);
  read("feas_ineq_tol", c.feas_ineq_tol);
  read("feas_eq_tol", c.feas_eq_tol);
  read("seed", c.seed);
  read("sigma", c.sigma);
  read("tau", c.tau);
  read("precondition", c.precondition);
  return c;
}

bool is_feasible(const ValidationMetrics& m, const FeasibilityTols& tols) {
  return m.max_ineq <= tols.ineq && m.max_eq <= tols.eq;
}

Rollout stage1_rollout(const NlpInstance& instance, const LstmParams& theta, Index K, Index T,
                       double sigma, double tau, bool precondition) {
  Rollout r;
  r.state = initial_point(instance, sigma);
  double total = 0.0;
  for (Index k = 0; k < K; ++k) {
    const PreparedSystem prep = prepare_system(instance, r.state, precondition);
    const auto run = forward_unroll(theta, prep.sys.J, prep.sys.F, prep.D, T);
    total += inner_loss(prep.sys.J, prep.sys.F, run.y);
    r.state = advance(instance, r.state, run.y.back(), sigma, tau);
  }
  r.loss = K > 0 ? total / static_cast<double>(K) : 0.0;
  return r;
}

ValidationMetrics validate(const LstmParams& theta, std::span<const NlpInstance> val_set,
                           const TrainConfig& config) {
  ValidationMetrics m;
  if (val_set.empty()) return m;
  std::vector<ValidationMetrics> per(val_set.size());
  parallel_for(val_set.size(), config.jobs, [&](std::size_t i) {
    const NlpInstance& inst = val_set[i];
    const Rollout r =
        stage1_rollout(inst, theta, config.K, config.T, config.sigma, config.tau, config.precondition);
    const Violations v = violations(inst, r.state.x);
    per[i] = {r.loss, inst.objective(r.state.x), v.max_ineq, v.mean_ineq, v.max_eq, v.mean_eq};
  });
  for (const auto& p : per) {
    m.loss += p.loss;
    m.obj += p.obj;
    m.max_ineq += p.max_ineq;
    m.mean_ineq += p.mean_ineq;
    m.max_eq += p.max_eq;
    m.mean_eq += p.mean_eq;
  }
  const double count = static_cast<double>(val_set.size());
  m.loss /= count;
  m.obj /= count;
  m.max_ineq /= count;
  m.mean_ineq /= count;
  m.max_eq /= count;
  m.mean_eq /= count;
  return m;
}

std::pair<std::optional<std::size_t>, bool> select_checkpoint(
    const std::vector<EpochRecord>& history, const FeasibilityTols& tols) {
  std::optional<std::size_t> best_feasible;
  std::optional<std::size_t> best_any;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double loss = history[i].val.loss;
    if (!best_any || loss < history[*best_any].val.loss) best_any = i;
    if (is_feasible(history[i].val, tols) &&
        (!best_feasible || loss < history[*best_feasible].val.loss))
      best_feasible = i;
  }
  if (best_feasible) return {best_feasible, true};
  return {best_any, false};
}

bool early_stop(const std::vector<EpochRecord>& history, Index patience,
                const FeasibilityTols& tols) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < history.size(); ++i)
    if (is_feasible(history[i].val, tols) && (!best || history[i].val.loss < history[*best].val.loss))
      best = i;
  const auto size = static_cast<Index>(history.size());
  const Index since = best ? size - 1 - static_cast<Index>(*best) : size;
  return since >= patience;
}

void check_homogeneous(std::span<const NlpInstance> instances) {
  if (instances.empty()) return;
  const NlpInstance& a = instances.front();
  for (const auto& b : instances)
    if (b.n() != a.n() || b.m_ineq() != a.m_ineq() || b.m_eq() != a.m_eq() ||
        b.lower_indices() != a.lower_indices() || b.upper_indices() != a.upper_indices())
      throw std::invalid_argument("dataset instances differ in dimensions or bound pattern");
}

TrainResult train(const Dataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch,
                  std::optional<LstmParams> initial) {
  validate_config(config);
  const auto train_set = dataset.train();
  const auto val_set = dataset.validation();
  if (train_set.empty()) throw std::invalid_argument("training split is empty");
  check_homogeneous(dataset.instances);

  LstmParams theta =
      initial ? *initial : LstmParams::initialized(config.hidden_dim, mix_seed(config.seed, 1));
  if (theta.hidden_dim() != config.hidden_dim)
    throw std::invalid_argument("initial parameters have the wrong hidden_dim");
  AdamState adam = AdamState::for_params(theta);
  const AdamOptions adam_opts{config.lr};
  const FeasibilityTols tols{config.feas_ineq_tol, config.feas_eq_tol};

  TrainResult result{theta, theta, {}};
  std::vector<LstmParams> snapshots;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (Index epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(config.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    Index loss_terms = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
      const std::size_t bsize = std::min(batch, order.size() - b0);
      std::vector<IterateState> states(bsize);
      for (std::size_t i = 0; i < bsize; ++i)
        states[i] = initial_point(train_set[order[b0 + i]], config.sigma);

      std::vector<LstmParams> grads(bsize);
      std::vector<double> losses(bsize);
      for (Index k = 0; k < config.K; ++k) {
        try {
          parallel_for(bsize, config.jobs, [&](std::size_t i) {
            const NlpInstance& inst = train_set[order[b0 + i]];
            const PreparedSystem prep = prepare_system(inst, states[i], config.precondition);
            auto run = forward_unroll(theta, prep.sys.J, prep.sys.F, prep.D, config.T);
            losses[i] = inner_loss(prep.sys.J, prep.sys.F, run.y);
            grads[i] = backward(run.trace, theta);
            states[i] = advance(inst, states[i], run.y.back(), config.sigma, config.tau);
          });
        } catch (const std::exception& e) {
          throw std::runtime_error("training aborted at epoch " + std::to_string(epoch) +
                                   ", IPM iteration " + std::to_string(k + 1) + ": " + e.what());
        }
        LstmParams g(config.hidden_dim);
        double batch_loss = 0.0;
        for (std::size_t i = 0; i < bsize; ++i) {
          g.W += grads[i].W;
          g.b += grads[i].b;
          g.w_out += grads[i].w_out;
          g.b_out += grads[i].b_out;
          batch_loss += losses[i];
        }
        const double inv = 1.0 / static_cast<double>(bsize);
        g.W *= inv;
        g.b *= inv;
        g.w_out *= inv;
        g.b_out *= inv;
        if (!std::isfinite(batch_loss) || !g.all_finite())
          throw std::runtime_error("training aborted: non-finite loss or gradient at epoch " +
                                   std::to_string(epoch));
        adam_step(theta, g, adam, adam_opts);
        loss_sum += batch_loss;
        loss_terms += static_cast<Index>(bsize);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(loss_terms);
    rec.val = validate(theta, val_set, config);
    result.history.epochs.push_back(rec);
    snapshots.push_back(theta);
    if (on_epoch) on_epoch(rec);

    // Keep only snapshots that can still be selected.
    const auto [best, feasible] = select_checkpoint(result.history.epochs, tols);
    for (std::size_t i = 0; i + 1 < snapshots.size(); ++i)
      if (best && i != *best) snapshots[i] = LstmParams();
    if (early_stop(result.history.epochs, config.patience, tols)) break;
  }

  result.last_theta = theta;
  const auto [best, feasible] = select_checkpoint(result.history.epochs, tols);
  result.history.best = best;
  result.history.best_is_feasible = feasible;
  result.theta = best ? snapshots[*best] : theta;
  return result;
}

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out) {
  out << "epoch,train_loss,val_loss,val_max_ineq,val_mean_ineq,val_max_eq,val_mean_eq\n";
  for (const auto& r : history)
    out << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.val.loss) << ','
        << fmt(r.val.max_ineq) << ',' << fmt(r.val.mean_ineq) << ',' << fmt(r.val.max_eq) << ','
        << fmt(r.val.mean_eq) << '\n';
}

void write_run_directory(const std::filesystem::path& dir, const TrainConfig& config,
                         const TrainResult& result) {
  std::filesystem::create_directories(dir);
  nlohmann::json cfg = to_json(config);
  cfg["best_epoch"] = result.history.best ? nlohmann::json(result.history.epochs[*result.history.best].epoch)
                                          : nlohmann::json(nullptr);
  cfg["best_is_feasible"] = result.history.best_is_feasible;
  write_json_file(cfg, dir / "config.json");
  std::ofstream hist(dir / "history.csv");
  if (!hist) throw std::runtime_error("cannot write " + (dir / "history.csv").string());
  write_history_csv(result.history.epochs, hist);
  save_params(result.theta, dir / "best_model.json");
  save_params(result.last_theta, dir / "last_model.json");
}

}  // namespace lipm
