#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ndf/data.hpp"
#include "ndf/errors.hpp"
#include "ndf/features.hpp"
#include "ndf/mlp.hpp"
#include "ndf/optim.hpp"
#include "ndf/policy.hpp"
#include "ndf/rng.hpp"
#include "ndf/strategies.hpp"

namespace ndf {

/// Which counter i_tau and the horizon T' are measured in.
enum class TauCounter { arrivals, updates };

struct RunConfig {
  std::string dataset = "blobs:classes=10,per_class=500,dim=20,spread=0.8,seed=7,test=1000";
  std::size_t batch_size = 20;
  std::string strategy = "unfiltered";
  std::string label;  ///< strategy column in curve.csv; defaults to strategy

  // Policy training
  double tau = 0.90;
  std::size_t horizon = 2000;  ///< T'
  TauCounter tau_counter = TauCounter::arrivals;
  std::size_t episodes = 50;   ///< L
  double gamma = 0.99;         ///< carried for completeness; terminal-only reward ignores it
  std::size_t ndf_subset = 0;  ///< |D'|; 0 means all of D
  std::size_t dev_size = 0;    ///< |D'_dev|; 0 means 10% of |D'|
  std::size_t policy_hidden = 12;
  double policy_learning_rate = 1e-3;
  double policy_init_bias = 2.0;

  // Strategies
  std::size_t spl_epochs = 80;  ///< S
  std::string droplog_path;
  std::string policy_path;
  bool greedy_policy = false;

  // Base model
  std::vector<std::size_t> hidden = {32};
  double learning_rate = 0.01;
  double momentum = 0.9;
  double init_scale = 0.05;

  // Run control
  std::size_t eval_every = 25;    ///< in base-model updates
  std::size_t max_updates = 2000; ///< length of an apply run
  std::size_t max_epochs = 1000;  ///< safety cap on passes over the data
  std::size_t runs = 1;           ///< R

  std::uint64_t seed_data = 1;
  std::uint64_t seed_policy = 2;
  std::uint64_t seed_strategy = 3;
  std::uint64_t seed_model = 4;

  void validate() const {
    if (batch_size == 0) throw input_error("config: batch_size must be >= 1");
    if (!(tau > 0.0 && tau < 1.0) && tau != 0.0) throw input_error("config: tau must lie in (0,1)");
    if (horizon == 0) throw input_error("config: horizon must be >= 1");
    if (episodes == 0) throw input_error("config: episodes must be >= 1");
    if (runs == 0) throw input_error("config: runs must be >= 1");
    if (eval_every == 0) throw input_error("config: eval_every must be >= 1");
    if (spl_epochs == 0) throw input_error("config: spl_epochs must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw input_error("config: gamma must lie in [0,1]");
    if (learning_rate <= 0.0 || policy_learning_rate <= 0.0) throw input_error("config: learning rates must be positive");
    for (auto h : hidden) {
      if (h == 0) throw input_error("config: zero-width hidden layer");
    }
  }
};

// ---------------------------------------------------------------------------
// Corpora

struct Corpus {
  Dataset train;
  Dataset test;
};

namespace detail {

inline std::map<std::string, std::string> parse_kv_list(const std::string& s) {
  std::map<std::string, std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw input_error("dataset spec: expected key=value, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

}  // namespace detail

/// `mnist:<dir>` reads {train,t10k}-{images-idx3,labels-idx1}-ubyte from dir.
/// `blobs:classes=C,per_class=N,dim=D,spread=s,seed=k,test=T` generates blobs
/// and holds out T instances as the test set.
inline Corpus load_corpus(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "mnist") {
    const std::filesystem::path dir(arg.empty() ? "." : arg);
    return {load_mnist((dir / "train-images-idx3-ubyte").string(), (dir / "train-labels-idx1-ubyte").string()),
            load_mnist((dir / "t10k-images-idx3-ubyte").string(), (dir / "t10k-labels-idx1-ubyte").string())};
  }
  if (kind == "blobs") {
    auto kv = detail::parse_kv_list(arg);
    auto get = [&](const char* key, const char* fallback) {
      auto it = kv.find(key);
      return it == kv.end() ? std::string(fallback) : it->second;
    };
    try {
      const std::size_t classes = std::stoul(get("classes", "10"));
      const std::size_t per_class = std::stoul(get("per_class", "500"));
      const std::size_t dim = std::stoul(get("dim", "20"));
      const double spread = std::stod(get("spread", "0.8"));
      const std::uint64_t seed = std::stoull(get("seed", "7"));
      const std::size_t test = std::stoul(get("test", "1000"));
      Dataset all = generate_blobs(classes, per_class, dim, spread, seed);
      // A split with D' = D and D'_dev as the held-out test set.
      SplitResult s = split(all, {all.size(), test, derive_seed(seed, 99)});
      return {std::move(s.train), std::move(s.dev)};
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const input_error*>(&e)) throw;
      throw input_error("dataset spec: bad number in '" + spec + "'");
    }
  }
  throw input_error("dataset spec: unknown kind '" + kind + "' (expected mnist:<dir> or blobs:<spec>)");
}

inline Mlp make_base_model(std::size_t input_dim, std::size_t classes, const RunConfig& cfg,
                           std::uint64_t seed) {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(classes);
  Mlp m(sizes, OutputKind::softmax);
  Rng rng(seed);
  m.init_uniform(cfg.init_scale, rng);
  return m;
}

// ---------------------------------------------------------------------------
// Shared inner loop

/// Drives one base model through arriving mini-batches under a strategy:
/// predict, filter, accumulate, and update on every full batch of M.
class BaseTrainer {
 public:
  /// Called after every eval_every-th update with the update count; return
  /// true to stop.
  using EvalHook = std::function<bool(std::size_t updates)>;

  BaseTrainer(Mlp model, const RunConfig& cfg, FiltrationStrategy& strategy, std::uint64_t strategy_seed,
              std::size_t horizon)
      : model_(std::move(model)),
        optimizer_(make_momentum(model_.layers(), cfg.learning_rate, cfg.momentum)),
        strategy_(&strategy),
        rng_(strategy_seed),
        buffer_(cfg.batch_size),
        hardness_(cfg.batch_size),
        batch_size_(cfg.batch_size),
        eval_every_(cfg.eval_every) {
    history_.horizon = horizon;
  }

  void set_eval_hook(EvalHook hook) { hook_ = std::move(hook); }

  void begin_epoch(std::size_t epoch) {
    epoch_ = epoch;
    hardness_.begin_epoch(epoch);
    if (arrived_per_epoch_.size() <= epoch) {
      arrived_per_epoch_.resize(epoch + 1, 0);
      filtered_per_epoch_.resize(epoch + 1, 0);
    }
  }

  /// Processes one arriving mini-batch; returns true if the eval hook asked to stop.
  bool consume(const MiniBatch& batch) {
    const Predictions pred = predict(model_, batch);
    const KeepMask keep = strategy_->keep_mask({batch, pred, history_, epoch_, rng_});
    if (keep.size() != batch.size()) throw shape_error("strategy returned a mask of the wrong length");
    hardness_.record(pred.losses, keep, epoch_);
    const auto n_kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
    arrived_per_epoch_[epoch_] += batch.size();
    filtered_per_epoch_[epoch_] += batch.size() - n_kept;
    arrivals_ += 1;
    instances_arrived_ += batch.size();
    instances_filtered_ += batch.size() - n_kept;
    history_ = update_history(history_, pred.losses);

    for (const MiniBatch& b : buffer_.accumulate(batch, keep)) {
      if (b.size() != batch_size_) throw std::logic_error("update batch size != M");
      const LossAndGrad lg = loss_and_grad(model_, b);
      optimizer_step(model_, lg.grads, optimizer_);
      ++updates_;
      if (updates_ % eval_every_ == 0 && hook_ && hook_(updates_)) return true;
    }
    return false;
  }

  void set_dev_accuracy(double acc) { history_.latest_dev_accuracy = acc; }

  const Mlp& model() const noexcept { return model_; }
  const ModelHistory& history() const noexcept { return history_; }
  const HardnessHistogram& hardness() const noexcept { return hardness_; }
  std::size_t arrivals() const noexcept { return arrivals_; }
  std::size_t updates() const noexcept { return updates_; }
  std::size_t effective_instances() const noexcept { return updates_ * batch_size_; }
  std::size_t instances_arrived() const noexcept { return instances_arrived_; }
  std::size_t instances_filtered() const noexcept { return instances_filtered_; }
  std::size_t pending() const noexcept { return buffer_.pending(); }

  DropLog drop_log() const {
    DropLog log;
    for (std::size_t e = 0; e < arrived_per_epoch_.size(); ++e) {
      log.ratios.push_back(arrived_per_epoch_[e] == 0
                               ? 0.0
                               : static_cast<double>(filtered_per_epoch_[e]) /
                                     static_cast<double>(arrived_per_epoch_[e]));
    }
    return log;
  }
  const std::vector<std::size_t>& arrived_per_epoch() const noexcept { return arrived_per_epoch_; }
  const std::vector<std::size_t>& filtered_per_epoch() const noexcept { return filtered_per_epoch_; }

 private:
  Mlp model_;
  OptimizerState optimizer_;
  FiltrationStrategy* strategy_;
  Rng rng_;
  AccumulationBuffer buffer_;
  HardnessHistogram hardness_;
  ModelHistory history_;
  EvalHook hook_;
  std::size_t batch_size_;
  std::size_t eval_every_;
  std::size_t epoch_ = 0;
  std::size_t arrivals_ = 0;
  std::size_t updates_ = 0;
  std::size_t instances_arrived_ = 0;
  std::size_t instances_filtered_ = 0;
  std::vector<std::size_t> arrived_per_epoch_;
  std::vector<std::size_t> filtered_per_epoch_;
};

// ---------------------------------------------------------------------------
// Policy training (one episode, then L of them)

struct EpisodeRecord {
  std::size_t episode = 0;  ///< 1-based
  std::size_t i_tau = 0;
  double reward = 0.0;
  double baseline = 0.0;    ///< b_l after this episode
  std::size_t length = 0;   ///< T, mini-batches consumed
  double filter_ratio = 0.0;
};

/// r = -log(i_tau / T'); exactly zero when the threshold was never reached.
inline double terminal_reward(std::size_t i_tau, std::size_t horizon) {
  if (horizon == 0 || i_tau == 0 || i_tau > horizon) throw input_error("terminal_reward: need 1 <= i_tau <= T'");
  if (i_tau == horizon) return 0.0;
  return -std::log(static_cast<double>(i_tau) / static_cast<double>(horizon));
}

struct EpisodeResult {
  EpisodeRecord record;
  TrajectoryLog trajectory;
};

/// Trains a fresh base model on train under the policy until dev accuracy
/// reaches tau or T' is exhausted. Shuffles depend on (seed_data, episode).
inline EpisodeResult run_episode(const PolicyNet& policy, const Dataset& train, const Dataset& dev,
                                 const RunConfig& cfg, std::size_t episode, Rng& policy_rng) {
  cfg.validate();
  if (policy.input_dim() != state_feature_dim(train.num_classes())) {
    throw input_error("run_episode: policy input width does not match 2C+5");
  }
  EpisodeResult out;
  out.trajectory = TrajectoryLog(policy.input_dim());
  NdfStrategy strategy(policy, false, &out.trajectory);

  BaseTrainer trainer(make_base_model(train.feature_dim(), train.num_classes(), cfg, cfg.seed_model), cfg,
                      strategy, policy_rng.next_u64(), cfg.horizon);
  trainer.set_dev_accuracy(evaluate_accuracy(trainer.model(), dev));

  const bool by_updates = cfg.tau_counter == TauCounter::updates;
  auto counter = [&] { return by_updates ? trainer.updates() : trainer.arrivals(); };
  std::optional<std::size_t> crossed;
  trainer.set_eval_hook([&](std::size_t) {
    const double acc = evaluate_accuracy(trainer.model(), dev);
    trainer.set_dev_accuracy(acc);
    if (acc >= cfg.tau) {
      crossed = std::min(counter(), cfg.horizon);
      return true;
    }
    return false;
  });

  bool done = false;
  for (std::size_t epoch = 0; !done && epoch < cfg.max_epochs; ++epoch) {
    trainer.begin_epoch(epoch);
    for (const MiniBatch& b : epoch_stream(train, cfg.batch_size, derive_seed(cfg.seed_data, episode, epoch))) {
      if (trainer.consume(b) || counter() >= cfg.horizon) {
        done = true;
        break;
      }
    }
  }

  auto& r = out.record;
  r.episode = episode;
  r.i_tau = crossed.value_or(cfg.horizon);
  r.reward = terminal_reward(r.i_tau, cfg.horizon);
  r.length = trainer.arrivals();
  r.filter_ratio = trainer.instances_arrived() == 0
                       ? 0.0
                       : static_cast<double>(trainer.instances_filtered()) /
                             static_cast<double>(trainer.instances_arrived());
  return out;
}

struct PolicyTrainingResult {
  PolicyNet best;                ///< snapshot after the best-reward episode's update
  std::size_t best_episode = 0;  ///< 1-based; earliest on ties
  PolicyNet last;
  std::vector<EpisodeRecord> episodes;
};

inline PolicyConfig policy_config(const RunConfig& cfg, std::size_t classes) {
  PolicyConfig pc;
  pc.input_dim = state_feature_dim(classes);
  pc.hidden = cfg.policy_hidden;
  pc.output_bias = cfg.policy_init_bias;
  pc.learning_rate = cfg.policy_learning_rate;
  return pc;
}

inline SplitSpec ndf_split_spec(const Dataset& data, const RunConfig& cfg) {
  const std::size_t subset = cfg.ndf_subset == 0 ? data.size() : cfg.ndf_subset;
  const std::size_t dev = cfg.dev_size == 0 ? std::max<std::size_t>(1, subset / 10) : cfg.dev_size;
  return {subset, dev, derive_seed(cfg.seed_data, 0x5eed)};
}

/// Samples D' from data, splits it into train/dev, and runs L episodes each
/// followed by one REINFORCE update.
inline PolicyTrainingResult train_policy(
    const Dataset& data, const RunConfig& cfg,
    const std::function<void(const EpisodeRecord&)>& on_episode = {}) {
  cfg.validate();
  const SplitResult parts = split(data, ndf_split_spec(data, cfg));
  if (parts.train.size() < cfg.batch_size) throw input_error("train_policy: D'_train smaller than one batch");

  PolicyTrainingResult out;
  PolicyNet policy = init_policy(cfg.seed_policy, policy_config(cfg, data.num_classes()));
  Rng policy_rng(derive_seed(cfg.seed_strategy, 0xe915));
  double best_reward = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 1; l <= cfg.episodes; ++l) {
    EpisodeResult ep = run_episode(policy, parts.train, parts.dev, cfg, l, policy_rng);
    reinforce_update(policy, ep.trajectory, ep.record.reward);
    ep.record.baseline = policy.baseline.value;
    if (ep.record.reward > best_reward) {
      best_reward = ep.record.reward;
      out.best = policy;
      out.best_episode = l;
    }
    out.episodes.push_back(ep.record);
    if (on_episode) on_episode(ep.record);
  }
  out.last = std::move(policy);
  return out;
}

// ---------------------------------------------------------------------------
// Applying a strategy to the full data

struct CurvePoint {
  std::size_t effective_instances = 0;
  double test_accuracy = 0.0;

  bool operator==(const CurvePoint&) const = default;
};
using AccuracyCurve = std::vector<CurvePoint>;

struct RunOutput {
  AccuracyCurve curve;
  HardnessHistogram hardness;
  DropLog drop_log;
  std::vector<std::size_t> arrived_per_epoch;
  std::vector<std::size_t> filtered_per_epoch;
  std::size_t updates = 0;
  std::size_t instances_arrived = 0;
  std::size_t instances_filtered = 0;
  std::size_t pending = 0;
};

/// Builds the strategy named in cfg. NDF needs a policy; RandDrop reads cfg.droplog_path
/// unless a log is supplied.
inline std::unique_ptr<FiltrationStrategy> make_strategy(const RunConfig& cfg, const PolicyNet* policy,
                                                         const DropLog* droplog = nullptr) {
  if (cfg.strategy == "unfiltered") return std::make_unique<UnfilteredStrategy>();
  if (cfg.strategy == "spl") return std::make_unique<SplStrategy>(SplSchedule{cfg.spl_epochs, cfg.batch_size});
  if (cfg.strategy == "randdrop") {
    if (droplog) return std::make_unique<RandDropStrategy>(*droplog);
    if (cfg.droplog_path.empty()) throw input_error("randdrop: a drop log is required");
    return std::make_unique<RandDropStrategy>(load_droplog(cfg.droplog_path));
  }
  if (cfg.strategy == "ndf") {
    if (!policy) throw input_error("ndf: a policy checkpoint is required");
    return std::make_unique<NdfStrategy>(*policy, cfg.greedy_policy);
  }
  throw input_error("unknown strategy '" + cfg.strategy + "'");
}

/// Trains a base model on all of data under strategy for cfg.max_updates
/// updates, logging test accuracy every eval_every updates. Strategies that read
/// dev accuracy see it measured on the D'_dev ids of data.
inline RunOutput apply_strategy(const Dataset& data, const Dataset& test, FiltrationStrategy& strategy,
                                const RunConfig& cfg, std::size_t run_id = 0) {
  cfg.validate();
  if (cfg.batch_size > data.size()) throw input_error("apply_strategy: batch larger than dataset");
  std::optional<Dataset> dev;
  if (strategy.uses_dev_accuracy()) dev = split(data, ndf_split_spec(data, cfg)).dev;

  BaseTrainer trainer(
      make_base_model(data.feature_dim(), data.num_classes(), cfg, derive_seed(cfg.seed_model, run_id)), cfg,
      strategy, derive_seed(cfg.seed_strategy, run_id), cfg.horizon);
  if (dev) trainer.set_dev_accuracy(evaluate_accuracy(trainer.model(), *dev));

  RunOutput out;
  trainer.set_eval_hook([&](std::size_t updates) {
    out.curve.push_back({updates * cfg.batch_size, evaluate_accuracy(trainer.model(), test)});
    if (dev) trainer.set_dev_accuracy(evaluate_accuracy(trainer.model(), *dev));
    return updates >= cfg.max_updates;
  });

  bool done = cfg.max_updates == 0;
  for (std::size_t epoch = 0; !done && epoch < cfg.max_epochs; ++epoch) {
    trainer.begin_epoch(epoch);
    for (const MiniBatch& b :
         epoch_stream(data, cfg.batch_size, derive_seed(cfg.seed_data, 1000 + run_id, epoch))) {
      if (trainer.consume(b) || trainer.updates() >= cfg.max_updates) {
        done = true;
        break;
      }
    }
  }

  out.hardness = trainer.hardness();
  out.drop_log = trainer.drop_log();
  out.arrived_per_epoch = trainer.arrived_per_epoch();
  out.filtered_per_epoch = trainer.filtered_per_epoch();
  out.updates = trainer.updates();
  out.instances_arrived = trainer.instances_arrived();
  out.instances_filtered = trainer.instances_filtered();
  out.pending = trainer.pending();
  return out;
}

/// Pointwise mean of test accuracy; all curves must share one grid.
inline AccuracyCurve average_runs(const std::vector<AccuracyCurve>& runs) {
  if (runs.empty()) throw input_error("average_runs: no runs");
  AccuracyCurve out = runs.front();
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].size() != out.size()) throw input_error("average_runs: curves have different lengths");
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (runs[r][i].effective_instances != out[i].effective_instances) {
        throw input_error("average_runs: curves are on different grids");
      }
      out[i].test_accuracy += runs[r][i].test_accuracy;
    }
  }
  for (auto& p : out) p.test_accuracy /= static_cast<double>(runs.size());
  return out;
}

/// Effective instances at the first point reaching target, if any.
inline std::optional<std::size_t> instances_to_reach(const AccuracyCurve& curve, double target) {
  for (const auto& p : curve) {
    if (p.test_accuracy >= target) return p.effective_instances;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// CSV output (reals with 6 significant digits)

inline std::string fmt_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline void write_curve_header(std::ostream& out) { out << "run_id,strategy,effective_instances,test_accuracy\n"; }

inline void write_curve_rows(std::ostream& out, std::size_t run_id, const std::string& strategy,
                             const AccuracyCurve& curve) {
  for (const auto& p : curve) {
    out << run_id << ',' << strategy << ',' << p.effective_instances << ',' << fmt_real(p.test_accuracy) << '\n';
  }
}

inline void write_episodes(std::ostream& out, const std::vector<EpisodeRecord>& eps) {
  out << "episode,i_tau,reward,baseline\n";
  for (const auto& e : eps) {
    out << e.episode << ',' << e.i_tau << ',' << fmt_real(e.reward) << ',' << fmt_real(e.baseline) << '\n';
  }
}

struct CurveRow {
  std::size_t run_id = 0;
  std::string strategy;
  CurvePoint point;
};

inline std::vector<CurveRow> read_curve_csv(std::istream& in) {
  std::vector<CurveRow> rows;
  std::string line;
  if (!std::getline(in, line) || line.rfind("run_id,strategy,effective_instances,test_accuracy", 0) != 0) {
    throw format_error("curve.csv: missing header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, strat, eff, acc;
    if (!std::getline(ss, id, ',') || !std::getline(ss, strat, ',') || !std::getline(ss, eff, ',') ||
        !std::getline(ss, acc)) {
      throw format_error("curve.csv: short row '" + line + "'");
    }
    try {
      rows.push_back({std::stoul(id), strat, {std::stoul(eff), std::stod(acc)}});
    } catch (const std::exception&) {
      throw format_error("curve.csv: unparsable row '" + line + "'");
    }
  }
  return rows;
}

/// Aggregated outputs of R runs of one strategy.
struct StrategyRuns {
  std::vector<RunOutput> runs;
  AccuracyCurve mean_curve;
  HardnessHistogram hardness;  ///< summed over runs
  DropLog drop_log;            ///< pooled filtered/arrived per epoch
};

inline StrategyRuns run_strategy_repeated(const Corpus& corpus, const RunConfig& cfg, const PolicyNet* policy,
                                          const DropLog* droplog = nullptr) {
  StrategyRuns out;
  out.hardness = HardnessHistogram(cfg.batch_size);
  std::vector<AccuracyCurve> curves;
  std::vector<std::size_t> arrived, filtered;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    auto strategy = make_strategy(cfg, policy, droplog);
    RunOutput run = apply_strategy(corpus.train, corpus.test, *strategy, cfg, r);
    curves.push_back(run.curve);
    out.hardness.merge(run.hardness);
    if (arrived.size() < run.arrived_per_epoch.size()) {
      arrived.resize(run.arrived_per_epoch.size(), 0);
      filtered.resize(run.arrived_per_epoch.size(), 0);
    }
    for (std::size_t e = 0; e < run.arrived_per_epoch.size(); ++e) {
      arrived[e] += run.arrived_per_epoch[e];
      filtered[e] += run.filtered_per_epoch[e];
    }
    out.runs.push_back(std::move(run));
  }
  for (std::size_t e = 0; e < arrived.size(); ++e) {
    out.drop_log.ratios.push_back(arrived[e] == 0 ? 0.0
                                                  : static_cast<double>(filtered[e]) / static_cast<double>(arrived[e]));
  }
  out.mean_curve = average_runs(curves);
  return out;
}

/// Writes curve.csv, filterlog.csv and droplog.csv into dir.
inline void write_strategy_outputs(const std::filesystem::path& dir, const RunConfig& cfg,
                                   const StrategyRuns& res) {
  std::filesystem::create_directories(dir);
  const std::string label = cfg.label.empty() ? cfg.strategy : cfg.label;
  {
    std::ofstream out(dir / "curve.csv");
    write_curve_header(out);
    for (std::size_t r = 0; r < res.runs.size(); ++r) write_curve_rows(out, r, label, res.runs[r].curve);
  }
  {
    std::ofstream out(dir / "filterlog.csv");
    write_filterlog(out, res.hardness);
  }
  {
    std::ofstream out(dir / "droplog.csv");
    write_droplog(out, res.drop_log);
  }
}

inline void write_policy_outputs(const std::filesystem::path& dir, const PolicyTrainingResult& res) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "episodes.csv");
    write_episodes(out, res.episodes);
  }
  save_policy((dir / "policy.txt").string(), res.best);
}

}  // namespace ndf
