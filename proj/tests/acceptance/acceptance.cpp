// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include <unistd.h>

#include "ndf/harness.hpp"
#include "support/bandit.hpp"
#include "support/oracles.hpp"

using namespace ndf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

int failures = 0;

void report(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && secs >= limit_s) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("over time budget");
  }
  if (!o.pass) ++failures;
  std::printf("%s  C%d %s (%.1fs%s) %s\n", o.pass ? "PASS" : "FAIL", id, title, secs,
              limit_s > 0 ? (" / " + fmt_real(limit_s) + "s").c_str() : "", o.detail.c_str());
  std::fflush(stdout);
}

std::string num(double x) { return fmt_real(x); }

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  Outcome o;
  Rng rng(2024);
  double worst_base = 0, worst_policy = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> sizes{1 + rng.below(10)};
    const std::size_t depth = 1 + rng.below(3);
    for (std::size_t d = 0; d < depth; ++d) sizes.push_back(1 + rng.below(10));
    sizes.push_back(2 + rng.below(9));
    Mlp m = oracle::random_mlp(sizes, OutputKind::softmax, rng);
    const std::size_t n = 1 + rng.below(6);
    const Matrix x = oracle::random_matrix(n, sizes.front(), rng);
    std::vector<std::size_t> y(n);
    for (auto& v : y) v = rng.below(sizes.back());
    const auto analytic = loss_and_grad(m, x, y).grads;
    const auto numeric = oracle::finite_difference(m.layers(), [&] { return loss_and_grad(m, x, y).mean_loss; });
    worst_base = std::max(worst_base, oracle::max_relative_error(analytic, numeric));
  }
  for (int trial = 0; trial < 20; ++trial) {
    PolicyConfig cfg;
    cfg.input_dim = 2 + rng.below(24);
    cfg.hidden = 1 + rng.below(12);
    PolicyNet p = init_policy(rng.next_u64(), cfg);
    p.net = oracle::random_mlp({cfg.input_dim, cfg.hidden, 1}, OutputKind::sigmoid, rng);
    TrajectoryLog traj(cfg.input_dim);
    for (int step = 0; step < 3; ++step) {
      const std::size_t m = 1 + rng.below(5);
      std::vector<bool> a(m);
      for (std::size_t i = 0; i < m; ++i) a[i] = rng.bernoulli(0.5);
      traj.record_step(oracle::random_matrix(m, cfg.input_dim, rng), a);
    }
    const auto analytic = trajectory_log_prob_gradient(p, traj);
    const auto numeric = oracle::finite_difference(p.net.layers(), [&] { return trajectory_log_prob(p, traj); });
    worst_policy = std::max(worst_policy, oracle::max_relative_error(analytic, numeric));
  }
  o.require(worst_base < 1e-4, "base MLP rel err " + num(worst_base));
  o.require(worst_policy < 1e-4, "policy rel err " + num(worst_policy));
  o.detail = "max rel err base=" + num(worst_base) + " policy=" + num(worst_policy) +
             (o.pass ? "" : " | " + o.detail);
  return o;
}

Outcome exact_arithmetic() {
  Outcome o;
  // Baseline: bit-identical to the recurrence evaluated step by step.
  Rng rng(5);
  RewardBaseline b;
  double oracle_b = 0.0;
  for (int l = 1; l <= 500; ++l) {
    const double r = rng.uniform(0, 3);
    b.update(r);
    oracle_b = 0.8 * oracle_b + 0.2 * r;
    if (b.value != oracle_b) {
      o.require(false, "baseline diverges at l=" + std::to_string(l));
      break;
    }
  }
  RewardBaseline ones;
  ones.update(1.0);
  o.require(ones.value == 0.2, "b_1 != 0.2");
  ones.update(1.0);
  o.require(ones.value == 0.8 * 0.2 + 0.2 * 1.0, "b_2 != 0.8*0.2+0.2");

  for (std::size_t m : {1u, 2u, 5u, 20u, 128u}) {
    for (std::size_t s : {1u, 7u, 80u}) {
      o.require(spl_threshold({s, m}, 0) == m - 1, "K(0) != M-1 for M=" + std::to_string(m));
      o.require(spl_threshold({s, m}, s) == 0, "K(S) != 0 for S=" + std::to_string(s));
    }
  }

  for (std::size_t horizon : {1u, 10u, 2000u}) o.require(terminal_reward(horizon, horizon) == 0.0, "r(T') != 0");
  for (std::size_t i : {1u, 7u, 999u}) {
    o.require(terminal_reward(i, 1000) == -std::log(static_cast<double>(i) / 1000.0), "r != -log(i/T')");
  }

  // Every update consumes exactly M; the trainer throws otherwise.
  const Corpus corpus = load_corpus("blobs:classes=4,per_class=60,dim=5,spread=1.0,seed=3,test=40");
  RunConfig cfg;
  cfg.hidden = {8};
  cfg.batch_size = 7;
  cfg.max_updates = 60;
  cfg.eval_every = 5;
  cfg.spl_epochs = 3;
  const PolicyNet policy = init_policy(1, policy_config(cfg, corpus.train.num_classes()));
  const DropLog drops{{0.5, 0.3}};
  for (const char* s : {"unfiltered", "spl", "randdrop", "ndf"}) {
    cfg.strategy = s;
    auto strategy = make_strategy(cfg, &policy, &drops);
    const RunOutput run = apply_strategy(corpus.train, corpus.test, *strategy, cfg);
    o.require(run.updates * cfg.batch_size + run.pending == run.instances_arrived - run.instances_filtered,
              std::string(s) + ": kept != M*updates + pending");
    o.require(run.pending < cfg.batch_size, std::string(s) + ": buffer holds a full batch");
    o.require(run.curve.back().effective_instances == run.updates * cfg.batch_size,
              std::string(s) + ": effective instances != M*updates");
  }
  if (o.pass) o.detail = "baseline, K(0)/K(S), reward, M-per-update accounting";
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  Rng rng(77);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 1 + rng.below(40);
    std::vector<double> losses(m);
    for (auto& l : losses) l = std::floor(rng.uniform(0, 8));
    const std::size_t k = rng.below(m);
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < m; ++i) order.emplace_back(-losses[i], i);
    std::sort(order.begin(), order.end());
    KeepMask expect(m, true);
    for (std::size_t i = 0; i < k; ++i) expect[order[i].second] = false;
    if (spl_mask(losses, k) != expect) {
      o.require(false, "SPL mask differs from sort oracle at batch " + std::to_string(t));
      break;
    }
  }

  double worst_fwd = 0;
  for (int t = 0; t < 20; ++t) {
    std::vector<std::size_t> sizes{1 + rng.below(30)};
    const std::size_t depth = 1 + rng.below(3);
    for (std::size_t d = 0; d < depth; ++d) sizes.push_back(1 + rng.below(30));
    sizes.push_back(1 + rng.below(10));
    const auto kind = sizes.back() == 1 ? OutputKind::sigmoid : OutputKind::softmax;
    const Mlp m = oracle::random_mlp(sizes, kind, rng);
    const Matrix x = oracle::random_matrix(1 + rng.below(8), sizes.front(), rng);
    const Matrix y = m.forward(x);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto row = x.row(r);
      const auto ref = oracle::naive_forward(m, std::vector<double>(row.begin(), row.end()));
      for (std::size_t c = 0; c < ref.size(); ++c) worst_fwd = std::max(worst_fwd, std::abs(y(r, c) - ref[c]));
    }
  }
  o.require(worst_fwd <= 1e-12, "forward vs naive " + num(worst_fwd));

  double worst_z = 0;
  for (double rho : {0.05, 0.3, 0.5, 0.9}) {
    constexpr std::size_t kBatches = 2000, kM = 20;
    std::size_t filtered = 0;
    for (std::size_t i = 0; i < kBatches; ++i) {
      const auto mask = randdrop_mask(kM, rho, rng);
      filtered += static_cast<std::size_t>(std::count(mask.begin(), mask.end(), false));
    }
    const double n = kBatches * kM;
    const double z = std::abs(static_cast<double>(filtered) - n * rho) / std::sqrt(n * rho * (1 - rho));
    worst_z = std::max(worst_z, z);
  }
  // Replayed through the trainer against its own per-epoch log.
  {
    const Corpus corpus = load_corpus("blobs:classes=3,per_class=400,dim=4,spread=1.0,seed=9,test=30");
    RunConfig cfg;
    cfg.hidden = {4};
    cfg.strategy = "randdrop";
    cfg.max_updates = 100000;
    cfg.max_epochs = 4;
    cfg.eval_every = 50;
    const DropLog drops{{0.1, 0.25, 0.6, 0.4}};
    auto strategy = make_strategy(cfg, nullptr, &drops);
    const RunOutput run = apply_strategy(corpus.train, corpus.test, *strategy, cfg);
    for (std::size_t e = 0; e < run.arrived_per_epoch.size(); ++e) {
      const double n = static_cast<double>(run.arrived_per_epoch[e]);
      const double rho = drops.ratio(e);
      const double z = std::abs(static_cast<double>(run.filtered_per_epoch[e]) - n * rho) / std::sqrt(n * rho * (1 - rho));
      worst_z = std::max(worst_z, z);
    }
  }
  o.require(worst_z <= 3.0, "RandDrop rate off by " + num(worst_z) + " sigma");
  o.detail = "forward max abs diff=" + num(worst_fwd) + " RandDrop max |z|=" + num(worst_z) +
             (o.pass ? "" : " | " + o.detail);
  return o;
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("ndf-acceptance-" + std::to_string(::getpid()));
  const std::string common =
      " --dataset blobs:classes=5,per_class=200,dim=10,spread=1.2,seed=11,test=200"
      " --hidden 16 --episodes 6 --horizon 300 --tau 0.8 --eval-every 10 --max-updates 200 --runs 2";
  for (const char* tag : {"a", "b"}) {
    const fs::path dir = root / tag;
    const std::string cli = std::string(NDF_CLI);
    const std::string train = cli + " train-policy" + common + " --out " + (dir / "policy").string() + " 2>/dev/null";
    const std::string run = cli + " run --strategy ndf --policy " + (dir / "policy" / "policy.txt").string() + common +
                            " --out " + (dir / "ndf").string() + " 2>/dev/null";
    o.require(std::system(train.c_str()) == 0, std::string("train-policy failed (") + tag + ")");
    o.require(std::system(run.c_str()) == 0, std::string("run failed (") + tag + ")");
  }
  for (const char* file : {"policy/episodes.csv", "ndf/curve.csv", "ndf/filterlog.csv"}) {
    const std::string a = slurp(root / "a" / file);
    const std::string b = slurp(root / "b" / file);
    o.require(!a.empty() && a == b, std::string(file) + " differs");
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  if (o.pass) o.detail = "episodes.csv, curve.csv, filterlog.csv byte-identical across two CLI invocations";
  return o;
}

// ---------------------------------------------------------------------------

Outcome bandit_check() {
  Outcome o;
  double init = 0, keep = 0, filter = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    init += bandit::initial_keep_probability(seed);
    keep += bandit::trained_keep_probability(seed, true, 200);
    filter += bandit::trained_keep_probability(seed, false, 200);
  }
  init /= 20;
  keep /= 20;
  filter /= 20;
  o.require(std::abs(init - 1.0 / (1.0 + std::exp(-2.0))) < 1e-3, "initial keep prob " + num(init));
  o.require(keep > init && keep < 1.0, "keep-rewarded did not rise");
  o.require(filter < init, "filter-rewarded did not fall");
  o.detail = "init=" + num(init) + " keep-rewarded=" + num(keep) + " filter-rewarded=" + num(filter) +
             (o.pass ? "" : " | " + o.detail);
  return o;
}

// ---------------------------------------------------------------------------

struct MnistResults {
  bool ran = false;
  std::string error;
  StrategyRuns unfiltered, ndf, randdrop;
};

RunConfig mnist_config() {
  RunConfig cfg;
  cfg.dataset = std::string("mnist:") + NDF_MNIST_DIR;
  cfg.hidden = {64};
  cfg.batch_size = 20;
  cfg.tau = 0.90;
  cfg.episodes = 50;
  cfg.ndf_subset = 5000;
  cfg.dev_size = 1000;
  cfg.eval_every = 10;
  cfg.max_updates = 1500;
  cfg.runs = 5;
  return cfg;
}

MnistResults run_mnist() {
  MnistResults res;
  try {
    const RunConfig base = mnist_config();
    const Corpus corpus = load_corpus(base.dataset);
    const PolicyTrainingResult trained = train_policy(corpus.train, base);
    RunConfig cfg = base;
    cfg.strategy = "unfiltered";
    res.unfiltered = run_strategy_repeated(corpus, cfg, nullptr);
    cfg.strategy = "ndf";
    res.ndf = run_strategy_repeated(corpus, cfg, &trained.best);
    cfg.strategy = "randdrop";
    res.randdrop = run_strategy_repeated(corpus, cfg, nullptr, &res.ndf.drop_log);
    res.ran = true;
    std::printf("      policy: best episode %zu, reward %s; NDF filtered %s of arrivals\n", trained.best_episode,
                num(trained.episodes[trained.best_episode - 1].reward).c_str(),
                num(static_cast<double>(std::accumulate(res.ndf.runs.begin(), res.ndf.runs.end(), std::size_t{0},
                                                        [](std::size_t s, const RunOutput& r) {
                                                          return s + r.instances_filtered;
                                                        })) /
                    static_cast<double>(std::accumulate(res.ndf.runs.begin(), res.ndf.runs.end(), std::size_t{0},
                                                        [](std::size_t s, const RunOutput& r) {
                                                          return s + r.instances_arrived;
                                                        })))
                    .c_str());
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

std::string reach_str(const std::optional<std::size_t>& x) { return x ? std::to_string(*x) : "never"; }

Outcome mnist_reproduction(const MnistResults& res) {
  Outcome o;
  if (!res.ran) {
    o.require(false, "MNIST runs failed: " + res.error);
    return o;
  }
  const auto unf = instances_to_reach(res.unfiltered.mean_curve, 0.90);
  const auto ndf = instances_to_reach(res.ndf.mean_curve, 0.90);
  o.require(unf.has_value(), "Unfiltered never reached 0.90");
  o.require(ndf.has_value(), "NDF never reached 0.90");
  double ratio = NAN;
  if (unf && ndf) {
    ratio = static_cast<double>(*ndf) / static_cast<double>(*unf);
    o.require(ratio <= 0.85, "NDF/Unfiltered instance ratio " + num(ratio) + " > 0.85");
  }
  const std::size_t last = std::min(res.ndf.mean_curve.size(), res.randdrop.mean_curve.size()) - 1;
  const double ndf_acc = res.ndf.mean_curve[last].test_accuracy;
  const double rd_acc = res.randdrop.mean_curve[last].test_accuracy;
  o.require(ndf_acc - rd_acc >= 0.005, "NDF - RandDrop at final point " + num(ndf_acc - rd_acc) + " < 0.005");
  std::string d = "instances to 0.90: Unfiltered=" + reach_str(unf) + " NDF=" + reach_str(ndf) +
                  " ratio=" + num(ratio) + "; at " + std::to_string(res.ndf.mean_curve[last].effective_instances) +
                  " instances NDF=" + num(ndf_acc) + " RandDrop=" + num(rd_acc) +
                  " Unfiltered=" + num(res.unfiltered.mean_curve[last].test_accuracy);
  o.detail = d + (o.pass ? "" : " | " + o.detail);
  return o;
}

Outcome hardness_conservation(const MnistResults& res) {
  Outcome o;
  if (!res.ran) {
    o.require(false, "MNIST runs failed: " + res.error);
    return o;
  }
  std::size_t epochs = 0, filtered = 0;
  for (const StrategyRuns* s : {&res.unfiltered, &res.ndf, &res.randdrop}) {
    for (const RunOutput& run : s->runs) {
      for (std::size_t e = 0; e < run.filtered_per_epoch.size(); ++e) {
        const auto& counts = run.hardness.counts();
        const auto it = counts.find(e);
        const std::size_t total =
            it == counts.end() ? 0 : std::accumulate(it->second.begin(), it->second.end(), std::size_t{0});
        o.require(total == run.filtered_per_epoch[e], "epoch " + std::to_string(e) + " bucket sum mismatch");
        ++epochs;
        filtered += total;
      }
    }
  }
  if (o.pass) o.detail = std::to_string(epochs) + " run-epochs, " + std::to_string(filtered) + " filtered instances";
  return o;
}

}  // namespace

int main() {
  report(1, "gradient suite", 10, gradient_suite);
  report(2, "exact arithmetic", 0, exact_arithmetic);
  report(3, "oracle equivalence", 0, oracle_equivalence);
  report(4, "determinism", 300, determinism);
  report(6, "REINFORCE bandit", 30, bandit_check);
  MnistResults mnist;
  report(5, "MNIST desk-scale reproduction", 3600, [&] {
    mnist = run_mnist();
    return mnist_reproduction(mnist);
  });
  report(7, "hardness-histogram conservation", 0, [&] { return hardness_conservation(mnist); });
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
