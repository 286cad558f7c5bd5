// Command-line front end: train a filtration policy, run strategies, replay
// RandDrop from a drop log, and plot curves.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "ndf/harness.hpp"
#include "ndf/report.hpp"

namespace fs = std::filesystem;

namespace {

int train_policy_cmd(const ndf::RunConfig& cfg, const fs::path& out_dir) {
  const ndf::Corpus corpus = ndf::load_corpus(cfg.dataset);
  std::cerr << "train-policy: |D|=" << corpus.train.size() << " episodes=" << cfg.episodes << "\n";
  auto res = ndf::train_policy(corpus.train, cfg, [](const ndf::EpisodeRecord& e) {
    std::cerr << "episode " << e.episode << " i_tau=" << e.i_tau << " reward=" << ndf::fmt_real(e.reward)
              << " baseline=" << ndf::fmt_real(e.baseline) << " filtered=" << ndf::fmt_real(e.filter_ratio)
              << "\n";
  });
  ndf::write_policy_outputs(out_dir, res);
  std::cerr << "best episode " << res.best_episode << "; wrote " << (out_dir / "policy.txt").string() << "\n";
  return 0;
}

int run_cmd(const ndf::RunConfig& cfg, const fs::path& out_dir) {
  const ndf::Corpus corpus = ndf::load_corpus(cfg.dataset);
  std::optional<ndf::PolicyNet> policy;
  if (cfg.strategy == "ndf") {
    if (cfg.policy_path.empty()) throw ndf::input_error("run --strategy ndf needs --policy <checkpoint>");
    policy = ndf::load_policy(cfg.policy_path);
  }
  const auto res = ndf::run_strategy_repeated(corpus, cfg, policy ? &*policy : nullptr);
  ndf::write_strategy_outputs(out_dir, cfg, res);
  const auto& last = res.mean_curve.empty() ? ndf::CurvePoint{} : res.mean_curve.back();
  std::cerr << cfg.strategy << ": " << cfg.runs << " run(s), final mean test accuracy "
            << ndf::fmt_real(last.test_accuracy) << " at " << last.effective_instances << " instances\n";
  return 0;
}

int report_cmd(const std::vector<std::string>& inputs, const fs::path& out_dir, const std::string& title) {
  std::vector<ndf::CurveRow> rows;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw ndf::input_error("report: cannot open " + path);
    auto part = ndf::read_curve_csv(in);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  fs::create_directories(out_dir);
  std::ofstream svg(out_dir / "curves.svg");
  ndf::write_svg_chart(svg, ndf::mean_curves_by_strategy(rows), title);
  std::cerr << "wrote " << (out_dir / "curves.svg").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned data filtration for mini-batch SGD"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Key-value config file; command-line flags override it");

  ndf::RunConfig cfg;
  std::string out_dir = "out";
  std::string tau_counter = "arrivals";

  app.add_option("--dataset", cfg.dataset, "mnist:<dir> or blobs:classes=..,per_class=..,dim=..,spread=..,seed=..,test=..");
  app.add_option("--strategy", cfg.strategy, "Filtration strategy")
      ->check(CLI::IsMember({"unfiltered", "spl", "randdrop", "ndf"}));
  app.add_option("--label", cfg.label, "Strategy label written to curve.csv");
  app.add_option("--batch-size", cfg.batch_size, "Mini-batch size M");
  app.add_option("--tau", cfg.tau, "Dev-accuracy threshold for the terminal reward");
  app.add_option("--horizon", cfg.horizon, "Iteration cap T'");
  app.add_option("--tau-counter", tau_counter, "Unit of i_tau and T'")
      ->check(CLI::IsMember({"arrivals", "updates"}));
  app.add_option("--episodes", cfg.episodes, "Policy-training episodes L");
  app.add_option("--gamma", cfg.gamma, "Discount factor (inert with terminal-only reward)");
  app.add_option("--ndf-subset", cfg.ndf_subset, "|D'| (0 = all training data)");
  app.add_option("--dev-size", cfg.dev_size, "|D'_dev| (0 = 10% of D')");
  app.add_option("--policy-hidden", cfg.policy_hidden, "Policy hidden width");
  app.add_option("--policy-lr", cfg.policy_learning_rate, "Adam learning rate for the policy");
  app.add_option("--spl-epochs", cfg.spl_epochs, "SPL epochs to full inclusion S");
  app.add_option("--droplog", cfg.droplog_path, "droplog.csv to replay (randdrop)");
  app.add_option("--policy", cfg.policy_path, "Policy checkpoint (ndf)");
  app.add_flag("--greedy", cfg.greedy_policy, "Keep iff p >= 0.5 instead of sampling");
  app.add_option("--hidden", cfg.hidden, "Base-model hidden widths")->delimiter(',');
  app.add_option("--lr", cfg.learning_rate, "Base-model momentum-SGD learning rate");
  app.add_option("--momentum", cfg.momentum, "Momentum coefficient");
  app.add_option("--init-scale", cfg.init_scale, "Base-model weights ~ U(-s, s)");
  app.add_option("--eval-every", cfg.eval_every, "Evaluate every N updates");
  app.add_option("--max-updates", cfg.max_updates, "Updates per run");
  app.add_option("--max-epochs", cfg.max_epochs, "Cap on passes over the data");
  app.add_option("--runs", cfg.runs, "Repeated runs R");
  app.add_option("--seed-data", cfg.seed_data);
  app.add_option("--seed-policy", cfg.seed_policy);
  app.add_option("--seed-strategy", cfg.seed_strategy);
  app.add_option("--seed-model", cfg.seed_model);
  app.add_option("--out", out_dir, "Output directory");

  auto* train = app.add_subcommand("train-policy", "Train the filtration policy on a subset of the data");
  auto* run = app.add_subcommand("run", "Train the base model on all data with one strategy");
  auto* replay = app.add_subcommand("replay-randdrop", "Run RandDrop with the ratios of a droplog.csv");
  auto* report = app.add_subcommand("report", "Plot curve.csv files as an SVG line chart");
  std::vector<std::string> report_inputs;
  std::string title = "Test accuracy vs. effective training instances";
  report->add_option("curves", report_inputs, "curve.csv files")->required();
  report->add_option("--title", title);

  CLI11_PARSE(app, argc, argv);
  cfg.tau_counter = tau_counter == "updates" ? ndf::TauCounter::updates : ndf::TauCounter::arrivals;

  try {
    if (*train) return train_policy_cmd(cfg, out_dir);
    if (*run) return run_cmd(cfg, out_dir);
    if (*replay) {
      if (cfg.droplog_path.empty()) throw ndf::input_error("replay-randdrop needs --droplog <file>");
      cfg.strategy = "randdrop";
      return run_cmd(cfg, out_dir);
    }
    if (*report) return report_cmd(report_inputs, out_dir, title);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
