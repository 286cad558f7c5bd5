#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ndf/data.hpp"
#include "ndf/errors.hpp"
#include "ndf/features.hpp"
#include "ndf/mlp.hpp"
#include "ndf/policy.hpp"
#include "ndf/rng.hpp"

namespace ndf {

using KeepMask = std::vector<bool>;

/// Everything a strategy may look at when one mini-batch arrives.
struct FilterContext {
  const MiniBatch& batch;
  const Predictions& predictions;  ///< current base model on the arriving batch
  const ModelHistory& history;
  std::size_t epoch = 0;
  Rng& rng;
};

class FiltrationStrategy {
 public:
  virtual ~FiltrationStrategy() = default;
  virtual std::string_view name() const noexcept = 0;
  /// One flag per instance of ctx.batch; true keeps the instance.
  virtual KeepMask keep_mask(const FilterContext& ctx) = 0;
  /// Whether decisions read the dev-accuracy field of the history.
  virtual bool uses_dev_accuracy() const noexcept { return false; }
};

class UnfilteredStrategy final : public FiltrationStrategy {
 public:
  std::string_view name() const noexcept override { return "unfiltered"; }
  KeepMask keep_mask(const FilterContext& ctx) override { return KeepMask(ctx.batch.size(), true); }
};

// ---------------------------------------------------------------------------
// Loss ranks

/// Rank of each entry when sorted by descending loss (1 = largest). Equal
/// losses rank the earlier arrival first.
inline std::vector<std::size_t> loss_ranks(std::span<const double> losses) {
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });
  std::vector<std::size_t> rank(losses.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  return rank;
}

// ---------------------------------------------------------------------------
// Self-paced learning

struct SplSchedule {
  std::size_t epochs_to_full = 1;  ///< S
  std::size_t batch_size = 1;      ///< M
};

/// K(e) = max(0, round((M - 1)(1 - e/S))), rounding halves up.
inline std::size_t spl_threshold(const SplSchedule& s, std::size_t epoch) {
  if (s.epochs_to_full == 0) throw input_error("spl_threshold: S must be >= 1");
  if (s.batch_size == 0) throw input_error("spl_threshold: M must be >= 1");
  const double frac = 1.0 - static_cast<double>(epoch) / static_cast<double>(s.epochs_to_full);
  const double k = std::floor(static_cast<double>(s.batch_size - 1) * frac + 0.5);
  return k <= 0.0 ? 0 : static_cast<std::size_t>(k);
}

/// Filters the K largest losses, exactly M - K kept.
inline KeepMask spl_mask(std::span<const double> losses, std::size_t k) {
  if (k >= losses.size() && !losses.empty()) throw input_error("spl_mask: K must be < M");
  const auto rank = loss_ranks(losses);
  KeepMask keep(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) keep[i] = rank[i] > k;
  return keep;
}

class SplStrategy final : public FiltrationStrategy {
 public:
  explicit SplStrategy(SplSchedule s) : schedule_(s) {}
  std::string_view name() const noexcept override { return "spl"; }
  KeepMask keep_mask(const FilterContext& ctx) override {
    return spl_mask(ctx.predictions.losses, spl_threshold(schedule_, ctx.epoch));
  }

 private:
  SplSchedule schedule_;
};

// ---------------------------------------------------------------------------
// RandDrop

/// Per-epoch fraction of arrived instances that were filtered.
struct DropLog {
  std::vector<double> ratios;

  /// Epochs past the end of the log replay the last logged ratio.
  double ratio(std::size_t epoch) const noexcept {
    if (ratios.empty()) return 0.0;
    return ratios[std::min(epoch, ratios.size() - 1)];
  }
};

inline void write_droplog(std::ostream& out, const DropLog& log) {
  out << "epoch,ratio\n";
  char buf[64];
  for (std::size_t e = 0; e < log.ratios.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.6g\n", e, log.ratios[e]);
    out << buf;
  }
}

inline DropLog read_droplog(std::istream& in) {
  DropLog log;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("epoch", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw format_error("droplog: expected 'epoch,ratio' in '" + line + "'");
    std::size_t epoch = 0;
    double ratio = 0.0;
    try {
      epoch = std::stoul(line.substr(0, comma));
      ratio = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw format_error("droplog: unparsable line '" + line + "'");
    }
    if (epoch != log.ratios.size()) throw format_error("droplog: epochs must be consecutive from 0");
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw format_error("droplog: ratio outside [0,1]");
    log.ratios.push_back(ratio);
  }
  return log;
}

inline DropLog load_droplog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("load_droplog: cannot open " + path);
  return read_droplog(in);
}

/// Filters each instance independently with probability rho.
inline KeepMask randdrop_mask(std::size_t m, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw input_error("randdrop_mask: ratio outside [0,1]");
  KeepMask keep(m);
  for (std::size_t i = 0; i < m; ++i) keep[i] = !rng.bernoulli(rho);
  return keep;
}

class RandDropStrategy final : public FiltrationStrategy {
 public:
  explicit RandDropStrategy(DropLog log) : log_(std::move(log)) {}
  std::string_view name() const noexcept override { return "randdrop"; }
  KeepMask keep_mask(const FilterContext& ctx) override {
    return randdrop_mask(ctx.batch.size(), log_.ratio(ctx.epoch), ctx.rng);
  }

 private:
  DropLog log_;
};

// ---------------------------------------------------------------------------
// Neural data filter

/// State matrix (one row per instance) for an arriving batch.
inline Matrix batch_states(const MiniBatch& batch, const Predictions& pred, const ModelHistory& history) {
  const std::size_t classes = pred.probabilities.cols();
  Matrix states(batch.size(), state_feature_dim(classes));
  for (std::size_t m = 0; m < batch.size(); ++m) {
    featurize_into(batch[m].label, pred.probabilities.row(m), pred.losses[m], history, states.row(m));
  }
  return states;
}

class NdfStrategy final : public FiltrationStrategy {
 public:
  /// The policy must outlive the strategy. When recorder is set every
  /// (state, action) pair is appended to it.
  explicit NdfStrategy(const PolicyNet& policy, bool greedy = false, TrajectoryLog* recorder = nullptr)
      : policy_(&policy), greedy_(greedy), recorder_(recorder) {}

  std::string_view name() const noexcept override { return "ndf"; }
  bool uses_dev_accuracy() const noexcept override { return true; }

  KeepMask keep_mask(const FilterContext& ctx) override {
    const Matrix states = batch_states(ctx.batch, ctx.predictions, ctx.history);
    PolicyDecision d = greedy_ ? decide_greedy(*policy_, states) : decide(*policy_, states, ctx.rng);
    if (recorder_) recorder_->record_step(states, d.keep_mask);
    return std::move(d.keep_mask);
  }

 private:
  const PolicyNet* policy_;
  bool greedy_;
  TrajectoryLog* recorder_;
};

// ---------------------------------------------------------------------------
// Accumulation buffer

/// FIFO of kept-but-untrained instances; releases batches of exactly M.
class AccumulationBuffer {
 public:
  explicit AccumulationBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw input_error("AccumulationBuffer: capacity must be positive");
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t pending() const noexcept { return pending_.size(); }

  std::vector<MiniBatch> accumulate(std::span<const LabeledInstance* const> kept) {
    pending_.insert(pending_.end(), kept.begin(), kept.end());
    std::vector<MiniBatch> out;
    while (pending_.size() >= capacity_) {
      MiniBatch b;
      b.batch_index = emitted_++;
      b.instances.assign(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(capacity_));
      pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(capacity_));
      out.push_back(std::move(b));
    }
    return out;
  }

  std::vector<MiniBatch> accumulate(const MiniBatch& batch, const KeepMask& keep) {
    if (keep.size() != batch.size()) throw shape_error("accumulate: mask length != batch size");
    std::vector<const LabeledInstance*> kept;
    kept.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (keep[i]) kept.push_back(batch.instances[i]);
    }
    return accumulate(kept);
  }

 private:
  std::size_t capacity_;
  std::size_t emitted_ = 0;
  std::deque<const LabeledInstance*> pending_;
};

// ---------------------------------------------------------------------------
// Hardness histogram

inline constexpr std::size_t kHardnessBuckets = 5;

/// Inclusive rank range [first, last] of bucket b for batch size M.
inline std::pair<std::size_t, std::size_t> bucket_ranks(std::size_t b, std::size_t m) noexcept {
  return {b * m / kHardnessBuckets + 1, (b + 1) * m / kHardnessBuckets};
}

inline std::size_t rank_bucket(std::size_t rank, std::size_t m) noexcept {
  for (std::size_t b = 0; b + 1 < kHardnessBuckets; ++b) {
    if (rank <= bucket_ranks(b, m).second) return b;
  }
  return kHardnessBuckets - 1;
}

inline std::string bucket_label(std::size_t b, std::size_t m) {
  const auto [first, last] = bucket_ranks(b, m);
  return std::to_string(first) + "-" + std::to_string(last);
}

/// Per-epoch counts of filtered instances by within-batch loss rank.
class HardnessHistogram {
 public:
  using Counts = std::array<std::size_t, kHardnessBuckets>;

  explicit HardnessHistogram(std::size_t batch_size = 1) : batch_size_(batch_size) {}

  void record(std::span<const double> losses, const KeepMask& keep, std::size_t epoch) {
    if (keep.size() != losses.size()) throw shape_error("record_hardness: mask length != losses");
    if (std::all_of(keep.begin(), keep.end(), [](bool k) { return k; })) return;
    Counts& c = counts_[epoch];
    const auto rank = loss_ranks(losses);
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (!keep[i]) {
        ++c[rank_bucket(rank[i], losses.size())];
        ++filtered_[epoch];
      }
    }
  }

  /// Makes the epoch appear in the output even if nothing gets filtered.
  void begin_epoch(std::size_t epoch) { counts_.try_emplace(epoch); }

  std::size_t batch_size() const noexcept { return batch_size_; }
  const std::map<std::size_t, Counts>& counts() const noexcept { return counts_; }
  std::size_t filtered(std::size_t epoch) const {
    auto it = filtered_.find(epoch);
    return it == filtered_.end() ? 0 : it->second;
  }

  /// Adds another run's counts (same batch size) epoch by epoch.
  void merge(const HardnessHistogram& o) {
    for (const auto& [e, c] : o.counts_) {
      auto& dst = counts_[e];
      for (std::size_t b = 0; b < kHardnessBuckets; ++b) dst[b] += c[b];
    }
    for (const auto& [e, n] : o.filtered_) filtered_[e] += n;
  }

 private:
  std::size_t batch_size_;
  std::map<std::size_t, Counts> counts_;
  std::map<std::size_t, std::size_t> filtered_;
};

inline void record_hardness(HardnessHistogram& h, std::span<const double> losses, const KeepMask& keep,
                            std::size_t epoch) {
  h.record(losses, keep, epoch);
}

inline void write_filterlog(std::ostream& out, const HardnessHistogram& h) {
  out << "epoch,bucket,filtered_count\n";
  for (const auto& [epoch, counts] : h.counts()) {
    for (std::size_t b = 0; b < kHardnessBuckets; ++b) {
      out << epoch << ',' << bucket_label(b, h.batch_size()) << ',' << counts[b] << '\n';
    }
  }
}

}  // namespace ndf
