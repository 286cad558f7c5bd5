#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ndf/errors.hpp"
#include "ndf/features.hpp"
#include "ndf/matrix.hpp"
#include "ndf/mlp.hpp"
#include "ndf/optim.hpp"
#include "ndf/rng.hpp"

namespace ndf {

/// Exponential moving average of episode rewards: b_l = 0.8 b_{l-1} + 0.2 r_l, b_0 = 0.
struct RewardBaseline {
  double value = 0.0;
  std::uint64_t episodes = 0;

  static constexpr double kDecay = 0.8;
  static constexpr double kWeight = 0.2;

  void update(double reward) noexcept {
    value = kDecay * value + kWeight * reward;
    ++episodes;
  }

  bool operator==(const RewardBaseline&) const = default;
};

struct PolicyConfig {
  std::size_t input_dim = 25;
  std::size_t hidden = 12;
  double init_scale = 0.01;
  double output_bias = 2.0;
  double learning_rate = 1e-3;
};

/// Keep-probability network (inputs x hidden x 1, tanh then sigmoid) with its
/// Adam state and reward baseline.
struct PolicyNet {
  Mlp net;
  OptimizerState optimizer;
  RewardBaseline baseline;

  std::size_t input_dim() const noexcept { return net.input_dim(); }

  bool operator==(const PolicyNet& o) const {
    if (!(net == o.net) || !(baseline == o.baseline)) return false;
    const auto* a = std::get_if<Adam>(&optimizer);
    const auto* b = std::get_if<Adam>(&o.optimizer);
    if (!a || !b) return false;
    return a->learning_rate == b->learning_rate && a->beta1 == b->beta1 && a->beta2 == b->beta2 &&
           a->epsilon == b->epsilon && a->step == b->step && a->first_moment == b->first_moment &&
           a->second_moment == b->second_moment;
  }
};

/// Weights ~ U(-0.01, 0.01); all biases 0 except the output bias, which is 2.
inline PolicyNet init_policy(std::uint64_t seed, const PolicyConfig& cfg = {}) {
  PolicyNet p;
  p.net = Mlp({cfg.input_dim, cfg.hidden, 1}, OutputKind::sigmoid);
  Rng rng(seed);
  p.net.init_uniform(cfg.init_scale, rng);
  p.net.layers().back().biases.assign(1, cfg.output_bias);
  p.optimizer = make_adam(p.net.layers(), cfg.learning_rate);
  return p;
}

inline constexpr double kKeepProbFloor = 1e-12;

inline double clamp_keep_prob(double p) noexcept {
  return std::clamp(p, kKeepProbFloor, 1.0 - kKeepProbFloor);
}

/// Keep probabilities for each row of states.
inline std::vector<double> keep_probabilities(const PolicyNet& policy, const Matrix& states) {
  if (states.cols() != policy.input_dim()) {
    throw shape_error("policy: state length " + std::to_string(states.cols()) + " != " +
                      std::to_string(policy.input_dim()));
  }
  const Matrix out = policy.net.forward(states);
  std::vector<double> p(out.rows());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = clamp_keep_prob(out(i, 0));
  return p;
}

struct PolicyDecision {
  std::vector<bool> keep_mask;
  std::vector<double> keep_probs;
  double log_prob_sum = 0.0;
};

inline double log_prob(bool keep, double p) noexcept { return std::log(keep ? p : 1.0 - p); }

/// Samples a_m ~ Bernoulli(p_m) independently for every row of states.
inline PolicyDecision decide(const PolicyNet& policy, const Matrix& states, Rng& rng) {
  PolicyDecision d;
  d.keep_probs = keep_probabilities(policy, states);
  d.keep_mask.resize(d.keep_probs.size());
  for (std::size_t m = 0; m < d.keep_probs.size(); ++m) {
    const bool keep = rng.bernoulli(d.keep_probs[m]);
    d.keep_mask[m] = keep;
    d.log_prob_sum += log_prob(keep, d.keep_probs[m]);
  }
  return d;
}

/// Keeps every instance with p >= 0.5.
inline PolicyDecision decide_greedy(const PolicyNet& policy, const Matrix& states) {
  PolicyDecision d;
  d.keep_probs = keep_probabilities(policy, states);
  d.keep_mask.resize(d.keep_probs.size());
  for (std::size_t m = 0; m < d.keep_probs.size(); ++m) {
    d.keep_mask[m] = d.keep_probs[m] >= 0.5;
    d.log_prob_sum += log_prob(d.keep_mask[m], d.keep_probs[m]);
  }
  return d;
}

/// Every (state, action) pair visited in one episode, stored row-wise.
class TrajectoryLog {
 public:
  explicit TrajectoryLog(std::size_t feature_dim = 0) : feature_dim_(feature_dim) {}

  void record_step(const Matrix& states, const std::vector<bool>& actions) {
    if (feature_dim_ == 0) feature_dim_ = states.cols();
    if (states.cols() != feature_dim_) throw shape_error("TrajectoryLog: feature length changed");
    if (states.rows() != actions.size()) throw shape_error("TrajectoryLog: one action per state");
    states_.insert(states_.end(), states.data().begin(), states.data().end());
    for (bool a : actions) actions_.push_back(a ? 1 : 0);
    ++steps_;
  }

  std::size_t steps() const noexcept { return steps_; }
  std::size_t pairs() const noexcept { return actions_.size(); }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  bool empty() const noexcept { return steps_ == 0; }

  /// Rows [begin, end) as a matrix.
  Matrix states(std::size_t begin, std::size_t end) const {
    std::vector<double> block(states_.begin() + static_cast<std::ptrdiff_t>(begin * feature_dim_),
                              states_.begin() + static_cast<std::ptrdiff_t>(end * feature_dim_));
    return Matrix(end - begin, feature_dim_, std::move(block));
  }
  bool action(std::size_t i) const noexcept { return actions_[i] != 0; }

 private:
  std::size_t feature_dim_ = 0;
  std::size_t steps_ = 0;
  std::vector<double> states_;
  std::vector<std::uint8_t> actions_;
};

/// sum_i log P(a_i | s_i) over the whole trajectory.
inline double trajectory_log_prob(const PolicyNet& policy, const TrajectoryLog& traj) {
  if (traj.empty()) return 0.0;
  const auto p = keep_probabilities(policy, traj.states(0, traj.pairs()));
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += log_prob(traj.action(i), p[i]);
  return s;
}

/// Gradient of sum_i log P(a_i | s_i) with respect to every policy parameter.
inline GradientSet trajectory_log_prob_gradient(const PolicyNet& policy, const TrajectoryLog& traj) {
  constexpr std::size_t kChunk = 4096;
  GradientSet total = zeros_like(policy.net.layers());
  for (std::size_t begin = 0; begin < traj.pairs(); begin += kChunk) {
    const std::size_t end = std::min(traj.pairs(), begin + kChunk);
    const auto cache = policy.net.forward_cached(traj.states(begin, end));
    Matrix delta(end - begin, 1);
    for (std::size_t i = begin; i < end; ++i) {
      // d log P(a|s) / dz = a - sigmoid(z)
      delta(i - begin, 0) = (traj.action(i) ? 1.0 : 0.0) - cache.output()(i - begin, 0);
    }
    const GradientSet g = policy.net.backward(cache, std::move(delta));
    for (std::size_t l = 0; l < total.size(); ++l) {
      auto tw = total[l].weights.data();
      auto gw = g[l].weights.data();
      for (std::size_t k = 0; k < tw.size(); ++k) tw[k] += gw[k];
      for (std::size_t k = 0; k < total[l].biases.size(); ++k) total[l].biases[k] += g[l].biases[k];
    }
  }
  return total;
}

/// REINFORCE with terminal-reward credit: every step gets advantage
/// r - b_{l-1}; the scaled log-probability gradient is ascended with Adam and
/// the baseline then absorbs r. Returns the advantage used.
inline double reinforce_update(PolicyNet& policy, const TrajectoryLog& traj, double reward) {
  if (traj.empty()) throw input_error("reinforce_update: empty trajectory");
  const double advantage = reward - policy.baseline.value;
  if (advantage != 0.0) {
    GradientSet g = trajectory_log_prob_gradient(policy, traj);
    for (auto& l : g) {
      for (auto& w : l.weights.data()) w *= -advantage;
      for (auto& b : l.biases) b *= -advantage;
    }
    optimizer_step(policy.net, g, policy.optimizer);
  }
  policy.baseline.update(reward);
  return advantage;
}

// ---------------------------------------------------------------------------
// Checkpoints: whitespace-separated text, reals as hexfloats so a round trip is bit-exact.

namespace detail {

inline std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

inline double parse_real(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw format_error("policy checkpoint: truncated");
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) throw format_error("policy checkpoint: bad real '" + tok + "'");
  return v;
}

inline void expect(std::istream& in, const std::string& word) {
  std::string tok;
  if (!(in >> tok) || tok != word) {
    throw format_error("policy checkpoint: expected '" + word + "', got '" + tok + "'");
  }
}

inline void write_reals(std::ostream& out, std::span<const double> xs) {
  for (double x : xs) out << ' ' << hex(x);
  out << '\n';
}

inline void read_reals(std::istream& in, std::span<double> xs) {
  for (auto& x : xs) x = parse_real(in);
}

}  // namespace detail

inline constexpr int kPolicyCheckpointVersion = 1;

inline void write_policy(std::ostream& out, const PolicyNet& policy) {
  const auto& adam = std::get<Adam>(policy.optimizer);
  const auto& layers = policy.net.layers();
  out << "ndf-policy " << kPolicyCheckpointVersion << '\n';
  out << "layers " << layers.size() << '\n';
  for (const auto& l : layers) out << "shape " << l.weights.rows() << ' ' << l.weights.cols() << '\n';
  out << "baseline " << detail::hex(policy.baseline.value) << ' ' << policy.baseline.episodes << '\n';
  out << "adam " << detail::hex(adam.learning_rate) << ' ' << detail::hex(adam.beta1) << ' '
      << detail::hex(adam.beta2) << ' ' << detail::hex(adam.epsilon) << ' ' << adam.step << '\n';
  auto dump = [&](const char* tag, const GradientSet& set) {
    for (const auto& l : set) {
      out << tag << " w";
      detail::write_reals(out, l.weights.data());
      out << tag << " b";
      detail::write_reals(out, l.biases);
    }
  };
  dump("param", layers);
  dump("m1", adam.first_moment);
  dump("m2", adam.second_moment);
}

inline PolicyNet read_policy(std::istream& in) {
  detail::expect(in, "ndf-policy");
  int version = 0;
  if (!(in >> version) || version != kPolicyCheckpointVersion) {
    throw format_error("policy checkpoint: unsupported version");
  }
  detail::expect(in, "layers");
  std::size_t n_layers = 0;
  if (!(in >> n_layers) || n_layers == 0 || n_layers > 64) throw format_error("policy checkpoint: bad layer count");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < n_layers; ++i) {
    detail::expect(in, "shape");
    std::size_t r = 0, c = 0;
    if (!(in >> r >> c) || r == 0 || c == 0) throw format_error("policy checkpoint: bad shape");
    layers.push_back({Matrix(r, c), std::vector<double>(c)});
  }
  PolicyNet p;
  detail::expect(in, "baseline");
  p.baseline.value = detail::parse_real(in);
  if (!(in >> p.baseline.episodes)) throw format_error("policy checkpoint: bad baseline");
  Adam adam;
  detail::expect(in, "adam");
  adam.learning_rate = detail::parse_real(in);
  adam.beta1 = detail::parse_real(in);
  adam.beta2 = detail::parse_real(in);
  adam.epsilon = detail::parse_real(in);
  if (!(in >> adam.step)) throw format_error("policy checkpoint: bad adam step");
  auto load = [&](const char* tag, GradientSet& set) {
    for (auto& l : set) {
      detail::expect(in, tag);
      detail::expect(in, "w");
      detail::read_reals(in, l.weights.data());
      detail::expect(in, tag);
      detail::expect(in, "b");
      detail::read_reals(in, l.biases);
    }
  };
  load("param", layers);
  adam.first_moment = zeros_like(layers);
  adam.second_moment = zeros_like(layers);
  load("m1", adam.first_moment);
  load("m2", adam.second_moment);
  p.net = Mlp(std::move(layers), OutputKind::sigmoid);
  if (p.net.output_dim() != 1) throw format_error("policy checkpoint: output width must be 1");
  p.optimizer = std::move(adam);
  return p;
}

inline void save_policy(const std::string& path, const PolicyNet& policy) {
  std::ofstream out(path);
  if (!out) throw input_error("save_policy: cannot open " + path);
  write_policy(out, policy);
}

inline PolicyNet load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("load_policy: cannot open " + path);
  return read_policy(in);
}

}  // namespace ndf
