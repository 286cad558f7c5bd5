#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "ndf/errors.hpp"

namespace ndf {

/// Training-progress summary fed into every state vector.
struct ModelHistory {
  std::size_t iteration = 0;        ///< mini-batches consumed, saturating at horizon
  std::size_t horizon = 1;          ///< T'
  std::size_t instances_seen = 0;
  double running_mean_loss = 0.0;   ///< mean of every per-instance loss seen so far
  double latest_dev_accuracy = 0.0;
};

/// Layout for C classes (2C + 5 entries):
///   [0, C)      one-hot label
///   [C, 2C)     predicted class probabilities
///   2C          instance loss, min(l, 2 ln C) / (2 ln C)
///   2C + 1      margin p(y) - max_{y' != y} p(y')
///   2C + 2      iteration / horizon
///   2C + 3      running mean loss, normalized like the instance loss
///   2C + 4      latest dev accuracy
inline constexpr std::size_t state_feature_dim(std::size_t num_classes) noexcept {
  return 2 * num_classes + 5;
}

inline double loss_cap(std::size_t num_classes) noexcept {
  return 2.0 * std::log(static_cast<double>(num_classes));
}

inline double normalized_loss(double loss, std::size_t num_classes) noexcept {
  const double cap = loss_cap(num_classes);
  return std::clamp(loss, 0.0, cap) / cap;
}

inline double margin(std::span<const double> probs, std::size_t label) noexcept {
  double best_other = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (c != label) best_other = std::max(best_other, probs[c]);
  }
  return probs[label] - best_other;
}

/// Writes the state vector of one instance into out (length 2C + 5).
inline void featurize_into(std::size_t label, std::span<const double> probs, double loss,
                           const ModelHistory& history, std::span<double> out) {
  const std::size_t c = probs.size();
  if (c < 2) throw shape_error("featurize: need at least two class probabilities");
  if (label >= c) throw shape_error("featurize: label outside prediction vector");
  if (out.size() != state_feature_dim(c)) throw shape_error("featurize: output length != 2C+5");
  std::fill(out.begin(), out.end(), 0.0);
  out[label] = 1.0;
  std::copy(probs.begin(), probs.end(), out.begin() + static_cast<std::ptrdiff_t>(c));
  out[2 * c] = normalized_loss(loss, c);
  out[2 * c + 1] = margin(probs, label);
  const double horizon = static_cast<double>(std::max<std::size_t>(history.horizon, 1));
  out[2 * c + 2] = std::min(static_cast<double>(history.iteration), horizon) / horizon;
  out[2 * c + 3] = normalized_loss(history.running_mean_loss, c);
  out[2 * c + 4] = history.latest_dev_accuracy;
}

inline std::vector<double> featurize(std::size_t label, std::span<const double> probs, double loss,
                                     const ModelHistory& history) {
  std::vector<double> out(state_feature_dim(probs.size()));
  featurize_into(label, probs, loss, history, out);
  return out;
}

inline ModelHistory update_history(ModelHistory h, std::span<const double> batch_losses,
                                   std::optional<double> dev_accuracy = std::nullopt) {
  if (batch_losses.empty()) throw input_error("update_history: no losses");
  double sum = 0.0;
  for (double l : batch_losses) sum += l;
  const double n_old = static_cast<double>(h.instances_seen);
  const double n_new = static_cast<double>(batch_losses.size());
  h.running_mean_loss = (h.running_mean_loss * n_old + sum) / (n_old + n_new);
  h.instances_seen += batch_losses.size();
  h.iteration = std::min(h.iteration + 1, h.horizon);
  if (dev_accuracy) h.latest_dev_accuracy = *dev_accuracy;
  return h;
}

}  // namespace ndf
