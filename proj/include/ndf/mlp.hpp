#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ndf/data.hpp"
#include "ndf/errors.hpp"
#include "ndf/matrix.hpp"
#include "ndf/rng.hpp"

namespace ndf {

/// Weights are (inputs x outputs) so that a batch X (n x inputs) maps to X*W + b.
struct Layer {
  Matrix weights;
  std::vector<double> biases;

  bool operator==(const Layer&) const = default;
};

/// Gradients and optimizer buffers reuse the parameter layout.
using GradientSet = std::vector<Layer>;

inline GradientSet zeros_like(const std::vector<Layer>& layers) {
  GradientSet out;
  out.reserve(layers.size());
  for (const auto& l : layers) {
    out.push_back({Matrix(l.weights.rows(), l.weights.cols()), std::vector<double>(l.biases.size())});
  }
  return out;
}

inline bool same_shapes(const std::vector<Layer>& a, const std::vector<Layer>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].weights.rows() != b[i].weights.rows() || a[i].weights.cols() != b[i].weights.cols() ||
        a[i].biases.size() != b[i].biases.size()) {
      return false;
    }
  }
  return true;
}

enum class OutputKind { softmax, sigmoid };

/// Per-layer outputs of a forward pass; activations[0] is the input.
struct ForwardCache {
  std::vector<Matrix> activations;
  const Matrix& output() const { return activations.back(); }
};

/// Fully connected network: tanh hidden layers, softmax or sigmoid output.
class Mlp {
 public:
  Mlp() = default;

  /// sizes = {inputs, hidden..., outputs}; weights zero.
  explicit Mlp(std::vector<std::size_t> sizes, OutputKind output = OutputKind::softmax)
      : output_(output) {
    if (sizes.size() < 2) throw input_error("Mlp: need at least input and output sizes");
    for (auto s : sizes) {
      if (s == 0) throw input_error("Mlp: zero-width layer");
    }
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      layers_.push_back({Matrix(sizes[i], sizes[i + 1]), std::vector<double>(sizes[i + 1], 0.0)});
    }
  }

  Mlp(std::vector<Layer> layers, OutputKind output) : layers_(std::move(layers)), output_(output) {
    if (layers_.empty()) throw input_error("Mlp: no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].biases.size() != layers_[i].weights.cols()) {
        throw shape_error("Mlp: bias length must equal layer width");
      }
      if (i + 1 < layers_.size() && layers_[i].weights.cols() != layers_[i + 1].weights.rows()) {
        throw shape_error("Mlp: consecutive layer dimensions do not chain");
      }
    }
  }

  std::size_t input_dim() const noexcept { return layers_.front().weights.rows(); }
  std::size_t output_dim() const noexcept { return layers_.back().weights.cols(); }
  OutputKind output_kind() const noexcept { return output_; }

  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  /// Weights ~ U(-scale, scale), biases zero.
  void init_uniform(double scale, Rng& rng) {
    for (auto& l : layers_) {
      for (auto& w : l.weights.data()) w = rng.uniform(-scale, scale);
      std::fill(l.biases.begin(), l.biases.end(), 0.0);
    }
  }

  ForwardCache forward_cached(const Matrix& x) const {
    if (x.cols() != input_dim()) {
      throw shape_error("Mlp::forward: input has " + std::to_string(x.cols()) +
                        " columns, model expects " + std::to_string(input_dim()));
    }
    ForwardCache cache;
    cache.activations.reserve(layers_.size() + 1);
    cache.activations.push_back(x);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Matrix z = matmul(cache.activations.back(), layers_[i].weights);
      add_row_vector(z, layers_[i].biases);
      if (i + 1 < layers_.size()) {
        for (auto& v : z.data()) v = std::tanh(v);
      } else if (output_ == OutputKind::softmax) {
        softmax_rows(z);
      } else {
        for (auto& v : z.data()) v = sigmoid(v);
      }
      cache.activations.push_back(std::move(z));
    }
    return cache;
  }

  Matrix forward(const Matrix& x) const { return std::move(forward_cached(x).activations.back()); }

  /// Backpropagates d(objective)/d(pre-activation of the output layer).
  GradientSet backward(const ForwardCache& cache, Matrix output_delta) const {
    GradientSet grads = zeros_like(layers_);
    Matrix delta = std::move(output_delta);
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const Matrix& input = cache.activations[i];
      grads[i].weights = matmul_tn(input, delta);
      grads[i].biases = column_sums(delta);
      if (i == 0) break;
      Matrix prev = matmul_nt(delta, layers_[i].weights);
      const auto h = cache.activations[i].data();
      auto d = prev.data();
      for (std::size_t k = 0; k < d.size(); ++k) d[k] *= 1.0 - h[k] * h[k];
      delta = std::move(prev);
    }
    return grads;
  }

  static double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }

  static void softmax_rows(Matrix& z) {
    for (std::size_t r = 0; r < z.rows(); ++r) {
      auto row = z.row(r);
      const double mx = *std::max_element(row.begin(), row.end());
      double sum = 0.0;
      for (auto& v : row) {
        v = std::exp(v - mx);
        sum += v;
      }
      for (auto& v : row) v /= sum;
    }
  }

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<Layer> layers_;
  OutputKind output_ = OutputKind::softmax;
};

inline constexpr double kProbabilityFloor = 1e-12;

struct LossAndGrad {
  std::vector<double> losses;  ///< per-instance cross-entropy
  double mean_loss = 0.0;
  GradientSet grads;           ///< gradient of mean_loss
  Matrix probabilities;
};

/// Cross-entropy of a softmax classifier on features/labels.
inline LossAndGrad loss_and_grad(const Mlp& model, const Matrix& features,
                                 std::span<const std::size_t> labels) {
  if (labels.empty()) throw input_error("loss_and_grad: empty batch");
  if (features.rows() != labels.size()) throw shape_error("loss_and_grad: row/label count mismatch");
  if (model.output_kind() != OutputKind::softmax) {
    throw input_error("loss_and_grad: model must have a softmax output");
  }
  const std::size_t classes = model.output_dim();
  for (auto y : labels) {
    if (y >= classes) throw input_error("loss_and_grad: label " + std::to_string(y) + " out of range");
  }
  ForwardCache cache = model.forward_cached(features);
  const Matrix& probs = cache.output();
  const double n = static_cast<double>(labels.size());

  LossAndGrad out;
  out.losses.resize(labels.size());
  Matrix delta = probs;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::max(probs(i, labels[i]), kProbabilityFloor);
    out.losses[i] = -std::log(p);
    total += out.losses[i];
    delta(i, labels[i]) -= 1.0;
  }
  for (auto& d : delta.data()) d /= n;
  out.mean_loss = total / n;
  out.grads = model.backward(cache, std::move(delta));
  out.probabilities = probs;
  return out;
}

inline LossAndGrad loss_and_grad(const Mlp& model, const MiniBatch& batch) {
  std::vector<std::size_t> labels;
  labels.reserve(batch.size());
  for (const auto* inst : batch.instances) labels.push_back(inst->label);
  return loss_and_grad(model, feature_matrix(batch), labels);
}

/// Per-instance cross-entropy plus probabilities, without gradients.
struct Predictions {
  Matrix probabilities;
  std::vector<double> losses;
};

inline Predictions predict(const Mlp& model, const MiniBatch& batch) {
  Predictions out;
  out.probabilities = model.forward(feature_matrix(batch));
  out.losses.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto y = batch[i].label;
    if (y >= out.probabilities.cols()) throw input_error("predict: label out of range");
    out.losses[i] = -std::log(std::max(out.probabilities(i, y), kProbabilityFloor));
  }
  return out;
}

/// Fraction of instances whose argmax class (lowest index on ties) equals the label.
inline double evaluate_accuracy(const Mlp& model, const Dataset& data) {
  if (data.size() == 0) throw input_error("evaluate_accuracy: empty dataset");
  constexpr std::size_t kChunk = 512;
  std::size_t correct = 0;
  std::vector<const LabeledInstance*> rows;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t stop = std::min(data.size(), start + kChunk);
    rows.clear();
    for (std::size_t i = start; i < stop; ++i) rows.push_back(&data[i]);
    const Matrix probs = model.forward(feature_matrix(rows));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (argmax(probs.row(i)) == rows[i]->label) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace ndf
