#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "ndf/errors.hpp"
#include "ndf/matrix.hpp"
#include "ndf/rng.hpp"

namespace ndf {

struct LabeledInstance {
  std::vector<double> features;
  std::size_t label = 0;
  std::uint64_t id = 0;
};

/// Immutable-after-construction collection of instances sharing one feature
/// length and label space.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<LabeledInstance> instances, std::size_t num_classes)
      : instances_(std::move(instances)), num_classes_(num_classes) {
    if (instances_.empty()) throw input_error("Dataset: no instances");
    if (num_classes_ == 0) throw input_error("Dataset: zero classes");
    feature_dim_ = instances_.front().features.size();
    std::unordered_set<std::uint64_t> ids;
    ids.reserve(instances_.size());
    for (const auto& inst : instances_) {
      if (inst.features.size() != feature_dim_) throw shape_error("Dataset: ragged feature length");
      if (inst.label >= num_classes_) throw input_error("Dataset: label out of range");
      if (!ids.insert(inst.id).second) throw input_error("Dataset: duplicate id");
    }
  }

  std::size_t size() const noexcept { return instances_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  const LabeledInstance& operator[](std::size_t i) const noexcept { return instances_[i]; }
  const std::vector<LabeledInstance>& instances() const noexcept { return instances_; }

  auto begin() const noexcept { return instances_.begin(); }
  auto end() const noexcept { return instances_.end(); }

  bool operator==(const Dataset& o) const {
    if (num_classes_ != o.num_classes_ || instances_.size() != o.instances_.size()) return false;
    for (std::size_t i = 0; i < instances_.size(); ++i) {
      const auto& a = instances_[i];
      const auto& b = o.instances_[i];
      if (a.id != b.id || a.label != b.label || a.features != b.features) return false;
    }
    return true;
  }

 private:
  std::vector<LabeledInstance> instances_;
  std::size_t num_classes_ = 0;
  std::size_t feature_dim_ = 0;
};

/// Non-owning ordered group of instances. The referenced dataset must outlive it.
struct MiniBatch {
  std::vector<const LabeledInstance*> instances;
  std::size_t batch_index = 0;

  std::size_t size() const noexcept { return instances.size(); }
  const LabeledInstance& operator[](std::size_t i) const noexcept { return *instances[i]; }
};

inline Matrix feature_matrix(std::span<const LabeledInstance* const> rows) {
  if (rows.empty()) return {};
  const std::size_t dim = rows.front()->features.size();
  Matrix out(rows.size(), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->features.size() != dim) throw shape_error("feature_matrix: ragged rows");
    std::copy(rows[i]->features.begin(), rows[i]->features.end(), out.row(i).begin());
  }
  return out;
}

inline Matrix feature_matrix(const MiniBatch& batch) { return feature_matrix(batch.instances); }

// ---------------------------------------------------------------------------
// MNIST IDX

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& what) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw format_error(what + ": truncated header");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                              static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Reads an IDX image/label pair. Pixels are scaled by 1/255, ids are file positions.
inline Dataset load_mnist(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw input_error("load_mnist: cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw input_error("load_mnist: cannot open " + labels_path);

  if (detail::read_be32(img, images_path) != kIdxImageMagic) {
    throw format_error(images_path + ": bad image magic");
  }
  const std::uint32_t count = detail::read_be32(img, images_path);
  const std::uint32_t rows = detail::read_be32(img, images_path);
  const std::uint32_t cols = detail::read_be32(img, images_path);

  if (detail::read_be32(lab, labels_path) != kIdxLabelMagic) {
    throw format_error(labels_path + ": bad label magic");
  }
  const std::uint32_t label_count = detail::read_be32(lab, labels_path);
  if (label_count != count) {
    throw format_error("load_mnist: " + std::to_string(count) + " images but " +
                       std::to_string(label_count) + " labels");
  }
  if (count == 0) throw format_error(images_path + ": zero images");

  const std::size_t pixels = std::size_t{rows} * cols;
  std::vector<unsigned char> pix(pixels * count);
  if (!img.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(pix.size()))) {
    throw format_error(images_path + ": truncated pixel data");
  }
  std::vector<unsigned char> labels(count);
  if (!lab.read(reinterpret_cast<char*>(labels.data()), count)) {
    throw format_error(labels_path + ": truncated label data");
  }

  std::vector<LabeledInstance> out(count);
  std::size_t num_classes = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& inst = out[i];
    inst.features.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p) inst.features[p] = pix[i * pixels + p] / 255.0;
    inst.label = labels[i];
    inst.id = i;
    num_classes = std::max<std::size_t>(num_classes, inst.label + 1);
  }
  return Dataset(std::move(out), std::max<std::size_t>(num_classes, 10));
}

/// Writes raw bytes in IDX layout; the inverse of load_mnist up to the /255 scaling.
inline void write_mnist(const std::string& images_path, const std::string& labels_path,
                        std::uint32_t rows, std::uint32_t cols,
                        std::span<const std::uint8_t> pixels, std::span<const std::uint8_t> labels) {
  if (pixels.size() != std::size_t{rows} * cols * labels.size()) {
    throw shape_error("write_mnist: pixel count does not match labels x rows x cols");
  }
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw input_error("write_mnist: cannot open output");
  detail::write_be32(img, kIdxImageMagic);
  detail::write_be32(img, static_cast<std::uint32_t>(labels.size()));
  detail::write_be32(img, rows);
  detail::write_be32(img, cols);
  img.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  detail::write_be32(lab, kIdxLabelMagic);
  detail::write_be32(lab, static_cast<std::uint32_t>(labels.size()));
  lab.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Isotropic Gaussian blobs; centers are uniform in [-1, 1]^dim. Instances are
/// laid out class-major with sequential ids.
inline Dataset generate_blobs(std::size_t num_classes, std::size_t per_class,
                              std::size_t feature_dim, double spread, std::uint64_t seed) {
  if (num_classes == 0 || per_class == 0 || feature_dim == 0) {
    throw input_error("generate_blobs: counts must be positive");
  }
  Rng center_rng(derive_seed(seed, 0));
  Rng sample_rng(derive_seed(seed, 1));
  std::vector<std::vector<double>> centers(num_classes, std::vector<double>(feature_dim));
  for (auto& c : centers) {
    for (auto& x : c) x = center_rng.uniform(-1.0, 1.0);
  }
  std::vector<LabeledInstance> out;
  out.reserve(num_classes * per_class);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      LabeledInstance inst;
      inst.features = centers[c];
      for (auto& x : inst.features) x += spread * sample_rng.normal();
      inst.label = c;
      inst.id = out.size();
      out.push_back(std::move(inst));
    }
  }
  return Dataset(std::move(out), num_classes);
}

// ---------------------------------------------------------------------------
// Splits and streaming

struct SplitSpec {
  std::size_t ndf_subset_size = 0;
  std::size_t dev_size = 0;
  std::uint64_t seed = 0;
};

struct SplitResult {
  Dataset train;      ///< D'_train
  Dataset dev;        ///< D'_dev
  std::vector<LabeledInstance> remainder;  ///< D \ D'; may be empty
};

inline SplitResult split(const Dataset& data, const SplitSpec& spec) {
  if (spec.dev_size == 0 || spec.dev_size >= spec.ndf_subset_size ||
      spec.ndf_subset_size > data.size()) {
    throw input_error("split: need 0 < dev_size < ndf_subset_size <= |D| (got dev " +
                      std::to_string(spec.dev_size) + ", subset " +
                      std::to_string(spec.ndf_subset_size) + ", |D| " +
                      std::to_string(data.size()) + ")");
  }
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(perm));

  std::vector<LabeledInstance> dev;
  std::vector<LabeledInstance> train;
  std::vector<LabeledInstance> rest;
  dev.reserve(spec.dev_size);
  train.reserve(spec.ndf_subset_size - spec.dev_size);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const auto& inst = data[perm[i]];
    if (i < spec.dev_size) {
      dev.push_back(inst);
    } else if (i < spec.ndf_subset_size) {
      train.push_back(inst);
    } else {
      rest.push_back(inst);
    }
  }
  return {Dataset(std::move(train), data.num_classes()), Dataset(std::move(dev), data.num_classes()),
          std::move(rest)};
}

/// One epoch of shuffled, disjoint, size-M batches; a trailing partial batch is dropped.
inline std::vector<MiniBatch> epoch_stream(const Dataset& data, std::size_t batch_size,
                                           std::uint64_t epoch_seed) {
  if (batch_size == 0) throw input_error("epoch_stream: batch size must be positive");
  if (batch_size > data.size()) throw input_error("epoch_stream: batch size exceeds dataset");
  std::vector<const LabeledInstance*> order;
  order.reserve(data.size());
  for (const auto& inst : data) order.push_back(&inst);
  Rng rng(epoch_seed);
  rng.shuffle(std::span<const LabeledInstance*>(order));

  const std::size_t n_batches = data.size() / batch_size;
  std::vector<MiniBatch> out(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    out[b].batch_index = b;
    out[b].instances.assign(order.begin() + static_cast<std::ptrdiff_t>(b * batch_size),
                            order.begin() + static_cast<std::ptrdiff_t>((b + 1) * batch_size));
  }
  return out;
}

}  // namespace ndf
