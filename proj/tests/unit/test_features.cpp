#include <gtest/gtest.h>

#include <cmath>

#include "ndf/features.hpp"
#include "ndf/rng.hpp"

using namespace ndf;

TEST(Featurize, LayoutForTenClasses) {
  // p(y=3) = 0.7, p(5) = 0.2, the rest share 0.1.
  std::vector<double> p(10, 0.1 / 8);
  p[3] = 0.7;
  p[5] = 0.2;
  ModelHistory h{.iteration = 50, .horizon = 200, .instances_seen = 10, .running_mean_loss = std::log(10.0),
                 .latest_dev_accuracy = 0.42};
  const auto f = featurize(3, p, -std::log(0.7), h);
  ASSERT_EQ(f.size(), 25u);
  for (std::size_t c = 0; c < 10; ++c) EXPECT_EQ(f[c], c == 3 ? 1.0 : 0.0);
  for (std::size_t c = 0; c < 10; ++c) EXPECT_EQ(f[10 + c], p[c]);
  EXPECT_NEAR(f[21], 0.5, 1e-15);  // margin 0.7 - 0.2
  EXPECT_DOUBLE_EQ(f[22], 0.25);
  EXPECT_DOUBLE_EQ(f[23], 0.5);
  EXPECT_DOUBLE_EQ(f[24], 0.42);
}

TEST(Featurize, UniformPrediction) {
  const std::vector<double> p(10, 0.1);
  const auto f = featurize(0, p, std::log(10.0), ModelHistory{});
  EXPECT_DOUBLE_EQ(f[20], 0.5);
  EXPECT_EQ(f[21], 0.0);
}

TEST(Featurize, IterationAtHorizonIsOne) {
  const std::vector<double> p(10, 0.1);
  ModelHistory h;
  h.iteration = h.horizon = 77;
  EXPECT_EQ(featurize(0, p, 0.0, h)[22], 1.0);
}

TEST(Featurize, LossBeyondCapSaturates) {
  const std::vector<double> p{0.5, 0.5};
  EXPECT_EQ(featurize(0, p, 100.0, ModelHistory{})[4], 1.0);
}

TEST(Featurize, WrongPredictionLengthIsShapeError) {
  const std::vector<double> p(3, 1.0 / 3);
  EXPECT_THROW(featurize(3, p, 0.0, ModelHistory{}), shape_error);
  std::vector<double> out(24);
  EXPECT_THROW(featurize_into(0, std::vector<double>(10, 0.1), 0.0, ModelHistory{}, out), shape_error);
}

TEST(Featurize, BoundedAndPureOverRandomInputs) {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const std::size_t c = 2 + rng.below(12);
    std::vector<double> p(c);
    double s = 0;
    for (auto& v : p) s += (v = rng.uniform() + 1e-6);
    for (auto& v : p) v /= s;
    ModelHistory h;
    h.horizon = 1 + rng.below(1000);
    h.iteration = rng.below(h.horizon + 1);
    h.running_mean_loss = rng.uniform(0, 10);
    h.latest_dev_accuracy = rng.uniform();
    const std::size_t y = rng.below(c);
    const double loss = -std::log(p[y]);
    const auto f = featurize(y, p, loss, h);
    ASSERT_EQ(f.size(), 2 * c + 5);
    double ones = 0, psum = 0;
    for (std::size_t k = 0; k < c; ++k) ones += f[k];
    for (std::size_t k = c; k < 2 * c; ++k) psum += f[k];
    EXPECT_EQ(ones, 1.0);
    EXPECT_NEAR(psum, 1.0, 1e-9);
    for (double v : f) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
    for (std::size_t k = 2 * c; k < 2 * c + 5; ++k) {
      if (k != 2 * c + 1) EXPECT_GE(f[k], 0.0);
    }
    EXPECT_EQ(f, featurize(y, p, loss, h));
  }
}

TEST(History, FirstBatch) {
  const std::vector<double> l{2, 4};
  const auto h = update_history(ModelHistory{.horizon = 10}, l);
  EXPECT_EQ(h.running_mean_loss, 3.0);
  EXPECT_EQ(h.iteration, 1u);
}

TEST(History, CumulativeMeanAcrossBatches) {
  auto h = update_history(ModelHistory{.horizon = 10}, std::vector<double>{2, 4});
  h = update_history(h, std::vector<double>{6});
  EXPECT_EQ(h.running_mean_loss, 4.0);
  EXPECT_EQ(h.instances_seen, 3u);
}

TEST(History, DevAccuracyOnlyReplacedWhenGiven) {
  ModelHistory h{.horizon = 10, .latest_dev_accuracy = 0.3};
  h = update_history(h, std::vector<double>{1});
  EXPECT_EQ(h.latest_dev_accuracy, 0.3);
  h = update_history(h, std::vector<double>{1}, 0.8);
  EXPECT_EQ(h.latest_dev_accuracy, 0.8);
}

TEST(History, EmptyLossesRejected) {
  EXPECT_THROW(update_history(ModelHistory{}, std::vector<double>{}), input_error);
}
