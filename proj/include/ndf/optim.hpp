#pragma once

#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "ndf/errors.hpp"
#include "ndf/mlp.hpp"

namespace ndf {

/// v <- mu*v - lr*g;  w <- w + v
struct MomentumSgd {
  double learning_rate = 0.01;
  double momentum = 0.9;
  GradientSet velocity;
};

/// Bias-corrected Adam, minimizing.
struct Adam {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  GradientSet first_moment;
  GradientSet second_moment;
};

using OptimizerState = std::variant<MomentumSgd, Adam>;

inline OptimizerState make_momentum(const std::vector<Layer>& params, double lr, double momentum = 0.9) {
  return MomentumSgd{lr, momentum, zeros_like(params)};
}

inline OptimizerState make_adam(const std::vector<Layer>& params, double lr = 1e-3) {
  Adam a;
  a.learning_rate = lr;
  a.first_moment = zeros_like(params);
  a.second_moment = zeros_like(params);
  return a;
}

namespace detail {

inline void check_finite(const std::vector<Layer>& params) {
  for (const auto& l : params) {
    if (!all_finite(l.weights.data()) || !all_finite(l.biases)) {
      throw numeric_error("optimizer_step: non-finite parameter after update");
    }
  }
}

inline void step_impl(std::vector<Layer>& params, const GradientSet& grads, MomentumSgd& s) {
  if (!same_shapes(s.velocity, params)) throw shape_error("optimizer_step: velocity shape mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto apply = [&](std::span<double> w, std::span<double> v, std::span<const double> g) {
      for (std::size_t k = 0; k < w.size(); ++k) {
        v[k] = s.momentum * v[k] - s.learning_rate * g[k];
        w[k] += v[k];
      }
    };
    apply(params[i].weights.data(), s.velocity[i].weights.data(), grads[i].weights.data());
    apply(params[i].biases, s.velocity[i].biases, grads[i].biases);
  }
}

inline void step_impl(std::vector<Layer>& params, const GradientSet& grads, Adam& s) {
  if (!same_shapes(s.first_moment, params) || !same_shapes(s.second_moment, params)) {
    throw shape_error("optimizer_step: moment shape mismatch");
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto apply = [&](std::span<double> w, std::span<double> m, std::span<double> v,
                     std::span<const double> g) {
      for (std::size_t k = 0; k < w.size(); ++k) {
        m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * g[k];
        v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * g[k] * g[k];
        const double mhat = m[k] / c1;
        const double vhat = v[k] / c2;
        w[k] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
      }
    };
    apply(params[i].weights.data(), s.first_moment[i].weights.data(),
          s.second_moment[i].weights.data(), grads[i].weights.data());
    apply(params[i].biases, s.first_moment[i].biases, s.second_moment[i].biases, grads[i].biases);
  }
}

}  // namespace detail

/// One descent step on params in place.
inline void optimizer_step(std::vector<Layer>& params, const GradientSet& grads, OptimizerState& state) {
  if (!same_shapes(params, grads)) throw shape_error("optimizer_step: gradient shape mismatch");
  std::visit([&](auto& s) { detail::step_impl(params, grads, s); }, state);
  detail::check_finite(params);
}

inline void optimizer_step(Mlp& model, const GradientSet& grads, OptimizerState& state) {
  optimizer_step(model.layers(), grads, state);
}

}  // namespace ndf
