#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cofiner/error.hpp"
#include "cofiner/model.hpp"

namespace cofiner {

struct AdamWConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;  // decoupled

  friend bool operator==(const AdamWConfig&, const AdamWConfig&) = default;
};

template <typename T>
struct BasicOptimizerState {
  AdamWConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;

  BasicOptimizerState() = default;
  explicit BasicOptimizerState(const AdamWConfig& c) : config(c) {}

  void reset() {
    step = 0;
    first_moment.clear();
    second_moment.clear();
  }
};

using OptimizerState = BasicOptimizerState<float>;

// One AdamW step over `params` (bias-corrected Adam, then p *= 1 - lr·wd), then zeroes
// the gradients. Moment buffers are created on first use; tensors appended to the end
// of the list later get fresh buffers. Existing buffers must keep their shapes.
template <typename T>
void adamw_step(std::span<const ParamRef<T>> params, BasicOptimizerState<T>& state) {
  if (state.first_moment.size() > params.size())
    throw ArgumentError("optimizer state tracks more tensors than were passed");
  for (std::size_t k = state.first_moment.size(); k < params.size(); ++k) {
    state.first_moment.emplace_back(params[k].value.size(), T{0});
    state.second_moment.emplace_back(params[k].value.size(), T{0});
  }

  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T lr = static_cast<T>(c.learning_rate);
  const T b1 = static_cast<T>(c.beta1);
  const T b2 = static_cast<T>(c.beta2);
  const T one_minus_b1 = static_cast<T>(1.0 - c.beta1);
  const T one_minus_b2 = static_cast<T>(1.0 - c.beta2);
  const T bc1 = static_cast<T>(1.0 / (1.0 - std::pow(c.beta1, t)));
  const T bc2 = static_cast<T>(1.0 / (1.0 - std::pow(c.beta2, t)));
  const T eps = static_cast<T>(c.epsilon);
  const T decay = static_cast<T>(1.0 - c.learning_rate * c.weight_decay);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto value = params[k].value;
    auto grad = params[k].grad;
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != value.size() || grad.size() != value.size())
      throw ArgumentError("optimizer moment shape does not match parameter");
    for (std::size_t i = 0; i < value.size(); ++i) {
      const T g = grad[i];
      m[i] = b1 * m[i] + one_minus_b1 * g;
      v[i] = b2 * v[i] + one_minus_b2 * g * g;
      const T m_hat = m[i] * bc1;
      const T v_hat = v[i] * bc2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      if (c.weight_decay != 0.0) value[i] *= decay;
      grad[i] = T{0};
    }
  }
}

template <typename T>
void adamw_step(std::vector<ParamRef<T>> params, BasicOptimizerState<T>& state) {
  adamw_step(std::span<const ParamRef<T>>(params), state);
}

}  // namespace cofiner
