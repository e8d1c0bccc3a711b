#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "seps/errors.hpp"
#include "seps/nn/tensor.hpp"

namespace seps::nn {

struct AdamConfig {
  double learning_rate = 3e-4;
  double epsilon = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
};

/// Moments start at zero; step_count increases by one per successful update.
struct AdamState {
  AdamConfig config;
  std::uint64_t step_count = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig cfg)
      : config(cfg), first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}
};

/// Bias-corrected Adam. Non-finite gradients abort the update before any state changes.
inline void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size())
    throw DimensionError("adam_step: gradient/parameter/state sizes differ");
  require_finite(grads, "adam_step");

  const auto& c = state.config;
  const std::uint64_t t = ++state.step_count;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  double* m = state.first_moment.data();
  double* v = state.second_moment.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace seps::nn
