#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "seps/errors.hpp"
#include "seps/nn/tensor.hpp"
#include "seps/rng.hpp"

namespace seps::nn {

// ---------------------------------------------------------------- categorical

struct CategoricalSample {
  std::size_t action = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
};

/// Softmax over the first `valid` logits; the rest get probability 0.
/// Max-subtracted, so saturated logits do not overflow.
inline void softmax(std::span<const double> logits, std::size_t valid, std::span<double> probs) {
  if (logits.empty() || valid == 0) throw DimensionError("softmax: empty logits");
  if (valid > logits.size() || probs.size() != logits.size())
    throw DimensionError("softmax: size mismatch");
  const double mx = *std::max_element(logits.begin(), logits.begin() + static_cast<std::ptrdiff_t>(valid));
  double z = 0.0;
  for (std::size_t j = 0; j < valid; ++j) z += (probs[j] = std::exp(logits[j] - mx));
  for (std::size_t j = 0; j < valid; ++j) probs[j] /= z;
  for (std::size_t j = valid; j < probs.size(); ++j) probs[j] = 0.0;
}

/// log-softmax of logit `j` among the first `valid`.
inline double log_softmax_at(std::span<const double> logits, std::size_t valid, std::size_t j) {
  const double mx = *std::max_element(logits.begin(), logits.begin() + static_cast<std::ptrdiff_t>(valid));
  double z = 0.0;
  for (std::size_t k = 0; k < valid; ++k) z += std::exp(logits[k] - mx);
  return logits[j] - mx - std::log(z);
}

inline double categorical_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

inline std::size_t argmax(std::span<const double> logits, std::size_t valid) {
  return static_cast<std::size_t>(
      std::max_element(logits.begin(), logits.begin() + static_cast<std::ptrdiff_t>(valid)) - logits.begin());
}

/// Samples an action from softmax(logits[0..valid)).
inline CategoricalSample softmax_categorical(std::span<const double> logits, Rng& rng,
                                             std::size_t valid = std::numeric_limits<std::size_t>::max()) {
  if (logits.empty()) throw DimensionError("softmax_categorical: empty logits");
  valid = std::min(valid, logits.size());
  require_finite(logits.first(valid), "softmax_categorical");
  std::vector<double> probs(logits.size());
  softmax(logits, valid, probs);

  const double u = uniform01(rng);
  std::size_t a = valid - 1;
  double cum = 0.0;
  for (std::size_t j = 0; j < valid; ++j) {
    cum += probs[j];
    if (u < cum) {
      a = j;
      break;
    }
  }
  return {a, log_softmax_at(logits, valid, a), categorical_entropy(probs)};
}

// ---------------------------------------------------------------- gaussian

struct DiagonalGaussian {
  std::vector<double> mean;
  std::vector<double> log_variance;

  DiagonalGaussian() = default;
  DiagonalGaussian(std::vector<double> m, std::vector<double> lv) : mean(std::move(m)), log_variance(std::move(lv)) {
    if (mean.size() != log_variance.size())
      throw DimensionError("DiagonalGaussian: mean and log-variance lengths differ");
  }
  std::size_t dim() const noexcept { return mean.size(); }
  double variance(std::size_t d) const { return std::exp(log_variance[d]); }
};

/// z = mean + exp(0.5 logvar) * noise. The noise is returned so callers can
/// push gradients back through `reparameterized_backward`.
struct ReparameterizedSample {
  std::vector<double> z;
  std::vector<double> noise;
};

inline ReparameterizedSample gaussian_reparameterized_sample(const DiagonalGaussian& g, Rng& rng) {
  ReparameterizedSample s;
  s.noise.resize(g.dim());
  s.z.resize(g.dim());
  for (std::size_t d = 0; d < g.dim(); ++d) {
    s.noise[d] = standard_normal(rng);
    s.z[d] = g.mean[d] + std::exp(0.5 * g.log_variance[d]) * s.noise[d];
  }
  return s;
}

/// Maps dL/dz to (dL/dmean, dL/dlogvar) for fixed noise.
inline void reparameterized_backward(const DiagonalGaussian& g, std::span<const double> noise,
                                     std::span<const double> grad_z, std::span<double> grad_mean,
                                     std::span<double> grad_log_variance) {
  for (std::size_t d = 0; d < g.dim(); ++d) {
    grad_mean[d] += grad_z[d];
    grad_log_variance[d] += grad_z[d] * 0.5 * std::exp(0.5 * g.log_variance[d]) * noise[d];
  }
}

/// KL(N(mean, diag(exp(logvar))) || N(0, I)).
inline double kl_to_standard_normal(const DiagonalGaussian& g) {
  double kl = 0.0;
  for (std::size_t d = 0; d < g.dim(); ++d) {
    const double lv = g.log_variance[d];
    kl += g.mean[d] * g.mean[d] + std::exp(lv) - lv - 1.0;
  }
  return std::max(0.0, 0.5 * kl);
}

/// Gradient of kl_to_standard_normal, accumulated (+=).
inline void kl_to_standard_normal_backward(const DiagonalGaussian& g, double scale, std::span<double> grad_mean,
                                           std::span<double> grad_log_variance) {
  for (std::size_t d = 0; d < g.dim(); ++d) {
    grad_mean[d] += scale * g.mean[d];
    grad_log_variance[d] += scale * 0.5 * (std::exp(g.log_variance[d]) - 1.0);
  }
}

}  // namespace seps::nn
