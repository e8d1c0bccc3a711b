#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "seps/nn/adam.hpp"
#include "seps/trainer/rollout.hpp"

namespace seps::trainer {

struct A2cConfig {
  double gamma = 0.99;
  double entropy_coef = 1e-2;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  bool bootstrap_time_limits = true;  // horizon cut-offs bootstrap from V(final obs)
};

/// Per-network gradient accumulators, indexed like PolicySet networks.
struct A2cGradients {
  std::vector<std::vector<double>> actor, critic;
};

struct A2cStats {
  double policy_loss = 0.0;  // mean over agent-steps of -log pi(a|o) * A
  double value_loss = 0.0;   // mean over agent-steps of (V - y)^2
  double entropy = 0.0;      // mean policy entropy
  std::vector<double> actor_grad_norms, critic_grad_norms;  // pre-clip, filled by apply_gradients
};

struct A2cResult {
  A2cGradients grads;
  A2cStats stats;
};

/// Gradients of sum_i mean_{t,e} [ -log pi(a|o) A + c_v (V - y)^2 - c_H H(pi) ]
/// with A = y - V_collected held constant. Agents sharing a network add
/// into the same accumulator.
inline A2cResult a2c_losses(const PolicySet& policies, const RolloutBatch& b, const A2cConfig& cfg) {
  const std::size_t N = b.n_agents, slots = b.n_steps * b.n_envs;
  const double w = 1.0 / static_cast<double>(slots);
  const std::vector<double> y = compute_returns(b, cfg.gamma, cfg.bootstrap_time_limits);

  A2cResult out;
  const std::size_t K = policies.policy_count();
  out.grads.actor.resize(K);
  out.grads.critic.resize(K);
  double pl = 0.0, vl = 0.0, ent = 0.0;

  for (std::size_t k = 0; k < K; ++k) {
    const auto& group = policies.groups()[k];
    const auto& actor = policies.actor(k);
    const auto& critic = policies.critic(k);
    const nn::Matrix xk = detail::gather_rows(b.inputs, slots, N, group);
    nn::ForwardRecord arec, crec;
    const nn::Matrix& logits = actor.forward(xk, arec);
    const nn::Matrix& values = critic.forward(xk, crec);

    nn::Matrix glogits = nn::Matrix::Zero(logits.rows(), logits.cols());
    nn::Matrix gvalues(values.rows(), 1);
    std::vector<double> probs(static_cast<std::size_t>(logits.cols()));
    for (std::size_t s = 0; s < slots; ++s)
      for (std::size_t j = 0; j < group.size(); ++j) {
        const auto r = static_cast<Eigen::Index>(s * group.size() + j);
        const std::size_t src = s * N + group[j];
        const std::size_t valid = policies.valid_actions(group[j]);
        const auto lg = detail::row_span(logits, r);
        nn::softmax(lg, valid, probs);
        const auto a = static_cast<std::size_t>(b.actions[src]);
        const double adv = y[src] - b.values[src];
        const double h = nn::categorical_entropy(probs);
        const double logp = nn::log_softmax_at(lg, valid, a);
        pl += -logp * adv;
        ent += h;
        const double v = values(r, 0);
        vl += (v - y[src]) * (v - y[src]);

        // d/dlogit_j of -log p_a * A  = A (p_j - [j=a]);  of -H = p_j (log p_j + H)
        for (std::size_t jj = 0; jj < valid; ++jj) {
          const double p = probs[jj];
          double g = adv * (p - (jj == a ? 1.0 : 0.0));
          if (p > 0.0) g += cfg.entropy_coef * p * (std::log(p) + h);
          glogits(r, static_cast<Eigen::Index>(jj)) = w * g;
        }
        gvalues(r, 0) = w * 2.0 * cfg.value_coef * (v - y[src]);
      }

    out.grads.actor[k].assign(actor.parameter_count(), 0.0);
    out.grads.critic[k].assign(critic.parameter_count(), 0.0);
    actor.backward(arec, glogits, out.grads.actor[k]);
    critic.backward(crec, gvalues, out.grads.critic[k]);
  }

  const double rows = static_cast<double>(b.rows());
  out.stats.policy_loss = pl / rows;
  out.stats.value_loss = vl / rows;
  out.stats.entropy = ent / rows;
  if (!std::isfinite(out.stats.policy_loss) || !std::isfinite(out.stats.value_loss) ||
      !std::isfinite(out.stats.entropy)) {
    std::ostringstream msg;
    msg << "a2c: non-finite loss (policy " << out.stats.policy_loss << ", value " << out.stats.value_loss
        << ", entropy " << out.stats.entropy << ") on a batch of " << b.n_steps << " steps x " << b.n_envs
        << " envs x " << b.n_agents << " agents; inputs finite: " << (nn::all_finite(std::span<const double>(
                                                                           b.inputs.data(), b.inputs.size()))
                                                                           ? "yes"
                                                                           : "no")
        << ", rewards finite: " << (nn::all_finite(b.rewards) ? "yes" : "no");
    throw NumericError(msg.str());
  }
  return out;
}

inline A2cResult a2c_losses(const PolicySet& policies, const RolloutBatch& b, double gamma, double entropy_coef) {
  A2cConfig cfg;
  cfg.gamma = gamma;
  cfg.entropy_coef = entropy_coef;
  return a2c_losses(policies, b, cfg);
}

/// Clips each network's gradient to `max_grad_norm` and takes one Adam step.
inline void apply_gradients(PolicySet& policies, A2cResult& res, double max_grad_norm) {
  const std::size_t K = policies.policy_count();
  res.stats.actor_grad_norms.assign(K, 0.0);
  res.stats.critic_grad_norms.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    res.stats.actor_grad_norms[k] = nn::clip_global_norm(res.grads.actor[k], max_grad_norm);
    res.stats.critic_grad_norms[k] = nn::clip_global_norm(res.grads.critic[k], max_grad_norm);
    nn::adam_step(policies.actor_optimizer(k), policies.actor(k).parameters(), res.grads.actor[k]);
    nn::adam_step(policies.critic_optimizer(k), policies.critic(k).parameters(), res.grads.critic[k]);
  }
}

}  // namespace seps::trainer
