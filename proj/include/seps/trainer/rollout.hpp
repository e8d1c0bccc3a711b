#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "seps/envs/vector_env.hpp"
#include "seps/nn/distributions.hpp"
#include "seps/trainer/policy_set.hpp"

namespace seps::trainer {

/// n steps of E environments for N agents. Row r = (t*E + e)*N + i.
struct RolloutBatch {
  std::size_t n_steps = 0, n_envs = 0, n_agents = 0;
  nn::Matrix inputs;                // network inputs o_t (padded, id-conditioned where required)
  std::vector<int> actions;         // per row
  std::vector<double> log_probs;    // per row
  std::vector<double> rewards;      // per row
  std::vector<double> values;       // per row, V(o_t) at collection time
  std::vector<char> dones;          // per (t, e): the episode ended with step t
  std::vector<char> truncated;      // per (t, e): ... because the horizon was reached
  std::vector<double> terminal_values;   // per row: V(final observation) where truncated, else 0
  std::vector<double> bootstrap_values;  // per (e, i): V(o_{t+n})

  std::size_t rows() const noexcept { return n_steps * n_envs * n_agents; }
  std::size_t row(std::size_t t, std::size_t e, std::size_t i) const noexcept {
    return (t * n_envs + e) * n_agents + i;
  }
  bool done(std::size_t t, std::size_t e) const { return dones[t * n_envs + e] != 0; }
  bool was_truncated(std::size_t t, std::size_t e) const {
    return !truncated.empty() && truncated[t * n_envs + e] != 0;
  }
};

namespace detail {

/// Rows of `x` (laid out slot-major, N agents per slot) belonging to `group`.
inline nn::Matrix gather_rows(const nn::Matrix& x, std::size_t slots, std::size_t n_agents,
                              const std::vector<std::size_t>& group) {
  if (group.size() == n_agents) return x;  // every agent: already in order
  nn::Matrix out(static_cast<Eigen::Index>(slots * group.size()), x.cols());
  for (std::size_t s = 0; s < slots; ++s)
    for (std::size_t j = 0; j < group.size(); ++j)
      out.row(static_cast<Eigen::Index>(s * group.size() + j)) = x.row(static_cast<Eigen::Index>(s * n_agents + group[j]));
  return out;
}

inline std::span<const double> row_span(const nn::Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<double> row_span(nn::Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace detail

struct ActOutput {
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> values;  // empty unless requested
};

/// One decision for every (slot, agent) row of `x`. Greedy mode takes the
/// arg-max over valid logits; otherwise samples from the masked softmax.
inline ActOutput act(const PolicySet& policies, const nn::Matrix& x, std::size_t slots, Rng& rng, bool greedy,
                     bool with_values) {
  const std::size_t n = policies.n_agents();
  ActOutput out;
  out.actions.assign(slots * n, 0);
  out.log_probs.assign(slots * n, 0.0);
  if (with_values) out.values.assign(slots * n, 0.0);
  for (std::size_t k = 0; k < policies.policy_count(); ++k) {
    const auto& group = policies.groups()[k];
    const nn::Matrix xk = detail::gather_rows(x, slots, n, group);
    const nn::Matrix logits = policies.actor(k).forward(xk);
    nn::Matrix values;
    if (with_values) values = policies.critic(k).forward(xk);
    for (std::size_t s = 0; s < slots; ++s)
      for (std::size_t j = 0; j < group.size(); ++j) {
        const auto r = static_cast<Eigen::Index>(s * group.size() + j);
        const std::size_t dst = s * n + group[j];
        const std::size_t valid = policies.valid_actions(group[j]);
        auto lg = detail::row_span(logits, r);
        if (greedy) {
          const std::size_t a = nn::argmax(lg, valid);
          out.actions[dst] = static_cast<int>(a);
          out.log_probs[dst] = nn::log_softmax_at(lg, valid, a);
        } else {
          const auto smp = nn::softmax_categorical(lg, rng, valid);
          out.actions[dst] = static_cast<int>(smp.action);
          out.log_probs[dst] = smp.log_prob;
        }
        if (with_values) out.values[dst] = values(r, 0);
      }
  }
  return out;
}

/// Owns E parallel copies of a task and the observations the next rollout
/// starts from.
///
/// With `stagger`, copy e first plays floor(e*T/E) uniformly random steps
/// (not counted, not trained on) so the copies reach their episode
/// boundaries at different times. Otherwise, whenever n divides T every
/// copy truncates inside the same batch and the critic sees long runs of
/// purely bootstrapped targets followed by one truncated batch.
class RolloutRunner {
 public:
  RolloutRunner(const envs::Environment& task, std::size_t n_envs, std::uint64_t seed, bool stagger = true)
      : env_(task, n_envs, seed), obs_(env_.reset()) {
    if (!stagger) return;
    const auto& spec = env_.spec();
    Rng rng(derive_seed(seed, 0x5747));
    envs::JointAction a(spec.n_agents);
    for (std::size_t e = 1; e < n_envs; ++e)
      for (std::size_t t = 0; t < e * spec.horizon / n_envs; ++t) {
        for (std::size_t i = 0; i < spec.n_agents; ++i)
          a[i] = static_cast<int>(uniform_index(rng, spec.action_counts[i]));
        obs_[e] = env_.step_one(e, a);
      }
  }

  envs::VectorEnv& env() noexcept { return env_; }
  const std::vector<std::vector<envs::Observation>>& observations() const noexcept { return obs_; }
  std::size_t env_steps() const noexcept { return env_steps_; }
  /// Sum over agents of each finished training episode's return, in finishing order.
  const std::vector<double>& finished_returns() const noexcept { return finished_; }
  void clear_finished_returns() { finished_.clear(); }

  nn::Matrix current_inputs(const PolicySet& policies) const {
    const std::size_t n = policies.n_agents();
    nn::Matrix x(static_cast<Eigen::Index>(env_.size() * n), static_cast<Eigen::Index>(policies.input_width()));
    for (std::size_t e = 0; e < env_.size(); ++e)
      for (std::size_t i = 0; i < n; ++i)
        policies.write_input(obs_[e][i], i, detail::row_span(x, static_cast<Eigen::Index>(e * n + i)));
    return x;
  }

  RolloutBatch collect(const PolicySet& policies, std::size_t n_steps, Rng& rng, bool greedy = false) {
    const std::size_t E = env_.size(), N = policies.n_agents(), W = policies.input_width();
    if (env_.spec().n_agents != N) throw ContractViolation("collect_rollout: policy set and task disagree on N");
    if (n_steps == 0) throw ContractViolation("collect_rollout: n must be positive");
    if (running_.empty()) running_.assign(E, 0.0);

    RolloutBatch b;
    b.n_steps = n_steps;
    b.n_envs = E;
    b.n_agents = N;
    b.inputs.resize(static_cast<Eigen::Index>(n_steps * E * N), static_cast<Eigen::Index>(W));
    b.actions.resize(b.rows());
    b.log_probs.resize(b.rows());
    b.rewards.resize(b.rows());
    b.values.resize(b.rows());
    b.dones.assign(n_steps * E, 0);
    b.truncated.assign(n_steps * E, 0);
    b.terminal_values.assign(b.rows(), 0.0);

    std::vector<envs::JointAction> joint(E, envs::JointAction(N));
    for (std::size_t t = 0; t < n_steps; ++t) {
      const nn::Matrix x = current_inputs(policies);
      const ActOutput a = act(policies, x, E, rng, greedy, true);
      const std::size_t base = t * E * N;
      b.inputs.middleRows(static_cast<Eigen::Index>(base), x.rows()) = x;
      for (std::size_t r = 0; r < E * N; ++r) {
        b.actions[base + r] = a.actions[r];
        b.log_probs[base + r] = a.log_probs[r];
        b.values[base + r] = a.values[r];
        joint[r / N][r % N] = a.actions[r];
      }
      auto res = env_.step(joint);
      for (std::size_t e = 0; e < E; ++e) {
        for (std::size_t i = 0; i < N; ++i) {
          b.rewards[base + e * N + i] = res.rewards[e][i];
          running_[e] += res.rewards[e][i];
        }
        b.dones[t * E + e] = res.dones[e];
        b.truncated[t * E + e] = res.truncated[e];
        if (res.dones[e]) {
          finished_.push_back(running_[e]);
          running_[e] = 0.0;
        }
      }
      write_terminal_values(policies, res, b.terminal_values.data() + base);
      obs_ = std::move(res.observations);
      env_steps_ += E;
    }

    b.bootstrap_values.assign(E * N, 0.0);
    values_into(policies, current_inputs(policies), E, b.bootstrap_values.data());
    return b;
  }

 private:
  /// Critic values for `slots` x N stacked inputs, written to out[s*N + i].
  static void values_into(const PolicySet& policies, const nn::Matrix& x, std::size_t slots, double* out) {
    const std::size_t N = policies.n_agents();
    for (std::size_t k = 0; k < policies.policy_count(); ++k) {
      const auto& group = policies.groups()[k];
      const nn::Matrix v = policies.critic(k).forward(detail::gather_rows(x, slots, N, group));
      for (std::size_t s = 0; s < slots; ++s)
        for (std::size_t j = 0; j < group.size(); ++j)
          out[s * N + group[j]] = v(static_cast<Eigen::Index>(s * group.size() + j), 0);
    }
  }

  /// V of the final observations of episodes cut off by the horizon.
  static void write_terminal_values(const PolicySet& policies, const envs::VectorStepResult& res, double* out) {
    const std::size_t N = policies.n_agents();
    for (std::size_t e = 0; e < res.truncated.size(); ++e) {
      if (!res.truncated[e]) continue;
      nn::Matrix x(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(policies.input_width()));
      for (std::size_t i = 0; i < N; ++i)
        policies.write_input(res.terminal_observations[e][i], i, detail::row_span(x, static_cast<Eigen::Index>(i)));
      values_into(policies, x, 1, out + e * N);
    }
  }

  envs::VectorEnv env_;
  std::vector<std::vector<envs::Observation>> obs_;
  std::vector<double> running_;
  std::vector<double> finished_;
  std::size_t env_steps_ = 0;
};

inline RolloutBatch collect_rollout(const PolicySet& policies, RolloutRunner& runner, std::size_t n_steps, Rng& rng,
                                    bool greedy = false) {
  return runner.collect(policies, n_steps, rng, greedy);
}

/// Targets for one (env, agent) stream: y_t = r_t + gamma*(1-done_t)*y_{t+1},
/// seeded with the bootstrap value after the last step. Where `truncated_values`
/// holds a value for a done step (NaN elsewhere), the episode was cut off by the
/// horizon and y_t = r_t + gamma*value instead.
inline std::vector<double> nstep_returns(std::span<const double> rewards, std::span<const char> dones, double bootstrap,
                                         double gamma, std::span<const double> truncated_values = {}) {
  if (rewards.size() != dones.size()) throw DimensionError("nstep_returns: rewards/dones length mismatch");
  if (!truncated_values.empty() && truncated_values.size() != rewards.size())
    throw DimensionError("nstep_returns: truncated_values length mismatch");
  std::vector<double> y(rewards.size());
  double acc = bootstrap;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    double next = acc;
    if (dones[t]) next = (!truncated_values.empty() && !std::isnan(truncated_values[t])) ? truncated_values[t] : 0.0;
    acc = rewards[t] + gamma * next;
    y[t] = acc;
  }
  return y;
}

/// n-step targets for every row of the batch. With `bootstrap_time_limits`,
/// episodes cut off by the horizon bootstrap from the value of their final
/// observation; genuine terminations always bootstrap from 0.
inline std::vector<double> compute_returns(const RolloutBatch& b, double gamma, bool bootstrap_time_limits = true) {
  std::vector<double> y(b.rows());
  for (std::size_t e = 0; e < b.n_envs; ++e)
    for (std::size_t i = 0; i < b.n_agents; ++i) {
      double acc = b.bootstrap_values[e * b.n_agents + i];
      for (std::size_t t = b.n_steps; t-- > 0;) {
        const std::size_t r = b.row(t, e, i);
        double next = acc;
        if (b.done(t, e)) next = (bootstrap_time_limits && b.was_truncated(t, e)) ? b.terminal_values[r] : 0.0;
        acc = b.rewards[r] + gamma * next;
        y[r] = acc;
      }
    }
  return y;
}

}  // namespace seps::trainer
