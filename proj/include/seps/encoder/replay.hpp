#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "seps/envs/registry.hpp"
#include "seps/envs/vector_env.hpp"
#include "seps/errors.hpp"
#include "seps/nn/tensor.hpp"
#include "seps/rng.hpp"

namespace seps::encoder {

/// One agent-centred transition. Observations are zero-padded to the widest
/// observation in the task; `obs_width` keeps the agent's true width.
struct Transition {
  std::size_t agent_id = 0;
  std::vector<double> obs;
  std::size_t obs_width = 0;
  std::vector<double> action_onehot;
  double reward = 0.0;
  std::vector<double> next_obs;
};

/// Column-stacked minibatch drawn from a SharedReplay.
struct TransitionBatch {
  std::vector<std::size_t> agent_ids;
  nn::Matrix obs, obs_mask, actions, next_obs;
  nn::Vector rewards;

  std::size_t size() const noexcept { return agent_ids.size(); }
};

/// Ring buffer holding transitions from every agent of a task.
class SharedReplay {
 public:
  SharedReplay(std::size_t capacity, std::size_t n_agents, std::size_t obs_width, std::size_t action_width)
      : capacity_(capacity), n_agents_(n_agents), obs_width_(obs_width), action_width_(action_width) {
    if (capacity == 0) throw ContractViolation("SharedReplay: capacity must be positive");
    agent_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  std::size_t size() const noexcept { return agent_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t n_agents() const noexcept { return n_agents_; }
  std::size_t obs_width() const noexcept { return obs_width_; }
  std::size_t action_width() const noexcept { return action_width_; }

  void add(std::size_t agent_id, std::span<const double> obs, std::size_t action, double reward,
           std::span<const double> next_obs) {
    if (agent_id >= n_agents_) throw ContractViolation("SharedReplay: agent id out of range");
    if (obs.size() > obs_width_ || next_obs.size() != obs.size())
      throw DimensionError("SharedReplay: observation width");
    if (action >= action_width_) throw ContractViolation("SharedReplay: action out of range");
    std::size_t slot;
    if (agent_.size() < capacity_) {
      slot = agent_.size();
      agent_.push_back(0);
      width_.push_back(0);
      action_.push_back(0);
      reward_.push_back(0.0);
      obs_.resize(obs_.size() + obs_width_, 0.0);
      next_.resize(next_.size() + obs_width_, 0.0);
    } else {
      slot = cursor_;
    }
    agent_[slot] = agent_id;
    width_[slot] = obs.size();
    action_[slot] = action;
    reward_[slot] = reward;
    std::fill_n(obs_.begin() + static_cast<std::ptrdiff_t>(slot * obs_width_), obs_width_, 0.0);
    std::fill_n(next_.begin() + static_cast<std::ptrdiff_t>(slot * obs_width_), obs_width_, 0.0);
    std::copy(obs.begin(), obs.end(), obs_.begin() + static_cast<std::ptrdiff_t>(slot * obs_width_));
    std::copy(next_obs.begin(), next_obs.end(), next_.begin() + static_cast<std::ptrdiff_t>(slot * obs_width_));
    cursor_ = (slot + 1) % capacity_;
  }

  Transition at(std::size_t k) const {
    Transition t;
    t.agent_id = agent_[k];
    t.obs_width = width_[k];
    t.obs.assign(obs_.begin() + static_cast<std::ptrdiff_t>(k * obs_width_),
                 obs_.begin() + static_cast<std::ptrdiff_t>((k + 1) * obs_width_));
    t.next_obs.assign(next_.begin() + static_cast<std::ptrdiff_t>(k * obs_width_),
                      next_.begin() + static_cast<std::ptrdiff_t>((k + 1) * obs_width_));
    t.action_onehot.assign(action_width_, 0.0);
    t.action_onehot[action_[k]] = 1.0;
    t.reward = reward_[k];
    return t;
  }

  std::vector<std::size_t> agent_counts() const {
    std::vector<std::size_t> counts(n_agents_, 0);
    for (std::size_t a : agent_) ++counts[a];
    return counts;
  }

  bool covers_all_agents() const {
    const auto c = agent_counts();
    return std::none_of(c.begin(), c.end(), [](std::size_t n) { return n == 0; });
  }

  double reward_variance() const {
    if (reward_.empty()) return 0.0;
    double mean = 0.0;
    for (double r : reward_) mean += r;
    mean /= static_cast<double>(reward_.size());
    double var = 0.0;
    for (double r : reward_) var += (r - mean) * (r - mean);
    return var / static_cast<double>(reward_.size());
  }

  TransitionBatch gather(std::span<const std::size_t> indices) const {
    const auto b = static_cast<Eigen::Index>(indices.size());
    const auto w = static_cast<Eigen::Index>(obs_width_);
    TransitionBatch batch;
    batch.agent_ids.resize(indices.size());
    batch.obs.setZero(b, w);
    batch.next_obs.setZero(b, w);
    batch.obs_mask.setZero(b, w);
    batch.actions.setZero(b, static_cast<Eigen::Index>(action_width_));
    batch.rewards.resize(b);
    for (Eigen::Index r = 0; r < b; ++r) {
      const std::size_t k = indices[static_cast<std::size_t>(r)];
      batch.agent_ids[static_cast<std::size_t>(r)] = agent_[k];
      batch.obs.row(r) = nn::ConstVectorMap(obs_.data() + k * obs_width_, w).transpose();
      batch.next_obs.row(r) = nn::ConstVectorMap(next_.data() + k * obs_width_, w).transpose();
      batch.obs_mask.row(r).head(static_cast<Eigen::Index>(width_[k])).setOnes();
      batch.actions(r, static_cast<Eigen::Index>(action_[k])) = 1.0;
      batch.rewards(r) = reward_[k];
    }
    return batch;
  }

  /// Uniform sampling with replacement.
  TransitionBatch sample(std::size_t batch_size, Rng& rng) const {
    if (agent_.empty()) throw UsageError("SharedReplay: sampling from an empty replay");
    std::vector<std::size_t> idx(batch_size);
    for (auto& k : idx) k = uniform_index(rng, agent_.size());
    return gather(idx);
  }

 private:
  std::size_t capacity_, n_agents_, obs_width_, action_width_;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> agent_, width_, action_;
  std::vector<double> reward_, obs_, next_;
};

/// Runs uniformly random policies on `n_envs` copies for `n_steps` vector
/// steps and stores every agent's transition (n_steps * n_envs * N in total,
/// up to the replay capacity).
inline SharedReplay collect_pretraining_data(const envs::Environment& task, std::size_t n_steps, std::uint64_t seed,
                                             std::size_t n_envs = 1, std::size_t capacity = 500'000) {
  if (n_steps == 0) throw ContractViolation("collect_pretraining_data: n_steps must be >= 1");
  const auto& spec = task.spec();
  SharedReplay replay(capacity, spec.n_agents, spec.max_obs_dim(), spec.max_action_count());
  envs::VectorEnv venv(task, n_envs, derive_seed(seed, 1));
  Rng rng(derive_seed(seed, 2));
  auto obs = venv.reset();
  std::vector<envs::JointAction> actions(n_envs, envs::JointAction(spec.n_agents));
  for (std::size_t step = 0; step < n_steps; ++step) {
    for (auto& ja : actions)
      for (std::size_t i = 0; i < spec.n_agents; ++i)
        ja[i] = static_cast<int>(uniform_index(rng, spec.action_counts[i]));
    auto res = venv.step(actions);
    for (std::size_t e = 0; e < n_envs; ++e) {
      const auto& next = res.dones[e] ? res.terminal_observations[e] : res.observations[e];
      for (std::size_t i = 0; i < spec.n_agents; ++i)
        replay.add(i, obs[e][i], static_cast<std::size_t>(actions[e][i]), res.rewards[e][i], next[i]);
    }
    obs = std::move(res.observations);
  }
  return replay;
}

}  // namespace seps::encoder
