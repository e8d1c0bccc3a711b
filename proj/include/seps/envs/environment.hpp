#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "seps/errors.hpp"
#include "seps/rng.hpp"

namespace seps::envs {

using Observation = std::vector<double>;
using JointAction = std::vector<int>;

/// Static description of a partially observable Markov game.
struct MarkovGameSpec {
  std::string name;
  std::size_t n_agents = 0;
  std::vector<std::size_t> obs_dims;       // per agent
  std::vector<std::size_t> action_counts;  // per agent
  std::size_t horizon = 0;
  std::vector<int> ground_truth_types;     // hidden from agents; used by tests and reports

  std::size_t max_obs_dim() const { return *std::max_element(obs_dims.begin(), obs_dims.end()); }
  std::size_t max_action_count() const {
    return *std::max_element(action_counts.begin(), action_counts.end());
  }
  std::size_t type_count() const {
    return std::set<int>(ground_truth_types.begin(), ground_truth_types.end()).size();
  }
  bool heterogeneous_spaces() const {
    return std::adjacent_find(obs_dims.begin(), obs_dims.end(), std::not_equal_to<>()) != obs_dims.end() ||
           std::adjacent_find(action_counts.begin(), action_counts.end(), std::not_equal_to<>()) !=
               action_counts.end();
  }
};

struct StepResult {
  std::vector<Observation> observations;
  std::vector<double> rewards;
  bool done = false;
  bool truncated = false;  // done only because the horizon was reached
};

/// Base class for every task. `reset` seeds the episode RNG; `step` checks
/// the joint action, advances the task and enforces the horizon.
class Environment {
 public:
  virtual ~Environment() = default;

  const MarkovGameSpec& spec() const noexcept { return spec_; }
  std::size_t timestep() const noexcept { return t_; }
  bool episode_live() const noexcept { return live_; }

  std::vector<Observation> reset(std::uint64_t seed) {
    rng_.seed(seed);
    t_ = 0;
    live_ = true;
    return do_reset();
  }

  StepResult step(std::span<const int> joint_action) {
    if (!live_) throw UsageError(spec_.name + ": step called on a finished or un-reset episode");
    if (joint_action.size() != spec_.n_agents)
      throw ContractViolation(spec_.name + ": joint action has " + std::to_string(joint_action.size()) +
                              " entries, expected " + std::to_string(spec_.n_agents));
    for (std::size_t i = 0; i < joint_action.size(); ++i)
      if (joint_action[i] < 0 || static_cast<std::size_t>(joint_action[i]) >= spec_.action_counts[i])
        throw ContractViolation(spec_.name + ": action " + std::to_string(joint_action[i]) + " out of range for agent " +
                                std::to_string(i));
    StepResult r = do_step(joint_action);
    ++t_;
    if (t_ >= spec_.horizon && !r.done) r.done = r.truncated = true;
    live_ = !r.done;
    return r;
  }

  virtual std::vector<Observation> observations() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
  virtual std::string render_ascii() const { return {}; }

 protected:
  explicit Environment(MarkovGameSpec spec) : spec_(std::move(spec)) {}

  virtual std::vector<Observation> do_reset() = 0;
  /// Set `done` only for task-specific termination; the horizon is handled by the base.
  virtual StepResult do_step(std::span<const int> joint_action) = 0;

  MarkovGameSpec spec_;
  Rng rng_;
  std::size_t t_ = 0;
  bool live_ = false;
};

/// Expands a type distribution such as {5,5,5} into per-agent labels 0,0,0,0,0,1,...
inline std::vector<int> expand_types(std::span<const std::size_t> counts) {
  std::vector<int> types;
  for (std::size_t k = 0; k < counts.size(); ++k) types.insert(types.end(), counts[k], static_cast<int>(k));
  return types;
}

/// Near-equal split of n agents over c types, remainder to the first types.
inline std::vector<std::size_t> even_split(std::size_t n, std::size_t c) {
  std::vector<std::size_t> counts(c, n / c);
  for (std::size_t k = 0; k < n % c; ++k) ++counts[k];
  return counts;
}

}  // namespace seps::envs
