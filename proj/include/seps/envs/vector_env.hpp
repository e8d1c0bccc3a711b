#pragma once

#include <memory>
#include <type_traits>
#include <stdexcept>
#include <string>
#include <vector>

#include "seps/envs/environment.hpp"

namespace seps::envs {

/// Error raised inside one member of a VectorEnv; carries its index.
class EnvIndexedError : public std::runtime_error {
 public:
  EnvIndexedError(std::size_t env_index, const std::string& what)
      : std::runtime_error("env " + std::to_string(env_index) + ": " + what), env_index_(env_index) {}
  std::size_t env_index() const noexcept { return env_index_; }

 private:
  std::size_t env_index_;
};

struct VectorStepResult {
  std::vector<std::vector<Observation>> observations;           // [env][agent], post auto-reset
  std::vector<std::vector<Observation>> terminal_observations;  // [env][agent], filled where done
  std::vector<std::vector<double>> rewards;                     // [env][agent]
  std::vector<char> dones;                                      // [env]
  std::vector<char> truncated;                                  // [env], horizon reached
};

/// E independent copies of one task. Copy e plays episode k with seed
/// episode_seed(seed, e, k); finished episodes restart immediately and the
/// fresh first observation replaces the terminal one.
class VectorEnv {
 public:
  VectorEnv(const Environment& prototype, std::size_t n_envs, std::uint64_t seed) : seed_(seed) {
    if (n_envs == 0) throw ContractViolation("VectorEnv: need at least one environment");
    for (std::size_t e = 0; e < n_envs; ++e) envs_.push_back(prototype.clone());
    episodes_.assign(n_envs, 0);
  }

  static std::uint64_t episode_seed(std::uint64_t seed, std::size_t env_index, std::uint64_t episode) {
    return derive_seed(seed, env_index, episode);
  }

  std::size_t size() const noexcept { return envs_.size(); }
  const MarkovGameSpec& spec() const { return envs_.front()->spec(); }
  const Environment& env(std::size_t e) const { return *envs_[e]; }
  std::uint64_t episode_index(std::size_t e) const { return episodes_[e]; }

  std::vector<std::vector<Observation>> reset() {
    std::vector<std::vector<Observation>> obs(envs_.size());
    for (std::size_t e = 0; e < envs_.size(); ++e) {
      episodes_[e] = 0;
      obs[e] = guarded(e, [&] { return envs_[e]->reset(episode_seed(seed_, e, 0)); });
    }
    return obs;
  }

  VectorStepResult step(const std::vector<JointAction>& actions) {
    if (actions.size() != envs_.size()) throw ContractViolation("VectorEnv: one joint action per environment required");
    VectorStepResult out;
    out.observations.resize(envs_.size());
    out.terminal_observations.resize(envs_.size());
    out.rewards.resize(envs_.size());
    out.dones.assign(envs_.size(), 0);
    out.truncated.assign(envs_.size(), 0);
    for (std::size_t e = 0; e < envs_.size(); ++e) {
      StepResult r = guarded(e, [&] { return envs_[e]->step(actions[e]); });
      out.rewards[e] = std::move(r.rewards);
      if (r.done) {
        out.dones[e] = 1;
        out.truncated[e] = r.truncated;
        out.terminal_observations[e] = std::move(r.observations);
        ++episodes_[e];
        out.observations[e] = guarded(e, [&] { return envs_[e]->reset(episode_seed(seed_, e, episodes_[e])); });
      } else {
        out.observations[e] = std::move(r.observations);
      }
    }
    return out;
  }

  /// Steps copy `e` alone, auto-resetting it at the end of an episode;
  /// returns its next observations.
  std::vector<Observation> step_one(std::size_t e, const JointAction& action) {
    if (e >= envs_.size()) throw ContractViolation("VectorEnv: environment index out of range");
    StepResult r = guarded(e, [&] { return envs_[e]->step(action); });
    if (!r.done) return std::move(r.observations);
    ++episodes_[e];
    return guarded(e, [&] { return envs_[e]->reset(episode_seed(seed_, e, episodes_[e])); });
  }

 private:
  template <typename F>
  std::invoke_result_t<F> guarded(std::size_t e, F&& f) {
    try {
      return f();
    } catch (const EnvIndexedError&) {
      throw;
    } catch (const std::exception& ex) {
      throw EnvIndexedError(e, ex.what());
    }
  }

  std::uint64_t seed_;
  std::vector<std::unique_ptr<Environment>> envs_;
  std::vector<std::uint64_t> episodes_;
};

}  // namespace seps::envs
