#pragma once

#include <filesystem>
#include <vector>

#include "seps/nn/adam.hpp"
#include "seps/nn/checkpoint.hpp"
#include "seps/nn/mlp.hpp"
#include "seps/trainer/scheme.hpp"

namespace seps::trainer {

/// K actor-critic pairs plus the agent -> network map. Agents mapped to the
/// same index read and update the very same parameter storage.
class PolicySet {
 public:
  PolicySet(const envs::MarkovGameSpec& spec, SharingScheme scheme, std::size_t width, nn::AdamConfig adam, Rng& rng)
      : scheme_(std::move(scheme)),
        n_agents_(spec.n_agents),
        obs_width_(spec.max_obs_dim()),
        action_width_(spec.max_action_count()),
        valid_actions_(spec.action_counts),
        mu_(scheme_.policy_map(spec.n_agents)),
        width_(scheme_.hidden_width(width, spec)) {
    const std::size_t k = scheme_.policy_count(n_agents_);
    groups_.assign(k, {});
    for (std::size_t i = 0; i < n_agents_; ++i) groups_[mu_[i]].push_back(i);
    for (std::size_t p = 0; p < k; ++p) {
      actors_.emplace_back(std::vector<std::size_t>{input_width(), width_, width_, action_width_});
      critics_.emplace_back(std::vector<std::size_t>{input_width(), width_, width_, 1});
      actors_.back().initialize(rng, 0.01);
      critics_.back().initialize(rng, 1.0);
      actor_opts_.emplace_back(actors_.back().parameter_count(), adam);
      critic_opts_.emplace_back(critics_.back().parameter_count(), adam);
    }
  }

  const SharingScheme& scheme() const noexcept { return scheme_; }
  std::size_t n_agents() const noexcept { return n_agents_; }
  std::size_t policy_count() const noexcept { return actors_.size(); }
  std::size_t obs_width() const noexcept { return obs_width_; }
  std::size_t action_width() const noexcept { return action_width_; }
  std::size_t hidden_width() const noexcept { return width_; }
  std::size_t input_width() const noexcept { return obs_width_ + (scheme_.id_conditioned() ? n_agents_ : 0); }
  std::size_t valid_actions(std::size_t agent) const { return valid_actions_[agent]; }
  const std::vector<std::size_t>& mu() const noexcept { return mu_; }
  const std::vector<std::vector<std::size_t>>& groups() const noexcept { return groups_; }

  nn::MlpNetwork& actor(std::size_t k) { return actors_[k]; }
  nn::MlpNetwork& critic(std::size_t k) { return critics_[k]; }
  const nn::MlpNetwork& actor(std::size_t k) const { return actors_[k]; }
  const nn::MlpNetwork& critic(std::size_t k) const { return critics_[k]; }
  nn::AdamState& actor_optimizer(std::size_t k) { return actor_opts_[k]; }
  nn::AdamState& critic_optimizer(std::size_t k) { return critic_opts_[k]; }

  const nn::MlpNetwork& actor_of(std::size_t agent) const { return actors_[mu_[agent]]; }

  std::size_t trainable_parameter_count() const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < actors_.size(); ++k) n += actors_[k].parameter_count() + critics_[k].parameter_count();
    return n;
  }

  void write_input(std::span<const double> obs, std::size_t agent, std::span<double> row) const {
    id_condition(obs, agent, n_agents_, obs_width_, scheme_.id_conditioned(), row);
  }

  /// actor_<k>.bin and critic_<k>.bin for every network k.
  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < actors_.size(); ++k) {
      nn::save_checkpoint(dir / ("actor_" + std::to_string(k) + ".bin"), actors_[k]);
      nn::save_checkpoint(dir / ("critic_" + std::to_string(k) + ".bin"), critics_[k]);
    }
  }

  void load(const std::filesystem::path& dir) {
    for (std::size_t k = 0; k < actors_.size(); ++k) {
      auto a = nn::load_checkpoint(dir / ("actor_" + std::to_string(k) + ".bin"));
      auto c = nn::load_checkpoint(dir / ("critic_" + std::to_string(k) + ".bin"));
      if (a.layer_sizes() != actors_[k].layer_sizes() || c.layer_sizes() != critics_[k].layer_sizes())
        throw DimensionError("PolicySet::load: checkpoint layer sizes do not match");
      actors_[k] = std::move(a);
      critics_[k] = std::move(c);
    }
  }

 private:
  SharingScheme scheme_;
  std::size_t n_agents_, obs_width_, action_width_;
  std::vector<std::size_t> valid_actions_;
  std::vector<std::size_t> mu_;
  std::size_t width_;
  std::vector<std::vector<std::size_t>> groups_;
  std::vector<nn::MlpNetwork> actors_, critics_;
  std::vector<nn::AdamState> actor_opts_, critic_opts_;
};

}  // namespace seps::trainer
