#pragma once

#include <filesystem>
#include <fstream>

#include "seps/encoder/embeddings_io.hpp"
#include "seps/encoder/replay.hpp"
#include "seps/envs/registry.hpp"
#include "seps/experiment/config.hpp"
#include "seps/partition/select.hpp"

namespace seps::experiment {

/// Independent-network training above this many agents is refused unless
/// explicitly allowed.
inline constexpr std::size_t kMaxNopsAgents = 100;

inline void check_resources(const envs::MarkovGameSpec& spec, trainer::Scheme scheme, bool allow_large_nops) {
  if (scheme == trainer::Scheme::NoPS && spec.n_agents > kMaxNopsAgents && !allow_large_nops)
    throw ResourceRefusal("refusing NoPS on " + spec.name + ": " + std::to_string(spec.n_agents) +
                          " agents would need " + std::to_string(2 * spec.n_agents) +
                          " separate networks and optimizers; set allow_large_nops=1 to run anyway");
}

struct PretrainOutput {
  encoder::EncoderDecoderModel model;
  std::vector<nn::DiagonalGaussian> embeddings;
  encoder::PretrainResult curve;
};

/// Random-policy data collection, encoder-decoder training and per-agent
/// embeddings for one seed.
inline PretrainOutput run_pretraining(const envs::Environment& task, const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::size_t envs_n = std::max<std::size_t>(1, cfg.pretrain_envs);
  const std::size_t vector_steps = std::max<std::size_t>(1, cfg.pretrain_steps / envs_n);
  const encoder::SharedReplay replay =
      encoder::collect_pretraining_data(task, vector_steps, derive_seed(seed, 11), envs_n, cfg.replay_capacity);
  const auto& spec = task.spec();
  PretrainOutput out{encoder::EncoderDecoderModel(spec.n_agents, spec.max_obs_dim(), spec.max_action_count(),
                                                  cfg.encoder_config()),
                     {},
                     {}};
  Rng rng(derive_seed(seed, 12));
  out.model.initialize(rng);
  out.curve = encoder::pretrain(out.model, replay, cfg.pretrain_updates, cfg.encoder_batch, rng);
  out.embeddings = encoder::embed_agents(out.model);
  return out;
}

/// Davies-Bouldin selection over K = 2..k_max, or kmeans at forced_k.
inline partition::PartitionResult partition_embeddings(const partition::Points& means, const ExperimentConfig& cfg,
                                                       std::uint64_t seed) {
  Rng rng(derive_seed(seed, 13));
  if (cfg.forced_k) {
    partition::PartitionResult p;
    p.clusters = partition::forced_partition(means, cfg.forced_k, rng);
    return p;
  }
  const std::size_t k_max = cfg.k_max ? cfg.k_max : partition::default_k_max(means.size());
  return partition::select_partition(means, k_max, rng);
}

inline void write_loss_curve_csv(std::ostream& os, const encoder::PretrainResult& curve, const std::string& hash) {
  os << "# seps-pretrain-loss format=1 config=" << hash << "\n";
  os << "update,loss,reward_loss,kl\n";
  for (std::size_t u = 0; u < curve.losses.size(); ++u)
    os << u << ',' << csv::format(curve.losses[u]) << ',' << csv::format(curve.reward_losses[u]) << ','
       << csv::format(curve.kls[u]) << "\n";
}

/// Root for all artifacts: $SEPS_OUTPUT_ROOT joined with output_dir.
inline std::filesystem::path output_root(const ExperimentConfig& cfg) {
  const char* env = std::getenv("SEPS_OUTPUT_ROOT");
  std::filesystem::path root = env && *env ? std::filesystem::path(env) : std::filesystem::path(".");
  return (root / cfg.output_dir).lexically_normal();
}

}  // namespace seps::experiment
