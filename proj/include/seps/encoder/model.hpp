#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "seps/encoder/replay.hpp"
#include "seps/nn/adam.hpp"
#include "seps/nn/distributions.hpp"
#include "seps/nn/mlp.hpp"

namespace seps::encoder {

struct EncoderConfig {
  std::size_t latent_dim = 5;
  std::size_t hidden_width = 64;
  double kl_beta = 1e-4;
  // Reward head also sees o_{t+1}; off by default so both heads share (o_t, a_t, z).
  bool reward_uses_next_obs = false;
  nn::AdamConfig adam{};
};

/// Encoder q(z | agent id) plus observation and reward decoders.
///
/// The encoder's only input is a one-hot agent id and it emits the mean and
/// log-variance of a diagonal Gaussian over R^m. Both decoders take exactly
/// concat(o_t, a_t, z), so the id reaches them only through z.
class EncoderDecoderModel {
 public:
  EncoderDecoderModel(std::size_t n_agents, std::size_t obs_width, std::size_t action_width, EncoderConfig cfg = {})
      : cfg_(cfg),
        n_agents_(n_agents),
        obs_width_(obs_width),
        action_width_(action_width),
        encoder_({n_agents, cfg.hidden_width, cfg.hidden_width, 2 * cfg.latent_dim}),
        obs_decoder_({decoder_input_width(false), cfg.hidden_width, cfg.hidden_width, obs_width}),
        reward_decoder_({decoder_input_width(cfg.reward_uses_next_obs), cfg.hidden_width, cfg.hidden_width, 1}) {}

  void initialize(Rng& rng) {
    encoder_.initialize(rng, 1.0);
    obs_decoder_.initialize(rng, 1.0);
    reward_decoder_.initialize(rng, 1.0);
  }

  const EncoderConfig& config() const noexcept { return cfg_; }
  std::size_t n_agents() const noexcept { return n_agents_; }
  std::size_t obs_width() const noexcept { return obs_width_; }
  std::size_t action_width() const noexcept { return action_width_; }
  std::size_t latent_dim() const noexcept { return cfg_.latent_dim; }

  nn::MlpNetwork& encoder() noexcept { return encoder_; }
  nn::MlpNetwork& obs_decoder() noexcept { return obs_decoder_; }
  nn::MlpNetwork& reward_decoder() noexcept { return reward_decoder_; }
  const nn::MlpNetwork& encoder() const noexcept { return encoder_; }
  const nn::MlpNetwork& obs_decoder() const noexcept { return obs_decoder_; }
  const nn::MlpNetwork& reward_decoder() const noexcept { return reward_decoder_; }

  nn::Matrix one_hot_ids(std::span<const std::size_t> ids) const {
    nn::Matrix x = nn::Matrix::Zero(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(n_agents_));
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (ids[r] >= n_agents_) throw ContractViolation("encoder: agent id out of range");
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(ids[r])) = 1.0;
    }
    return x;
  }

  nn::DiagonalGaussian encode(std::size_t agent_id) const {
    const std::size_t ids[1] = {agent_id};
    const nn::Matrix out = encoder_.forward(one_hot_ids(ids));
    const auto m = static_cast<Eigen::Index>(cfg_.latent_dim);
    return {std::vector<double>(out.data(), out.data() + m), std::vector<double>(out.data() + m, out.data() + 2 * m)};
  }

  nn::Matrix decoder_input(const nn::Matrix& obs, const nn::Matrix& actions, const nn::Matrix& z) const {
    nn::Matrix in(obs.rows(), obs.cols() + actions.cols() + z.cols());
    in << obs, actions, z;
    return in;
  }

  nn::Matrix reward_input(const nn::Matrix& dec_in, const nn::Matrix& next_obs) const {
    if (!cfg_.reward_uses_next_obs) return dec_in;
    nn::Matrix in(dec_in.rows(), dec_in.cols() + next_obs.cols());
    in << dec_in, next_obs;
    return in;
  }

  /// Decoder predictions at latent codes `z` (one row per sample).
  std::pair<nn::Matrix, nn::Vector> predict(const nn::Matrix& obs, const nn::Matrix& actions, const nn::Matrix& z,
                                            const nn::Matrix& next_obs) const {
    const nn::Matrix in = decoder_input(obs, actions, z);
    nn::Matrix r = reward_decoder_.forward(reward_input(in, next_obs));
    return {obs_decoder_.forward(in), r.col(0)};
  }

 private:
  std::size_t decoder_input_width(bool with_next) const {
    return obs_width_ + action_width_ + cfg_.latent_dim + (with_next ? obs_width_ : 0);
  }

  EncoderConfig cfg_;
  std::size_t n_agents_, obs_width_, action_width_;
  nn::MlpNetwork encoder_, obs_decoder_, reward_decoder_;
};

struct ElboResult {
  double loss = 0.0;
  double obs_loss = 0.0;     // batch mean of masked squared error
  double reward_loss = 0.0;  // batch mean of squared error
  double kl = 0.0;           // batch mean KL (unscaled)
  std::vector<double> grad_encoder, grad_obs_decoder, grad_reward_decoder;
};

/// Negative ELBO with unit-variance Gaussian likelihoods and a standard normal
/// prior, for fixed reparameterization noise (B x m):
///   mean_b [ ||mask*(f_o(o,a,z) - o')||^2 + (f_r(o,a,z) - r)^2 + beta * KL_b ].
inline ElboResult elbo_loss(const EncoderDecoderModel& model, const TransitionBatch& batch, const nn::Matrix& noise) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  const auto m = static_cast<Eigen::Index>(model.latent_dim());
  if (b == 0) throw ContractViolation("elbo_loss: empty batch");
  if (noise.rows() != b || noise.cols() != m) throw DimensionError("elbo_loss: noise shape");
  const double beta = model.config().kl_beta;
  const double inv_b = 1.0 / static_cast<double>(b);

  nn::ForwardRecord enc_rec, obs_rec, rew_rec;
  const nn::Matrix& enc_out = model.encoder().forward(model.one_hot_ids(batch.agent_ids), enc_rec);
  const nn::Matrix mean = enc_out.leftCols(m);
  const nn::Matrix log_var = enc_out.rightCols(m);
  const nn::Matrix std_dev = (0.5 * log_var.array()).exp().matrix();
  const nn::Matrix z = mean + std_dev.cwiseProduct(noise);

  const nn::Matrix dec_in = model.decoder_input(batch.obs, batch.actions, z);
  const nn::Matrix& obs_pred = model.obs_decoder().forward(dec_in, obs_rec);
  const nn::Matrix& rew_pred = model.reward_decoder().forward(model.reward_input(dec_in, batch.next_obs), rew_rec);

  const nn::Matrix obs_err = (obs_pred - batch.next_obs).cwiseProduct(batch.obs_mask);
  const nn::Vector rew_err = rew_pred.col(0) - batch.rewards;
  const nn::Matrix kl_terms = 0.5 * (mean.array().square() + log_var.array().exp() - log_var.array() - 1.0).matrix();

  ElboResult res;
  res.obs_loss = obs_err.squaredNorm() * inv_b;
  res.reward_loss = rew_err.squaredNorm() * inv_b;
  res.kl = kl_terms.sum() * inv_b;
  res.loss = res.obs_loss + res.reward_loss + beta * res.kl;
  if (!std::isfinite(res.loss)) {
    std::ostringstream os;
    os << "elbo_loss: non-finite loss (obs " << res.obs_loss << ", reward " << res.reward_loss << ", kl " << res.kl
       << ", batch " << b << ")";
    throw NumericError(os.str());
  }

  res.grad_encoder.assign(model.encoder().parameter_count(), 0.0);
  res.grad_obs_decoder.assign(model.obs_decoder().parameter_count(), 0.0);
  res.grad_reward_decoder.assign(model.reward_decoder().parameter_count(), 0.0);

  const nn::Matrix d_obs_in = model.obs_decoder().backward(obs_rec, (2.0 * inv_b) * obs_err, res.grad_obs_decoder);
  nn::Matrix d_rew_out(b, 1);
  d_rew_out.col(0) = (2.0 * inv_b) * rew_err;
  const nn::Matrix d_rew_in = model.reward_decoder().backward(rew_rec, d_rew_out, res.grad_reward_decoder);

  const Eigen::Index z_col = static_cast<Eigen::Index>(model.obs_width() + model.action_width());
  const nn::Matrix d_z = d_obs_in.middleCols(z_col, m) + d_rew_in.middleCols(z_col, m);

  nn::Matrix d_enc(b, 2 * m);
  d_enc.leftCols(m) = d_z + (beta * inv_b) * mean;
  d_enc.rightCols(m) = (d_z.cwiseProduct(noise).cwiseProduct(std_dev) * 0.5).matrix() +
                       ((beta * inv_b * 0.5) * (log_var.array().exp() - 1.0)).matrix();
  model.encoder().backward(enc_rec, d_enc, res.grad_encoder);
  return res;
}

inline nn::Matrix draw_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  nn::Matrix noise(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = standard_normal(rng);
  return noise;
}

inline ElboResult elbo_loss(const EncoderDecoderModel& model, const TransitionBatch& batch, Rng& rng) {
  return elbo_loss(model, batch, draw_noise(batch.size(), model.latent_dim(), rng));
}

struct PretrainResult {
  std::vector<double> losses;
  std::vector<double> reward_losses;
  std::vector<double> kls;
};

/// `n_updates` Adam steps on the negative ELBO over uniform minibatches.
inline PretrainResult pretrain(EncoderDecoderModel& model, const SharedReplay& replay, std::size_t n_updates,
                               std::size_t batch_size, Rng& rng) {
  if (!replay.covers_all_agents()) throw ContractViolation("pretrain: replay does not contain every agent id");
  if (replay.n_agents() != model.n_agents() || replay.obs_width() != model.obs_width() ||
      replay.action_width() != model.action_width())
    throw DimensionError("pretrain: replay and model shapes differ");
  const auto& adam = model.config().adam;
  nn::AdamState enc_opt(model.encoder().parameter_count(), adam);
  nn::AdamState obs_opt(model.obs_decoder().parameter_count(), adam);
  nn::AdamState rew_opt(model.reward_decoder().parameter_count(), adam);

  PretrainResult out;
  out.losses.reserve(n_updates);
  for (std::size_t u = 0; u < n_updates; ++u) {
    const TransitionBatch batch = replay.sample(batch_size, rng);
    const ElboResult r = elbo_loss(model, batch, rng);
    nn::adam_step(enc_opt, model.encoder().parameters(), r.grad_encoder);
    nn::adam_step(obs_opt, model.obs_decoder().parameters(), r.grad_obs_decoder);
    nn::adam_step(rew_opt, model.reward_decoder().parameters(), r.grad_reward_decoder);
    out.losses.push_back(r.loss);
    out.reward_losses.push_back(r.reward_loss);
    out.kls.push_back(r.kl);
  }
  return out;
}

/// Encoder output per agent id; clustering uses only the means.
inline std::vector<nn::DiagonalGaussian> embed_agents(const EncoderDecoderModel& model) {
  std::vector<nn::DiagonalGaussian> out;
  out.reserve(model.n_agents());
  for (std::size_t i = 0; i < model.n_agents(); ++i) out.push_back(model.encode(i));
  return out;
}

inline std::vector<std::vector<double>> embedding_means(std::span<const nn::DiagonalGaussian> emb) {
  std::vector<std::vector<double>> means;
  for (const auto& g : emb) means.push_back(g.mean);
  return means;
}

}  // namespace seps::encoder
