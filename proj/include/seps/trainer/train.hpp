#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <ostream>
#include <vector>

#include "seps/csv.hpp"
#include "seps/trainer/a2c.hpp"

namespace seps::trainer {

struct TrainConfig {
  std::size_t total_steps = 2'000'000;  // environment transitions, summed over parallel envs
  std::size_t eval_every = 10'000;
  std::size_t eval_episodes = 10;
  std::size_t n_envs = 8;
  std::size_t n_steps = 5;
  std::size_t width = 128;
  A2cConfig a2c;
  nn::AdamConfig adam;
  bool record_wall_clock = true;  // false writes 0 so traces are byte-reproducible
  bool stagger_envs = true;       // desynchronise episode phases across the E copies
};

struct EvalResult {
  std::vector<double> returns;  // per episode, summed over agents
  double mean = 0.0;
  double std = 0.0;
};

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Population standard deviation.
inline double std_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

/// Greedy episodes; episode j uses seed derive_seed(seed, j). All episodes
/// advance together so each network sees one batch per step.
inline EvalResult evaluate(const PolicySet& policies, const envs::Environment& task, std::size_t episodes,
                           std::uint64_t seed) {
  const std::size_t N = policies.n_agents();
  std::vector<std::unique_ptr<envs::Environment>> envs;
  std::vector<std::vector<envs::Observation>> obs;
  for (std::size_t j = 0; j < episodes; ++j) {
    envs.push_back(task.clone());
    obs.push_back(envs.back()->reset(derive_seed(seed, j)));
  }
  EvalResult out;
  out.returns.assign(episodes, 0.0);
  std::vector<std::size_t> live(episodes);
  std::iota(live.begin(), live.end(), 0);
  Rng unused(0);
  while (!live.empty()) {
    nn::Matrix x(static_cast<Eigen::Index>(live.size() * N), static_cast<Eigen::Index>(policies.input_width()));
    for (std::size_t s = 0; s < live.size(); ++s)
      for (std::size_t i = 0; i < N; ++i)
        policies.write_input(obs[live[s]][i], i, detail::row_span(x, static_cast<Eigen::Index>(s * N + i)));
    const ActOutput a = act(policies, x, live.size(), unused, true, false);
    std::vector<std::size_t> still;
    for (std::size_t s = 0; s < live.size(); ++s) {
      const std::size_t j = live[s];
      const auto res = envs[j]->step(std::span<const int>(a.actions.data() + s * N, N));
      for (double r : res.rewards) out.returns[j] += r;
      obs[j] = res.observations;
      if (!res.done) still.push_back(j);
    }
    live = std::move(still);
  }
  out.mean = mean_of(out.returns);
  out.std = std_of(out.returns);
  return out;
}

struct MetricsRow {
  std::size_t env_steps = 0;
  double wall_clock_s = 0.0;
  double eval_return_mean = 0.0, eval_return_std = 0.0;
  double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;  // averaged over updates since the previous row
  std::vector<double> actor_grad_norms, critic_grad_norms;     // per network, same averaging
};

struct TrainResult {
  std::vector<MetricsRow> trace;
  double max_eval_return = -std::numeric_limits<double>::infinity();
  std::unique_ptr<PolicySet> policies;
};

namespace detail {
inline constexpr std::uint64_t kInitStream = 1, kEnvStream = 2, kActionStream = 3, kEvalStream = 4;
}

/// A2C with evaluation every `eval_every` environment steps (and once at the
/// end if the budget is not a multiple).
inline TrainResult train(const envs::Environment& task, const SharingScheme& scheme, const TrainConfig& cfg,
                         std::uint64_t seed) {
  if (cfg.eval_every == 0 || cfg.n_envs == 0 || cfg.n_steps == 0)
    throw ContractViolation("train: eval_every, n_envs and n_steps must be positive");
  Rng init_rng(derive_seed(seed, detail::kInitStream));
  Rng act_rng(derive_seed(seed, detail::kActionStream));
  const std::uint64_t eval_seed = derive_seed(seed, detail::kEvalStream);

  TrainResult out;
  out.policies = std::make_unique<PolicySet>(task.spec(), scheme, cfg.width, cfg.adam, init_rng);
  PolicySet& pol = *out.policies;
  RolloutRunner runner(task, cfg.n_envs, derive_seed(seed, detail::kEnvStream), cfg.stagger_envs);

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t K = pol.policy_count();
  MetricsRow acc;
  acc.actor_grad_norms.assign(K, 0.0);
  acc.critic_grad_norms.assign(K, 0.0);
  std::size_t updates = 0, next_eval = cfg.eval_every;

  auto emit = [&] {
    MetricsRow row = acc;
    row.env_steps = runner.env_steps();
    if (cfg.record_wall_clock)
      row.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double u = updates ? static_cast<double>(updates) : 1.0;
    row.policy_loss /= u;
    row.value_loss /= u;
    row.entropy /= u;
    for (auto& g : row.actor_grad_norms) g /= u;
    for (auto& g : row.critic_grad_norms) g /= u;
    const EvalResult ev = evaluate(pol, task, cfg.eval_episodes, eval_seed);
    row.eval_return_mean = ev.mean;
    row.eval_return_std = ev.std;
    out.max_eval_return = std::max(out.max_eval_return, ev.mean);
    out.trace.push_back(std::move(row));
    acc = MetricsRow{};
    acc.actor_grad_norms.assign(K, 0.0);
    acc.critic_grad_norms.assign(K, 0.0);
    updates = 0;
  };

  while (runner.env_steps() < cfg.total_steps) {
    const RolloutBatch batch = runner.collect(pol, cfg.n_steps, act_rng);
    A2cResult res = a2c_losses(pol, batch, cfg.a2c);
    apply_gradients(pol, res, cfg.a2c.max_grad_norm);
    acc.policy_loss += res.stats.policy_loss;
    acc.value_loss += res.stats.value_loss;
    acc.entropy += res.stats.entropy;
    for (std::size_t k = 0; k < K; ++k) {
      acc.actor_grad_norms[k] += res.stats.actor_grad_norms[k];
      acc.critic_grad_norms[k] += res.stats.critic_grad_norms[k];
    }
    ++updates;
    if (runner.env_steps() >= next_eval) {
      emit();
      while (next_eval <= runner.env_steps()) next_eval += cfg.eval_every;
    }
  }
  if (updates > 0) emit();
  return out;
}

inline constexpr int kMetricsFormat = 1;

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& trace, const std::string& config_hash) {
  os << "# seps-metrics format=" << kMetricsFormat << " config=" << config_hash << "\n";
  const std::size_t K = trace.empty() ? 0 : trace.front().actor_grad_norms.size();
  os << "env_steps,wall_clock_s,eval_return_mean,eval_return_std,policy_loss,value_loss,entropy";
  for (std::size_t k = 0; k < K; ++k) os << ",actor_grad_norm_" << k;
  for (std::size_t k = 0; k < K; ++k) os << ",critic_grad_norm_" << k;
  os << "\n";
  for (const auto& r : trace) {
    os << r.env_steps << ',' << csv::format(r.wall_clock_s) << ',' << csv::format(r.eval_return_mean) << ','
       << csv::format(r.eval_return_std) << ',' << csv::format(r.policy_loss) << ',' << csv::format(r.value_loss)
       << ',' << csv::format(r.entropy);
    for (double g : r.actor_grad_norms) os << ',' << csv::format(g);
    for (double g : r.critic_grad_norms) os << ',' << csv::format(g);
    os << "\n";
  }
}

struct BenchmarkResult {
  double median_seconds = 0.0;  // per timestep (one step of all E environments), collect + update
  std::size_t timesteps = 0;    // measured, after warm-up
  std::size_t parameter_count = 0;
  std::size_t policy_count = 0;
};

/// Times full training iterations (collect n steps + one update) and reports
/// the median of iteration_time / n over at least `n_timesteps` timesteps,
/// after discarding the first `warmup` timesteps.
inline BenchmarkResult timestep_benchmark(const envs::Environment& task, const SharingScheme& scheme,
                                          const TrainConfig& cfg, std::size_t n_timesteps, std::uint64_t seed,
                                          std::size_t warmup = 100) {
  Rng init_rng(derive_seed(seed, detail::kInitStream));
  Rng act_rng(derive_seed(seed, detail::kActionStream));
  PolicySet pol(task.spec(), scheme, cfg.width, cfg.adam, init_rng);
  RolloutRunner runner(task, cfg.n_envs, derive_seed(seed, detail::kEnvStream), cfg.stagger_envs);

  std::size_t done = 0;
  while (done < warmup) {
    const RolloutBatch b = runner.collect(pol, cfg.n_steps, act_rng);
    A2cResult r = a2c_losses(pol, b, cfg.a2c);
    apply_gradients(pol, r, cfg.a2c.max_grad_norm);
    done += cfg.n_steps;
  }
  std::vector<double> samples;
  BenchmarkResult out;
  while (out.timesteps < n_timesteps) {
    const auto t0 = std::chrono::steady_clock::now();
    const RolloutBatch b = runner.collect(pol, cfg.n_steps, act_rng);
    A2cResult r = a2c_losses(pol, b, cfg.a2c);
    apply_gradients(pol, r, cfg.a2c.max_grad_norm);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    samples.push_back(dt / static_cast<double>(cfg.n_steps));
    out.timesteps += cfg.n_steps;
  }
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2), samples.end());
  out.median_seconds = samples[samples.size() / 2];
  out.parameter_count = pol.trainable_parameter_count();
  out.policy_count = pol.policy_count();
  return out;
}

}  // namespace seps::trainer
