#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>

#include "seps/envs/trajectory.hpp"
#include "seps/experiment/pipeline.hpp"
#include "seps/trainer/train.hpp"

namespace seps::experiment {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kNumeric = 3, kResourceRefusal = 4 };

inline fs::path seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
  return output_root(cfg) / cfg.task / ("seed" + std::to_string(seed));
}

inline std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

inline void require_task(const ExperimentConfig& cfg) {
  if (cfg.task.empty()) throw UsageError("no task given (use --task or task=... in the config)");
}

/// Writes embeddings.csv, pretrain_loss.csv and encoder checkpoints per seed.
inline std::vector<fs::path> cmd_pretrain(const ExperimentConfig& cfg) {
  require_task(cfg);
  const auto task = envs::make_env(cfg.task);
  std::vector<fs::path> written;
  for (std::uint64_t seed : cfg.seeds) {
    const PretrainOutput out = run_pretraining(*task, cfg, seed);
    const fs::path dir = seed_dir(cfg, seed);
    {
      auto os = open_out(dir / "embeddings.csv");
      encoder::write_embeddings_csv(os, out.embeddings, task->spec().ground_truth_types, cfg.hash());
    }
    {
      auto os = open_out(dir / "pretrain_loss.csv");
      write_loss_curve_csv(os, out.curve, cfg.hash());
    }
    nn::save_checkpoint(dir / "encoder.bin", out.model.encoder());
    nn::save_checkpoint(dir / "obs_decoder.bin", out.model.obs_decoder());
    nn::save_checkpoint(dir / "reward_decoder.bin", out.model.reward_decoder());
    written.push_back(dir / "embeddings.csv");
  }
  return written;
}

/// Reads one embeddings CSV and writes the partition JSON.
inline partition::PartitionResult cmd_partition(const ExperimentConfig& cfg, const fs::path& embeddings,
                                                const fs::path& out_path, std::uint64_t seed) {
  std::ifstream in(embeddings);
  if (!in) throw std::runtime_error("cannot open embeddings file " + embeddings.string());
  const encoder::EmbeddingTable table = encoder::read_embeddings_csv(in);
  const auto result = partition_embeddings(table.means(), cfg, seed);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  partition::save_partition(out_path.string(), result, cfg.hash());
  return result;
}

inline trainer::SharingScheme make_scheme(const ExperimentConfig& cfg, const envs::MarkovGameSpec& spec,
                                          const fs::path& partition_file) {
  const trainer::Scheme v = trainer::parse_scheme(cfg.scheme);
  check_resources(spec, v, cfg.allow_large_nops);
  switch (v) {
    case trainer::Scheme::NoPS: return trainer::SharingScheme::nops();
    case trainer::Scheme::FuPS: return trainer::SharingScheme::fups();
    case trainer::Scheme::FuPSId: return trainer::SharingScheme::fups_id();
    case trainer::Scheme::FuPSIdScaled: return trainer::SharingScheme::fups_id_scaled();
    case trainer::Scheme::SePS: {
      if (partition_file.empty() || !fs::exists(partition_file))
        throw UsageError("scheme seps needs a partition file" +
                         (partition_file.empty() ? std::string() : " (looked for " + partition_file.string() + ")") +
                         "; run `seps pretrain` and then `seps partition` first, or pass --partition");
      return trainer::SharingScheme::seps(partition::load_partition(partition_file.string()).clusters.assignment);
    }
  }
  throw UsageError("unknown scheme");
}

/// Trains every seed; writes metrics.csv and checkpoints under
/// <root>/<task>/seed<s>/<scheme>/. Returns the max evaluation return per seed.
inline std::vector<double> cmd_train(const ExperimentConfig& cfg, const fs::path& partition_override = {}) {
  require_task(cfg);
  const auto task = envs::make_env(cfg.task);
  std::vector<double> best;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path part = !partition_override.empty() ? partition_override : seed_dir(cfg, seed) / "partition.json";
    const auto scheme = make_scheme(cfg, task->spec(), part);
    const auto result = trainer::train(*task, scheme, cfg.train_config(task->spec()), seed);
    const fs::path dir = seed_dir(cfg, seed) / cfg.scheme;
    {
      auto os = open_out(dir / "metrics.csv");
      trainer::write_metrics_csv(os, result.trace, cfg.hash());
    }
    result.policies->save(dir / "checkpoints");
    if (scheme.variant == trainer::Scheme::SePS) fs::copy_file(part, dir / "checkpoints" / "partition.json",
                                                               fs::copy_options::overwrite_existing);
    best.push_back(result.max_eval_return);
  }
  return best;
}

struct SweepCell {
  std::string scheme;
  std::size_t colours;
  std::vector<double> max_returns;  // per seed
};

/// NoPS, FuPS, FuPSId and FuPSIdScaled on heterogeneous blind particle spread
/// with `sweep_agents` agents and 1..c_max colours.
inline std::vector<SweepCell> cmd_sweep_colours(const ExperimentConfig& cfg) {
  std::vector<SweepCell> cells;
  for (std::size_t c = 1; c <= cfg.c_max; ++c) {
    const auto task = envs::make_env(envs::colour_task_name(true, cfg.sweep_agents, c));
    for (const char* name : {"nops", "fups", "fupsid", "fupsid-scaled"}) {
      SweepCell cell{name, c, {}};
      trainer::SharingScheme scheme{trainer::parse_scheme(name), {}, c};
      for (std::uint64_t seed : cfg.seeds)
        cell.max_returns.push_back(
            trainer::train(*task, scheme, cfg.train_config(task->spec()), seed).max_eval_return);
      cells.push_back(std::move(cell));
    }
  }
  auto os = open_out(output_root(cfg) / "sweep_colours.csv");
  os << "# seps-sweep format=1 config=" << cfg.hash() << "\n";
  os << "scheme,colours,agents,seeds,max_return_mean,max_return_std\n";
  for (const auto& c : cells)
    os << c.scheme << ',' << c.colours << ',' << cfg.sweep_agents << ',' << c.max_returns.size() << ','
       << csv::format(trainer::mean_of(c.max_returns)) << ',' << csv::format(trainer::std_of(c.max_returns)) << "\n";
  return cells;
}

struct BenchmarkRow {
  std::string scheme;
  trainer::BenchmarkResult result;
  std::string partition_source;
};

/// Median per-timestep training time for each scheme in `schemes`. Without a
/// partition file SePS uses the task's true type labels; timing depends only
/// on the number and sizes of the groups.
inline std::vector<BenchmarkRow> cmd_benchmark(const ExperimentConfig& cfg, const std::vector<std::string>& schemes,
                                               const fs::path& partition_file = {}) {
  require_task(cfg);
  const auto task = envs::make_env(cfg.task);
  const auto& spec = task->spec();
  std::vector<BenchmarkRow> rows;
  for (const auto& name : schemes) {
    ExperimentConfig c = cfg;
    c.scheme = name;
    trainer::SharingScheme scheme;
    std::string source = "-";
    if (trainer::parse_scheme(name) == trainer::Scheme::SePS && partition_file.empty()) {
      std::vector<std::size_t> a(spec.ground_truth_types.begin(), spec.ground_truth_types.end());
      scheme = trainer::SharingScheme::seps(a);
      source = "ground_truth";
    } else {
      scheme = make_scheme(c, spec, partition_file);
      if (scheme.variant == trainer::Scheme::SePS) source = partition_file.string();
    }
    rows.push_back({name,
                    trainer::timestep_benchmark(*task, scheme, cfg.train_config(spec), cfg.benchmark_timesteps,
                                                cfg.seeds.front(), cfg.benchmark_warmup),
                    source});
  }
  auto os = open_out(output_root(cfg) / cfg.task / "benchmark.csv");
  os << "# seps-benchmark format=1 config=" << cfg.hash() << "\n";
  os << "scheme,policies,parameters,timesteps,median_seconds_per_timestep,partition_source\n";
  for (const auto& r : rows)
    os << r.scheme << ',' << r.result.policy_count << ',' << r.result.parameter_count << ',' << r.result.timesteps
       << ',' << csv::format(r.result.median_seconds) << ',' << r.partition_source << "\n";
  return rows;
}

/// Greedy evaluation of saved checkpoints; optionally dumps every transition.
inline trainer::EvalResult cmd_eval(const ExperimentConfig& cfg, const fs::path& checkpoints,
                                    const fs::path& trajectories = {}, std::uint64_t seed = 0) {
  require_task(cfg);
  const auto task = envs::make_env(cfg.task);
  const auto& spec = task->spec();
  const auto scheme = make_scheme(cfg, spec, checkpoints / "partition.json");
  Rng init(0);
  trainer::PolicySet pol(spec, scheme, cfg.train_config(spec).width, {}, init);
  pol.load(checkpoints);

  trainer::EvalResult res;
  std::vector<envs::TrajectoryRecord> records;
  const std::size_t N = spec.n_agents;
  Rng unused(0);
  for (std::size_t ep = 0; ep < cfg.eval_episodes; ++ep) {
    auto env = task->clone();
    auto obs = env->reset(derive_seed(seed, ep));
    double ret = 0.0;
    for (bool done = false; !done;) {
      nn::Matrix x(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(pol.input_width()));
      for (std::size_t i = 0; i < N; ++i)
        pol.write_input(obs[i], i, trainer::detail::row_span(x, static_cast<Eigen::Index>(i)));
      const auto a = trainer::act(pol, x, 1, unused, true, false);
      const std::uint32_t t = static_cast<std::uint32_t>(env->timestep());
      auto step = env->step(a.actions);
      done = step.done;
      for (std::size_t i = 0; i < N; ++i) {
        ret += step.rewards[i];
        if (!trajectories.empty())
          records.push_back({0, ep, t, static_cast<std::uint32_t>(i), obs[i], a.actions[i], step.rewards[i],
                             step.observations[i], done});
      }
      obs = std::move(step.observations);
    }
    res.returns.push_back(ret);
  }
  res.mean = trainer::mean_of(res.returns);
  res.std = trainer::std_of(res.returns);

  if (!trajectories.empty()) {
    auto os = open_out(trajectories);
    if (trajectories.extension() == ".csv") {
      os << "# seps-trajectories format=1 config=" << cfg.hash() << "\n";
      envs::write_records_csv(os, records);
    } else {
      for (const auto& r : records) envs::write_record(os, r);
    }
  }
  auto os = open_out(checkpoints.parent_path() / "eval.csv");
  os << "# seps-eval format=1 config=" << cfg.hash() << "\n";
  os << "episode,return\n";
  for (std::size_t e = 0; e < res.returns.size(); ++e) os << e << ',' << csv::format(res.returns[e]) << "\n";
  return res;
}

/// Maps exceptions onto exit codes: 2 usage, 3 numeric, 4 resource refusal.
template <typename F>
int run_guarded(F&& f, std::ostream& err = std::cerr) {
  try {
    f();
    return kOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ContractViolation& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const ResourceRefusal& e) {
    err << "resource refusal: " << e.what() << "\n";
    return kResourceRefusal;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace seps::experiment
