// seps: pretrain -> partition -> train -> eval / benchmark from the command line.
#include <iostream>

#include "CLI11.hpp"
#include "seps/experiment/commands.hpp"

namespace ex = seps::experiment;

namespace {

struct Common {
  std::string config_file, task, scheme, out;
  std::vector<std::string> overrides;
  std::vector<std::uint64_t> seeds;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_file, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", c.overrides, "override, e.g. --set lr=1e-3 (repeatable)");
  cmd->add_option("-t,--task", c.task, "task name, e.g. bps-1, bpsh-n10-c3, crware-2, lbf");
  cmd->add_option("--scheme", c.scheme, "nops | fups | fupsid | fupsid-scaled | seps");
  cmd->add_option("--seed", c.seeds, "seed(s); replaces the configured list");
  cmd->add_option("-o,--out", c.out, "output directory below $SEPS_OUTPUT_ROOT");
}

ex::ExperimentConfig resolve(const Common& c) {
  ex::ExperimentConfig cfg;
  if (!c.config_file.empty()) ex::apply_config_file(cfg, c.config_file);
  for (const auto& kv : c.overrides) ex::apply_override(cfg, kv);
  if (!c.task.empty()) cfg.task = c.task;
  if (!c.scheme.empty()) cfg.scheme = c.scheme;
  if (!c.seeds.empty()) cfg.seeds = c.seeds;
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective parameter sharing experiments"};
  app.require_subcommand(1);

  Common pre, part, trn, swp, bench, ev;
  auto* c_pre = app.add_subcommand("pretrain", "train the identity encoder-decoder and write embeddings");
  add_common(c_pre, pre);

  auto* c_part = app.add_subcommand("partition", "cluster agent embeddings into a partition JSON");
  add_common(c_part, part);
  std::string emb_path, part_out;
  std::size_t k_max = 0, forced_k = 0;
  c_part->add_option("--embeddings", emb_path, "embeddings CSV (default: <task>/seed<s>/embeddings.csv)");
  c_part->add_option("--partition-out", part_out, "output JSON (default: next to the embeddings)");
  c_part->add_option("--k-max", k_max, "largest K considered by Davies-Bouldin selection");
  c_part->add_option("--forced-k", forced_k, "skip selection and cluster into exactly K groups");

  auto* c_trn = app.add_subcommand("train", "A2C training under a sharing scheme");
  add_common(c_trn, trn);
  std::string trn_partition;
  bool allow_large = false;
  c_trn->add_option("--partition", trn_partition, "partition JSON for seps");
  c_trn->add_flag("--allow-large-nops", allow_large, "run NoPS even on very large agent counts");

  auto* c_swp = app.add_subcommand("sweep-colours", "baselines on 10-agent heterogeneous spread, 1..c_max colours");
  add_common(c_swp, swp);
  std::size_t c_max = 0;
  c_swp->add_option("--c-max", c_max, "largest colour count");

  auto* c_bench = app.add_subcommand("benchmark", "median per-timestep training time per scheme");
  add_common(c_bench, bench);
  std::vector<std::string> bench_schemes{"fups", "seps", "nops"};
  std::string bench_partition;
  c_bench->add_option("--schemes", bench_schemes, "schemes to time")->delimiter(',');
  c_bench->add_option("--partition", bench_partition, "partition JSON for seps (default: true type labels)");

  auto* c_ev = app.add_subcommand("eval", "greedy evaluation of saved checkpoints");
  add_common(c_ev, ev);
  std::string ckpt, traj;
  c_ev->add_option("--checkpoints", ckpt, "checkpoint directory written by train")->required();
  c_ev->add_option("--trajectories", traj, "dump transitions (.csv for text, anything else binary)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : ex::kUsage;
  }

  return ex::run_guarded([&] {
    if (*c_pre) {
      for (const auto& p : ex::cmd_pretrain(resolve(pre))) std::cout << "wrote " << p.string() << "\n";
    } else if (*c_part) {
      auto cfg = resolve(part);
      if (k_max) cfg.k_max = k_max;
      if (forced_k) cfg.forced_k = forced_k;
      if (emb_path.empty()) {
        ex::require_task(cfg);
        emb_path = (ex::seed_dir(cfg, cfg.seeds.front()) / "embeddings.csv").string();
      }
      const std::filesystem::path out =
          part_out.empty() ? std::filesystem::path(emb_path).parent_path() / "partition.json"
                          : std::filesystem::path(part_out);
      const auto r = ex::cmd_partition(cfg, emb_path, out, cfg.seeds.front());
      std::cout << "k=" << r.clusters.k << " -> " << out.string() << "\n";
    } else if (*c_trn) {
      auto cfg = resolve(trn);
      if (allow_large) cfg.allow_large_nops = true;
      const auto best = ex::cmd_train(cfg, trn_partition);
      for (std::size_t i = 0; i < best.size(); ++i)
        std::cout << "seed " << cfg.seeds[i] << " max eval return " << best[i] << "\n";
    } else if (*c_swp) {
      auto cfg = resolve(swp);
      if (c_max) cfg.c_max = c_max;
      for (const auto& cell : ex::cmd_sweep_colours(cfg))
        std::cout << cell.scheme << " c=" << cell.colours << " " << seps::trainer::mean_of(cell.max_returns) << "\n";
    } else if (*c_bench) {
      for (const auto& r : ex::cmd_benchmark(resolve(bench), bench_schemes, bench_partition))
        std::cout << r.scheme << " " << r.result.median_seconds * 1e3 << " ms/timestep\n";
    } else if (*c_ev) {
      const auto cfg = resolve(ev);
      const auto r = ex::cmd_eval(cfg, ckpt, traj, cfg.seeds.front());
      std::cout << "mean return " << r.mean << " (std " << r.std << ")\n";
    }
  });
}
