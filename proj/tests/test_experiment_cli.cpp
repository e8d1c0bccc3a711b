#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "seps/experiment/commands.hpp"

using namespace seps;
using namespace seps::experiment;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

/// Fresh output root per test, exported as SEPS_OUTPUT_ROOT.
class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("seps_cli_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
    setenv("SEPS_OUTPUT_ROOT", root_.c_str(), 1);
  }
  void TearDown() override {
    unsetenv("SEPS_OUTPUT_ROOT");
    fs::remove_all(root_);
  }

  static ExperimentConfig small(const std::string& task) {
    ExperimentConfig c;
    c.task = task;
    c.seeds = {0};
    c.pretrain_steps = 2'000;
    c.pretrain_updates = 200;
    c.total_steps = 2'000;
    c.eval_every = 500;
    c.eval_episodes = 2;
    c.width = 16;
    c.record_wall_clock = false;
    return c;
  }

  /// Runs the CLI binary; returns its exit status.
  int run(const std::string& args) const {
    const std::string cmd = "SEPS_OUTPUT_ROOT='" + root_.string() + "' '" SEPS_CLI_PATH "' " + args + " >'" +
                            (root_ / "stdout.txt").string() + "' 2>'" + (root_ / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string stderr_text() const { return slurp(root_ / "stderr.txt"); }

  fs::path root_;
};

}  // namespace

TEST(Config, DefaultsMatchTheTrainingSetup) {
  const ExperimentConfig c;
  EXPECT_DOUBLE_EQ(c.lr, 3e-4);
  EXPECT_DOUBLE_EQ(c.adam_eps, 1e-5);
  EXPECT_DOUBLE_EQ(c.entropy_coef, 1e-2);
  EXPECT_EQ(c.n_envs, 8u);
  EXPECT_EQ(c.n_steps, 5u);
  EXPECT_EQ(c.latent_dim, 5u);
  EXPECT_DOUBLE_EQ(c.kl_beta, 1e-4);
  EXPECT_EQ(c.encoder_batch, 128u);
  EXPECT_EQ(c.seeds.size(), 5u);
  EXPECT_TRUE(c.stagger_envs);
  EXPECT_TRUE(c.bootstrap_time_limits);
}

TEST(Config, TrainConfigUsesTaskDefaultsAndOverrides) {
  ExperimentConfig c;
  const auto bps = envs::make_env("bps-1")->spec();
  const auto crw = envs::make_env("crware-1")->spec();
  EXPECT_EQ(c.train_config(bps).width, 128u);
  EXPECT_EQ(c.train_config(crw).width, 64u);
  EXPECT_EQ(c.train_config(crw).total_steps, 5'000'000u);
  c.width = 32;
  c.stagger_envs = false;
  c.bootstrap_time_limits = false;
  const auto t = c.train_config(bps);
  EXPECT_EQ(t.width, 32u);
  EXPECT_FALSE(t.stagger_envs);
  EXPECT_FALSE(t.a2c.bootstrap_time_limits);
  EXPECT_DOUBLE_EQ(t.adam.learning_rate, 3e-4);
}

TEST(Config, StreamParsesCommentsAndWhitespace) {
  ExperimentConfig c;
  std::istringstream in("# experiment\n\n task = bps-3 \nlr=1e-3  # faster\nseeds = 4, 7\nstagger_envs = no\n");
  apply_config_stream(c, in);
  EXPECT_EQ(c.task, "bps-3");
  EXPECT_DOUBLE_EQ(c.lr, 1e-3);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 7}));
  EXPECT_FALSE(c.stagger_envs);
}

TEST(Config, ParseErrorsCarryTheLineNumber) {
  auto line_of = [](const std::string& text) -> std::size_t {
    ExperimentConfig c;
    std::istringstream in(text);
    try {
      apply_config_stream(c, in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("task=bps-1\nno equals sign\n"), 2u);
  EXPECT_EQ(line_of("# c\n\nbogus_key = 1\n"), 3u);
  EXPECT_EQ(line_of("lr = fast\n"), 1u);
  EXPECT_EQ(line_of("n_envs = -3\n"), 1u);
  EXPECT_EQ(line_of("stagger_envs = maybe\n"), 1u);
  EXPECT_EQ(line_of("seeds = 1,,2\n"), 1u);
}

TEST(Config, OverridesAndRoundTrip) {
  ExperimentConfig c;
  apply_override(c, "gamma = 0.95");
  apply_override(c, "forced_k=3");
  EXPECT_DOUBLE_EQ(c.gamma, 0.95);
  EXPECT_EQ(c.forced_k, 3u);
  EXPECT_THROW(apply_override(c, "gamma"), ContractViolation);
  EXPECT_THROW(apply_override(c, "nope=1"), ContractViolation);

  std::stringstream ss;
  write_config(ss, c);
  ExperimentConfig back;
  apply_config_stream(back, ss);
  EXPECT_EQ(back.entries(), c.entries());
  EXPECT_EQ(back.hash(), c.hash());
}

TEST(Config, HashIgnoresOnlyTheOutputDirectory) {
  ExperimentConfig a, b;
  b.output_dir = "elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.lr = 1e-3;
  EXPECT_NE(a.hash(), b.hash());
  ExperimentConfig d;
  d.stagger_envs = false;
  EXPECT_NE(a.hash(), d.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Guarded, MapsErrorsToExitCodes) {
  std::ostringstream err;
  EXPECT_EQ(run_guarded([] {}, err), kOk);
  EXPECT_EQ(run_guarded([] { throw UsageError("u"); }, err), kUsage);
  EXPECT_EQ(run_guarded([] { throw ContractViolation("c"); }, err), kUsage);
  EXPECT_EQ(run_guarded([] { throw NumericError("n"); }, err), kNumeric);
  EXPECT_EQ(run_guarded([] { throw ResourceRefusal("r"); }, err), kResourceRefusal);
  EXPECT_EQ(run_guarded([] { throw ParseError("p", 4); }, err), kFailure);
  EXPECT_NE(err.str().find("line 4"), std::string::npos);
}

TEST(Resources, NopsOnTwoHundredAgentsIsRefusedUnlessAllowed) {
  const auto spec = envs::make_env("bpsh-3")->spec();
  ASSERT_EQ(spec.n_agents, 200u);
  EXPECT_THROW(check_resources(spec, trainer::Scheme::NoPS, false), ResourceRefusal);
  EXPECT_NO_THROW(check_resources(spec, trainer::Scheme::NoPS, true));
  EXPECT_NO_THROW(check_resources(spec, trainer::Scheme::SePS, false));
  EXPECT_NO_THROW(check_resources(envs::make_env("bps-2")->spec(), trainer::Scheme::NoPS, false));
}

TEST_F(Cli, PretrainWritesOneRowPerAgentWithHeader) {
  ExperimentConfig c = small("bps-3");
  const auto written = cmd_pretrain(c);
  ASSERT_EQ(written.size(), 1u);
  const auto rows = lines_of(written[0]);
  ASSERT_EQ(rows.size(), 2u + 30u);
  EXPECT_EQ(rows[0], "# seps-embeddings format=1 config=" + c.hash());
  EXPECT_EQ(std::count(rows[1].begin(), rows[1].end(), ','), 11);  // id, 5 means, 5 log-variances, type
  EXPECT_EQ(rows[1].rfind("agent_id,mean_1,", 0), 0u);
  const auto loss = lines_of(written[0].parent_path() / "pretrain_loss.csv");
  EXPECT_EQ(loss.size(), 2u + c.pretrain_updates);
  EXPECT_EQ(loss[0], "# seps-pretrain-loss format=1 config=" + c.hash());
  EXPECT_TRUE(fs::exists(written[0].parent_path() / "encoder.bin"));
}

TEST_F(Cli, PretrainIsByteIdenticalOnRerun) {
  ExperimentConfig c = small("bpsh-1");
  const fs::path p = cmd_pretrain(c).front();
  const std::string first = slurp(p), first_loss = slurp(p.parent_path() / "pretrain_loss.csv");
  fs::remove_all(root_ / "bpsh-1");
  cmd_pretrain(c);
  EXPECT_EQ(slurp(p), first);
  EXPECT_EQ(slurp(p.parent_path() / "pretrain_loss.csv"), first_loss);
}

TEST_F(Cli, PartitionOfDefaultPretrainOnBps3FindsFiveGroups) {
  ExperimentConfig c;
  c.task = "bps-3";
  c.seeds = {0};
  const fs::path emb = cmd_pretrain(c).front();
  const auto r = cmd_partition(c, emb, root_ / "part.json", 0);
  EXPECT_EQ(r.clusters.k, 5u);
  const auto loaded = partition::load_partition((root_ / "part.json").string());
  EXPECT_EQ(loaded.clusters.k, 5u);
  EXPECT_EQ(loaded.clusters.assignment, r.clusters.assignment);
  EXPECT_NE(slurp(root_ / "part.json").find(c.hash()), std::string::npos);
}

TEST_F(Cli, ForcedKOneGivesAllZeros) {
  ExperimentConfig c = small("bps-1");
  const fs::path emb = cmd_pretrain(c).front();
  c.forced_k = 1;
  const auto r = cmd_partition(c, emb, root_ / "p.json", 0);
  EXPECT_EQ(r.clusters.k, 1u);
  EXPECT_EQ(r.clusters.assignment, std::vector<std::size_t>(15, 0));
}

TEST_F(Cli, MalformedEmbeddingsReportTheLine) {
  {
    std::ofstream os(root_ / "bad.csv");
    os << "# header\nagent_id,mean_1,logvar_1,ground_truth_type\n0,0.1,-1,0\n1,oops,-1,0\n";
  }
  ExperimentConfig c;
  try {
    cmd_partition(c, root_ / "bad.csv", root_ / "p.json", 0);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_FALSE(fs::exists(root_ / "p.json"));
}

TEST_F(Cli, SepsWithoutPartitionExplainsWhatToRun) {
  ExperimentConfig c = small("bps-1");
  c.scheme = "seps";
  try {
    cmd_train(c);
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("seps partition"), std::string::npos) << e.what();
  }
}

TEST_F(Cli, TrainWritesEvaluationRowsAndCheckpoints) {
  ExperimentConfig c = small("bps-1");
  c.scheme = "fupsid";
  const auto best = cmd_train(c);
  ASSERT_EQ(best.size(), 1u);
  const fs::path dir = root_ / "bps-1" / "seed0" / "fupsid";
  const auto rows = lines_of(dir / "metrics.csv");
  EXPECT_GE(rows.size() - 2, c.total_steps / c.eval_every);
  EXPECT_EQ(rows[0], "# seps-metrics format=1 config=" + c.hash());
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "actor_0.bin"));
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "critic_0.bin"));
  EXPECT_TRUE(std::isfinite(best[0]));
}

TEST_F(Cli, TrainIsByteIdenticalOnRerun) {
  ExperimentConfig c = small("bps-1");
  c.scheme = "nops";
  cmd_train(c);
  const fs::path m = root_ / "bps-1" / "seed0" / "nops" / "metrics.csv";
  const std::string first = slurp(m);
  cmd_train(c);
  EXPECT_EQ(slurp(m), first);
}

TEST_F(Cli, FullPipelineThenEval) {
  ExperimentConfig c = small("bps-1");
  cmd_pretrain(c);
  const fs::path seed_root = root_ / "bps-1" / "seed0";
  cmd_partition(c, seed_root / "embeddings.csv", seed_root / "partition.json", 0);
  c.scheme = "seps";
  cmd_train(c);
  const fs::path ck = seed_root / "seps" / "checkpoints";
  ASSERT_TRUE(fs::exists(ck / "partition.json"));
  const auto a = cmd_eval(c, ck, root_ / "traj.csv", 5);
  const auto b = cmd_eval(c, ck, {}, 5);
  EXPECT_EQ(a.returns, b.returns);  // greedy and seeded
  EXPECT_EQ(a.returns.size(), c.eval_episodes);
  const auto traj = lines_of(root_ / "traj.csv");
  EXPECT_EQ(traj.size(), 2u + c.eval_episodes * 25 * 15);
  const auto eval_rows = lines_of(seed_root / "seps" / "eval.csv");
  EXPECT_EQ(eval_rows.size(), 2u + c.eval_episodes);
}

TEST_F(Cli, SweepWritesFourRowsPerColourCount) {
  ExperimentConfig c = small("");
  c.c_max = 2;
  c.total_steps = 400;
  c.eval_every = 400;
  const auto cells = cmd_sweep_colours(c);
  EXPECT_EQ(cells.size(), 8u);
  const auto rows = lines_of(root_ / "sweep_colours.csv");
  ASSERT_EQ(rows.size(), 2u + 4 * c.c_max);
  EXPECT_EQ(rows[0], "# seps-sweep format=1 config=" + c.hash());
  EXPECT_EQ(rows[1], "scheme,colours,agents,seeds,max_return_mean,max_return_std");
  EXPECT_EQ(rows[2].rfind("nops,1,10,1,", 0), 0u);
  EXPECT_EQ(rows[9].rfind("fupsid-scaled,2,10,1,", 0), 0u);
}

TEST_F(Cli, BenchmarkCsvSchema) {
  ExperimentConfig c = small("bps-1");
  c.benchmark_timesteps = 40;
  c.benchmark_warmup = 10;
  const auto rows = cmd_benchmark(c, {"fups", "seps", "nops"});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].result.policy_count, 1u);
  EXPECT_EQ(rows[1].result.policy_count, 3u);
  EXPECT_EQ(rows[1].partition_source, "ground_truth");
  EXPECT_EQ(rows[2].result.policy_count, 15u);
  const auto lines = lines_of(root_ / "bps-1" / "benchmark.csv");
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "# seps-benchmark format=1 config=" + c.hash());
  EXPECT_EQ(lines[1], "scheme,policies,parameters,timesteps,median_seconds_per_timestep,partition_source");
  for (std::size_t r = 2; r < 5; ++r) EXPECT_EQ(std::count(lines[r].begin(), lines[r].end(), ','), 5);
}

TEST_F(Cli, BinaryMissingTaskIsAUsageError) {
  EXPECT_EQ(run("pretrain --seed 0"), kUsage);
  EXPECT_NE(stderr_text().find("no task"), std::string::npos);
}

TEST_F(Cli, BinaryUnknownFlagOrVerbIsAUsageError) {
  EXPECT_EQ(run("pretrain --no-such-flag"), kUsage);
  EXPECT_EQ(run("fly"), kUsage);
  EXPECT_EQ(run(""), kUsage);
}

TEST_F(Cli, BinaryRefusesLargeNops) {
  EXPECT_EQ(run("train -t bpsh-3 --scheme nops --seed 0"), kResourceRefusal);
  EXPECT_NE(stderr_text().find("allow_large_nops"), std::string::npos);
}

TEST_F(Cli, BinarySepsWithoutPartitionIsAUsageError) {
  EXPECT_EQ(run("train -t bps-1 --scheme seps --seed 0"), kUsage);
  EXPECT_NE(stderr_text().find("seps partition"), std::string::npos);
}

TEST_F(Cli, BinaryBadConfigFileReportsTheLine) {
  {
    std::ofstream os(root_ / "exp.cfg");
    os << "task = bps-1\n\nlr = quick\n";
  }
  EXPECT_EQ(run("pretrain -c '" + (root_ / "exp.cfg").string() + "'"), kFailure);
  EXPECT_NE(stderr_text().find("line 3"), std::string::npos) << stderr_text();
}

TEST_F(Cli, BinaryPretrainPartitionTrain) {
  const std::string fast = "--seed 0 --set pretrain_steps=2000 --set pretrain_updates=100 ";
  ASSERT_EQ(run("pretrain -t bps-1 " + fast), kOk) << stderr_text();
  ASSERT_EQ(run("partition -t bps-1 " + fast + "--forced-k 3"), kOk) << stderr_text();
  ASSERT_EQ(run("train -t bps-1 --scheme seps " + fast + "--set total_steps=500 --set eval_every=250 "
                "--set eval_episodes=1 --set width=16"),
            kOk)
      << stderr_text();
  EXPECT_TRUE(fs::exists(root_ / "bps-1" / "seed0" / "seps" / "metrics.csv"));
  EXPECT_NE(slurp(root_ / "stdout.txt").find("max eval return"), std::string::npos);
}
