#pragma once

#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "seps/csv.hpp"
#include "seps/encoder/model.hpp"
#include "seps/trainer/train.hpp"

namespace seps::experiment {

/// Refused because the run would need unreasonable compute or memory.
class ResourceRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything one invocation needs. Zero in a "0 = task default" field means
/// the value is taken from the task (see task_defaults).
struct ExperimentConfig {
  std::string task;
  std::string scheme = "seps";
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string output_dir = ".";

  // encoder
  std::size_t latent_dim = 5;
  double kl_beta = 1e-4;
  std::size_t encoder_batch = 128;
  std::size_t encoder_width = 64;
  std::size_t pretrain_steps = 20'000;  // environment transitions
  std::size_t pretrain_envs = 8;
  std::size_t pretrain_updates = 5'000;
  std::size_t replay_capacity = 500'000;
  bool reward_uses_next_obs = false;

  // trainer
  double lr = 3e-4;
  double adam_eps = 1e-5;
  double entropy_coef = 1e-2;
  double gamma = 0.99;
  double max_grad_norm = 0.5;
  std::size_t n_steps = 5;
  std::size_t n_envs = 8;
  std::size_t width = 0;        // 0 = task default
  std::size_t total_steps = 0;  // 0 = task default
  std::size_t eval_every = 10'000;
  std::size_t eval_episodes = 10;
  bool record_wall_clock = true;
  bool stagger_envs = true;
  bool bootstrap_time_limits = true;

  // partitioning
  std::size_t k_max = 0;     // 0 = min(N, 10)
  std::size_t forced_k = 0;  // 0 = select by Davies-Bouldin

  // commands
  std::size_t c_max = 4;              // sweep-colours
  std::size_t sweep_agents = 10;      // sweep-colours
  std::size_t benchmark_timesteps = 1'000;
  std::size_t benchmark_warmup = 100;
  bool allow_large_nops = false;

  void set(const std::string& key, const std::string& value);
  /// Canonical key=value lines, sorted by key.
  std::vector<std::pair<std::string, std::string>> entries() const;
  /// Hash of every entry except output_dir.
  std::string hash() const;

  encoder::EncoderConfig encoder_config() const {
    encoder::EncoderConfig c;
    c.latent_dim = latent_dim;
    c.hidden_width = encoder_width;
    c.kl_beta = kl_beta;
    c.reward_uses_next_obs = reward_uses_next_obs;
    c.adam.learning_rate = lr;
    c.adam.epsilon = adam_eps;
    return c;
  }

  trainer::TrainConfig train_config(const envs::MarkovGameSpec& spec) const;
};

struct TaskDefaults {
  std::size_t width;
  std::size_t total_steps;
};

inline TaskDefaults task_defaults(const std::string& task) {
  if (task.rfind("crware", 0) == 0) return {64, 5'000'000};
  return {128, 2'000'000};
}

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ContractViolation("config: bad value '" + v + "' for key '" + key + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ContractViolation("config: bad boolean '" + v + "' for key '" + key + "'");
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field num(T ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = parse_number<T>(k, v); },
          [m](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return csv::format(c.*m);
            else
              return std::to_string(c.*m);
          }};
}

inline Field flag(bool ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = parse_bool(k, v); },
          [m](const ExperimentConfig& c) { return std::string(c.*m ? "1" : "0"); }};
}

inline Field str(std::string ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string&, const std::string& v) { c.*m = v; },
          [m](const ExperimentConfig& c) { return c.*m; }};
}

inline const std::map<std::string, Field>& fields() {
  using C = ExperimentConfig;
  static const std::map<std::string, Field> f = {
      {"task", str(&C::task)},
      {"scheme", str(&C::scheme)},
      {"output_dir", str(&C::output_dir)},
      {"seeds",
       {[](C& c, const std::string& k, const std::string& v) {
          c.seeds.clear();
          for (auto part : csv::split(v, ',')) c.seeds.push_back(parse_number<std::uint64_t>(k, std::string(csv::trim(part))));
          if (c.seeds.empty()) throw ContractViolation("config: seeds must not be empty");
        },
        [](const C& c) {
          std::string s;
          for (std::size_t i = 0; i < c.seeds.size(); ++i) s += (i ? "," : "") + std::to_string(c.seeds[i]);
          return s;
        }}},
      {"latent_dim", num(&C::latent_dim)},
      {"kl_beta", num(&C::kl_beta)},
      {"encoder_batch", num(&C::encoder_batch)},
      {"encoder_width", num(&C::encoder_width)},
      {"pretrain_steps", num(&C::pretrain_steps)},
      {"pretrain_envs", num(&C::pretrain_envs)},
      {"pretrain_updates", num(&C::pretrain_updates)},
      {"replay_capacity", num(&C::replay_capacity)},
      {"reward_uses_next_obs", flag(&C::reward_uses_next_obs)},
      {"lr", num(&C::lr)},
      {"adam_eps", num(&C::adam_eps)},
      {"entropy_coef", num(&C::entropy_coef)},
      {"gamma", num(&C::gamma)},
      {"max_grad_norm", num(&C::max_grad_norm)},
      {"n_steps", num(&C::n_steps)},
      {"n_envs", num(&C::n_envs)},
      {"width", num(&C::width)},
      {"total_steps", num(&C::total_steps)},
      {"eval_every", num(&C::eval_every)},
      {"eval_episodes", num(&C::eval_episodes)},
      {"record_wall_clock", flag(&C::record_wall_clock)},
      {"stagger_envs", flag(&C::stagger_envs)},
      {"bootstrap_time_limits", flag(&C::bootstrap_time_limits)},
      {"k_max", num(&C::k_max)},
      {"forced_k", num(&C::forced_k)},
      {"c_max", num(&C::c_max)},
      {"sweep_agents", num(&C::sweep_agents)},
      {"benchmark_timesteps", num(&C::benchmark_timesteps)},
      {"benchmark_warmup", num(&C::benchmark_warmup)},
      {"allow_large_nops", flag(&C::allow_large_nops)},
  };
  return f;
}

}  // namespace detail

inline void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto& f = detail::fields();
  auto it = f.find(key);
  if (it == f.end()) throw ContractViolation("config: unknown key '" + key + "'");
  it->second.set(*this, key, value);
}

inline std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, f] : detail::fields()) out.emplace_back(k, f.get(*this));
  return out;
}

inline std::string ExperimentConfig::hash() const {
  std::string canon;
  for (const auto& [k, v] : entries())
    if (k != "output_dir") canon += k + "=" + v + "\n";
  return csv::hex(csv::fnv1a(canon));
}

inline trainer::TrainConfig ExperimentConfig::train_config(const envs::MarkovGameSpec& spec) const {
  const TaskDefaults d = task_defaults(spec.name);
  trainer::TrainConfig t;
  t.total_steps = total_steps ? total_steps : d.total_steps;
  t.width = width ? width : d.width;
  t.eval_every = eval_every;
  t.eval_episodes = eval_episodes;
  t.n_envs = n_envs;
  t.n_steps = n_steps;
  t.a2c.gamma = gamma;
  t.a2c.entropy_coef = entropy_coef;
  t.a2c.max_grad_norm = max_grad_norm;
  t.a2c.bootstrap_time_limits = bootstrap_time_limits;
  t.adam.learning_rate = lr;
  t.adam.epsilon = adam_eps;
  t.record_wall_clock = record_wall_clock;
  t.stagger_envs = stagger_envs;
  return t;
}

/// Applies "key = value" lines; '#' starts a comment.
inline void apply_config_stream(ExperimentConfig& cfg, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    std::string_view body = csv::trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
    const std::string key(csv::trim(body.substr(0, eq)));
    const std::string value(csv::trim(body.substr(eq + 1)));
    try {
      cfg.set(key, value);
    } catch (const ContractViolation& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

inline void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  apply_config_stream(cfg, in);
}

/// "key=value" from the command line.
inline void apply_override(ExperimentConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ContractViolation("override '" + kv + "' is not key=value");
  cfg.set(std::string(csv::trim(std::string_view(kv).substr(0, eq))),
          std::string(csv::trim(std::string_view(kv).substr(eq + 1))));
}

inline void write_config(std::ostream& os, const ExperimentConfig& cfg) {
  os << "# seps-config format=1 config=" << cfg.hash() << "\n";
  for (const auto& [k, v] : cfg.entries()) os << k << " = " << v << "\n";
}

}  // namespace seps::experiment
