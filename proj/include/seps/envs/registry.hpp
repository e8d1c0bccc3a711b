#pragma once

#include <memory>
#include <regex>
#include <string>
#include <vector>

#include "seps/envs/bps.hpp"
#include "seps/envs/crware.hpp"
#include "seps/envs/lbf.hpp"

namespace seps::envs {

/// Named task configurations. Besides the fixed table entries, custom blind
/// particle spread tasks can be named "bps-n<agents>-c<colours>" or
/// "bpsh-n<agents>-c<colours>" (agents split evenly over colours).
inline const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names = {"bps-1",    "bps-2",    "bps-3",    "bps-4",  "bpsh-1",
                                                 "bpsh-2",   "bpsh-3",   "crware-1", "crware-2", "crware-3",
                                                 "lbf"};
  return names;
}

inline std::unique_ptr<Environment> make_env(const std::string& name) {
  auto bps = [&](std::vector<std::size_t> counts, bool hetero) {
    return std::make_unique<BpsEnv>(BpsConfig{name, std::move(counts), hetero});
  };
  auto crware = [&](std::size_t rows, std::size_t cols, std::size_t per_colour) {
    return std::make_unique<CrwareEnv>(CrwareConfig{name, rows, cols, {per_colour, per_colour}});
  };
  if (name == "bps-1") return bps({5, 5, 5}, false);
  if (name == "bps-2") return bps({10, 10, 10}, false);
  if (name == "bps-3") return bps({6, 6, 6, 6, 6}, false);
  if (name == "bps-4") return bps({2, 2, 2, 15, 9}, false);
  if (name == "bpsh-1") return bps({5, 5, 5}, true);
  if (name == "bpsh-2") return bps({6, 6, 6, 6, 6}, true);
  if (name == "bpsh-3") return bps({50, 50, 50, 50}, true);
  if (name == "crware-1") return crware(11, 10, 2);
  if (name == "crware-2") return crware(11, 20, 4);
  if (name == "crware-3") return crware(11, 20, 8);
  if (name == "lbf") return std::make_unique<LbfEnv>(LbfConfig{});

  static const std::regex custom(R"((bpsh?)-n(\d+)-c(\d+))");
  if (std::smatch m; std::regex_match(name, m, custom)) {
    const std::size_t n = std::stoul(m[2]), c = std::stoul(m[3]);
    if (c == 0 || n < c) throw ContractViolation("task " + name + ": need 1 <= colours <= agents");
    return bps(even_split(n, c), m[1] == "bpsh");
  }
  throw ContractViolation("unknown task '" + name + "'");
}

inline std::string colour_task_name(bool heterogeneous, std::size_t agents, std::size_t colours) {
  return std::string(heterogeneous ? "bpsh" : "bps") + "-n" + std::to_string(agents) + "-c" + std::to_string(colours);
}

}  // namespace seps::envs
