#pragma once

#include <map>
#include <sstream>

#include "seps/envs/environment.hpp"

namespace seps::envs {

struct LbfConfig {
  std::string name = "lbf";
  std::size_t grid_size = 20;
  std::vector<std::size_t> level_counts{4, 4, 4};  // agents with level 1, 2, 3, ...
  std::size_t n_foods = 6;
  int max_food_level = 4;
  std::size_t horizon = 50;
};

/// Level-based foraging.
///
/// Actions: 0 no-op, 1 up, 2 down, 3 left, 4 right, 5 forage. A food is
/// collected when the agents foraging from the four adjacent cells have
/// levels summing to at least the food level; each collector is paid
/// level_i * food_level / (sum of collector levels * total food level spawned),
/// so a fully foraged episode pays 1.0 in total. Agents observe every
/// position and food level but no agent levels.
class LbfEnv final : public Environment {
 public:
  enum Action : int { kNoop = 0, kUp = 1, kDown = 2, kLeft = 3, kRight = 4, kForage = 5 };
  struct Food {
    int row = 0, col = 0, level = 0;
    bool eaten = false;
  };
  struct Agent {
    int row = 0, col = 0, level = 1;
  };

  explicit LbfEnv(LbfConfig cfg) : Environment(make_spec(cfg)), cfg_(std::move(cfg)) {
    agents_.resize(spec_.n_agents);
    for (std::size_t i = 0; i < spec_.n_agents; ++i) agents_[i].level = spec_.ground_truth_types[i] + 1;
  }

  static MarkovGameSpec make_spec(const LbfConfig& cfg) {
    MarkovGameSpec s;
    s.name = cfg.name;
    s.ground_truth_types = expand_types(cfg.level_counts);
    s.n_agents = s.ground_truth_types.size();
    if (s.n_agents == 0 || cfg.n_foods == 0) throw ContractViolation("LBF: need agents and foods");
    if (cfg.grid_size < 5) throw ContractViolation("LBF: grid too small");
    s.horizon = cfg.horizon;
    const std::size_t dim = 2 * s.n_agents + 3 * cfg.n_foods;
    s.obs_dims.assign(s.n_agents, dim);
    s.action_counts.assign(s.n_agents, 6);
    return s;
  }

  const std::vector<Agent>& agents() const noexcept { return agents_; }
  const std::vector<Food>& foods() const noexcept { return foods_; }
  double total_food_level() const noexcept { return total_food_level_; }

  /// Test hook; levels of `agents` are taken as given.
  void set_state(std::vector<Agent> agents, std::vector<Food> foods) {
    if (agents.size() != spec_.n_agents || foods.size() != cfg_.n_foods) throw DimensionError("LBF: state sizes");
    agents_ = std::move(agents);
    foods_ = std::move(foods);
    total_food_level_ = 0;
    for (const auto& f : foods_) total_food_level_ += f.level;
    t_ = 0;
    live_ = true;
  }

  Observation observe(std::size_t i) const {
    const double scale = 1.0 / static_cast<double>(cfg_.grid_size - 1);
    Observation o;
    o.reserve(spec_.obs_dims[i]);
    auto push_agent = [&](const Agent& a) {
      o.push_back(a.row * scale);
      o.push_back(a.col * scale);
    };
    push_agent(agents_[i]);
    for (std::size_t j = 0; j < agents_.size(); ++j)
      if (j != i) push_agent(agents_[j]);
    for (const Food& f : foods_) {
      if (f.eaten) {
        o.insert(o.end(), {-1.0, -1.0, 0.0});
      } else {
        o.insert(o.end(), {f.row * scale, f.col * scale, static_cast<double>(f.level) / cfg_.max_food_level});
      }
    }
    return o;
  }

  std::vector<Observation> observations() const override {
    std::vector<Observation> obs;
    obs.reserve(spec_.n_agents);
    for (std::size_t i = 0; i < spec_.n_agents; ++i) obs.push_back(observe(i));
    return obs;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<LbfEnv>(*this); }

  std::string render_ascii() const override {
    std::vector<std::string> grid(cfg_.grid_size, std::string(cfg_.grid_size, '.'));
    for (const Food& f : foods_)
      if (!f.eaten) grid[f.row][f.col] = static_cast<char>('0' + f.level);
    for (const Agent& a : agents_) grid[a.row][a.col] = static_cast<char>('a' + a.level - 1);
    std::ostringstream os;
    for (const auto& row : grid) os << row << '\n';
    return os.str();
  }

 protected:
  std::vector<Observation> do_reset() override {
    const int n = static_cast<int>(cfg_.grid_size);
    foods_.assign(cfg_.n_foods, Food{});
    total_food_level_ = 0;
    for (std::size_t k = 0; k < cfg_.n_foods; ++k) {
      // Interior cells, no two foods touching (8-neighbourhood).
      for (;;) {
        const int r = 1 + static_cast<int>(uniform_index(rng_, static_cast<std::size_t>(n - 2)));
        const int c = 1 + static_cast<int>(uniform_index(rng_, static_cast<std::size_t>(n - 2)));
        bool clash = false;
        for (std::size_t q = 0; q < k; ++q)
          clash |= std::abs(foods_[q].row - r) <= 1 && std::abs(foods_[q].col - c) <= 1;
        if (clash) continue;
        foods_[k] = {r, c, 1 + static_cast<int>(uniform_index(rng_, static_cast<std::size_t>(cfg_.max_food_level))),
                     false};
        total_food_level_ += foods_[k].level;
        break;
      }
    }
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      for (;;) {
        const int r = static_cast<int>(uniform_index(rng_, cfg_.grid_size));
        const int c = static_cast<int>(uniform_index(rng_, cfg_.grid_size));
        if (occupied(r, c, i)) continue;
        agents_[i].row = r;
        agents_[i].col = c;
        break;
      }
    }
    return observations();
  }

  StepResult do_step(std::span<const int> actions) override {
    static constexpr int dr[5] = {0, -1, 1, 0, 0};
    static constexpr int dc[5] = {0, 0, 0, -1, 1};
    const int n = static_cast<int>(cfg_.grid_size);
    StepResult res;
    res.rewards.assign(spec_.n_agents, 0.0);

    // Movement: agents whose targets collide all stay put; repeat until no
    // two agents claim the same cell.
    std::vector<std::pair<int, int>> target(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      int r = agents_[i].row, c = agents_[i].col;
      const int a = actions[i];
      if (a >= kUp && a <= kRight) {
        const int tr = r + dr[a], tc = c + dc[a];
        if (tr >= 0 && tc >= 0 && tr < n && tc < n && !food_at(tr, tc)) {
          r = tr;
          c = tc;
        }
      }
      target[i] = {r, c};
    }
    for (bool conflict = true; conflict;) {
      conflict = false;
      std::map<std::pair<int, int>, std::vector<std::size_t>> claims;
      for (std::size_t i = 0; i < agents_.size(); ++i) claims[target[i]].push_back(i);
      for (const auto& [pos, who] : claims) {
        if (who.size() < 2) continue;
        for (std::size_t i : who) {
          const std::pair<int, int> home{agents_[i].row, agents_[i].col};
          if (target[i] != home) {
            target[i] = home;
            conflict = true;
          }
        }
      }
    }
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      agents_[i].row = target[i].first;
      agents_[i].col = target[i].second;
    }

    for (Food& f : foods_) {
      if (f.eaten) continue;
      std::vector<std::size_t> loaders;
      int level_sum = 0;
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (actions[i] != kForage) continue;
        if (std::abs(agents_[i].row - f.row) + std::abs(agents_[i].col - f.col) != 1) continue;
        loaders.push_back(i);
        level_sum += agents_[i].level;
      }
      if (loaders.empty() || level_sum < f.level) continue;
      f.eaten = true;
      for (std::size_t i : loaders)
        res.rewards[i] = static_cast<double>(agents_[i].level) * f.level / (static_cast<double>(level_sum) * total_food_level_);
    }
    res.done = std::all_of(foods_.begin(), foods_.end(), [](const Food& f) { return f.eaten; });
    res.observations = observations();
    return res;
  }

 private:
  bool food_at(int r, int c) const {
    for (const Food& f : foods_)
      if (!f.eaten && f.row == r && f.col == c) return true;
    return false;
  }
  bool occupied(int r, int c, std::size_t upto) const {
    if (food_at(r, c)) return true;
    for (std::size_t j = 0; j < upto; ++j)
      if (agents_[j].row == r && agents_[j].col == c) return true;
    return false;
  }

  LbfConfig cfg_;
  std::vector<Agent> agents_;
  std::vector<Food> foods_;
  double total_food_level_ = 0;
};

}  // namespace seps::envs
