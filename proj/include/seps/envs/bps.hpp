#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "seps/envs/environment.hpp"

namespace seps::envs {

struct BpsConfig {
  std::string name = "bps";
  std::vector<std::size_t> colour_counts;  // agents per colour, in colour order
  bool heterogeneous = false;              // BPS-h sensor permutations and padding
  std::size_t horizon = 25;
  double move_step = 0.05;
};

using Point = std::array<double, 2>;

/// Full simulator state. `colours` decides rewards only; the sensor layout is
/// fixed per agent index by its ground-truth type.
struct BpsState {
  std::vector<Point> agents;
  std::vector<Point> landmarks;  // one per colour, colour order
  std::vector<int> colours;
};

/// Blind-particle spread on [-1,1]^2 with discrete moves.
///
/// Actions: 0 no-op, 1 +x, 2 -x, 3 +y, 4 -y. Observation: own position, then
/// every landmark relative to the agent in (sensor-permuted) colour order,
/// then k zeros for sensor type k in the heterogeneous variant. Reward is the
/// negative distance to the agent's own-colour landmark.
class BpsEnv final : public Environment {
 public:
  explicit BpsEnv(BpsConfig cfg) : Environment(make_spec(cfg)), cfg_(std::move(cfg)) {
    state_.colours = spec_.ground_truth_types;
  }

  static MarkovGameSpec make_spec(const BpsConfig& cfg) {
    if (cfg.colour_counts.empty()) throw ContractViolation("BPS: need at least one colour");
    MarkovGameSpec s;
    s.name = cfg.name;
    s.ground_truth_types = expand_types(cfg.colour_counts);
    s.n_agents = s.ground_truth_types.size();
    if (s.n_agents == 0) throw ContractViolation("BPS: need at least one agent");
    s.horizon = cfg.horizon;
    const std::size_t c = cfg.colour_counts.size();
    for (int type : s.ground_truth_types) {
      s.obs_dims.push_back(2 + 2 * c + (cfg.heterogeneous ? static_cast<std::size_t>(type) : 0));
      s.action_counts.push_back(5);
    }
    return s;
  }

  std::size_t colour_count() const noexcept { return cfg_.colour_counts.size(); }
  const BpsConfig& config() const noexcept { return cfg_; }
  const BpsState& state() const noexcept { return state_; }

  /// Replaces the simulator state (test hook); the episode becomes live at t = 0.
  void set_state(BpsState s) {
    if (s.agents.size() != spec_.n_agents || s.colours.size() != spec_.n_agents ||
        s.landmarks.size() != colour_count())
      throw DimensionError("BPS: state sizes do not match the task");
    state_ = std::move(s);
    t_ = 0;
    live_ = true;
  }

  /// Landmark (colour) shown in slot j for sensor type k.
  std::size_t sensor_slot(int type, std::size_t j) const {
    const std::size_t c = colour_count();
    if (!cfg_.heterogeneous) return j;
    return (j + 2 * static_cast<std::size_t>(type)) % c;
  }

  Observation observe(std::size_t i) const {
    const int type = spec_.ground_truth_types[i];
    Observation o;
    o.reserve(spec_.obs_dims[i]);
    const Point& p = state_.agents[i];
    o.push_back(p[0]);
    o.push_back(p[1]);
    for (std::size_t j = 0; j < colour_count(); ++j) {
      const Point& l = state_.landmarks[sensor_slot(type, j)];
      o.push_back(l[0] - p[0]);
      o.push_back(l[1] - p[1]);
    }
    o.resize(spec_.obs_dims[i], 0.0);
    return o;
  }

  std::vector<Observation> observations() const override {
    std::vector<Observation> obs;
    obs.reserve(spec_.n_agents);
    for (std::size_t i = 0; i < spec_.n_agents; ++i) obs.push_back(observe(i));
    return obs;
  }

  double distance_to_target(std::size_t i) const {
    const Point& p = state_.agents[i];
    const Point& l = state_.landmarks[static_cast<std::size_t>(state_.colours[i])];
    return std::hypot(p[0] - l[0], p[1] - l[1]);
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<BpsEnv>(*this); }

  std::string render_ascii() const override {
    constexpr int W = 41, H = 21;
    std::vector<std::string> grid(H, std::string(W, '.'));
    auto put = [&](const Point& p, char ch) {
      const int x = std::clamp(static_cast<int>(std::lround((p[0] + 1.0) / 2.0 * (W - 1))), 0, W - 1);
      const int y = std::clamp(static_cast<int>(std::lround((1.0 - p[1]) / 2.0 * (H - 1))), 0, H - 1);
      grid[y][x] = ch;
    };
    for (std::size_t i = 0; i < state_.agents.size(); ++i) put(state_.agents[i], static_cast<char>('a' + state_.colours[i] % 26));
    for (std::size_t k = 0; k < state_.landmarks.size(); ++k) put(state_.landmarks[k], static_cast<char>('A' + k % 26));
    std::ostringstream os;
    for (const auto& row : grid) os << row << '\n';
    return os.str();
  }

 protected:
  std::vector<Observation> do_reset() override {
    auto draw = [&] { return Point{2.0 * uniform01(rng_) - 1.0, 2.0 * uniform01(rng_) - 1.0}; };
    state_.landmarks.resize(colour_count());
    for (auto& l : state_.landmarks) l = draw();
    state_.agents.resize(spec_.n_agents);
    for (auto& a : state_.agents) a = draw();
    state_.colours = spec_.ground_truth_types;
    return observations();
  }

  StepResult do_step(std::span<const int> actions) override {
    static constexpr double dx[5] = {0, 1, -1, 0, 0};
    static constexpr double dy[5] = {0, 0, 0, 1, -1};
    StepResult r;
    r.rewards.resize(spec_.n_agents);
    for (std::size_t i = 0; i < spec_.n_agents; ++i) {
      Point& p = state_.agents[i];
      p[0] = std::clamp(p[0] + cfg_.move_step * dx[actions[i]], -1.0, 1.0);
      p[1] = std::clamp(p[1] + cfg_.move_step * dy[actions[i]], -1.0, 1.0);
    }
    for (std::size_t i = 0; i < spec_.n_agents; ++i) r.rewards[i] = -distance_to_target(i);
    r.observations = observations();
    return r;
  }

 private:
  BpsConfig cfg_;
  BpsState state_;
};

}  // namespace seps::envs
