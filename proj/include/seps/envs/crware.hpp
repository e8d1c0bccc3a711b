#pragma once

#include <algorithm>
#include <sstream>

#include "seps/envs/environment.hpp"

namespace seps::envs {

struct CrwareConfig {
  std::string name = "crware";
  std::size_t rows = 11;
  std::size_t cols = 10;
  std::vector<std::size_t> colour_counts{2, 2};  // agents per colour
  std::size_t horizon = 500;
};

/// Coloured multi-robot warehouse.
///
/// Actions: 0 rotate left, 1 rotate right, 2 forward, 3 load/unload, 4 no-op;
/// agents of colour 1 get a sixth, always no-op, action. A robot can lift only
/// shelves of its own colour and can set a shelf down only on an empty rack
/// cell. Carrying a requested shelf onto a goal cell pays that robot 1.0 and
/// moves the request to another shelf. Observation: 3x3 window centred on the
/// robot, four features per cell (shelf, shelf colour, requested, other robot),
/// then orientation one-hot and a carrying flag.
class CrwareEnv final : public Environment {
 public:
  static constexpr std::size_t kCellFeatures = 4;
  static constexpr std::size_t kObsDim = 9 * kCellFeatures + 4 + 1;
  enum Action : int { kRotateLeft = 0, kRotateRight = 1, kForward = 2, kToggleLoad = 3, kNoop = 4, kExtraNoop = 5 };

  struct Shelf {
    int row = 0, col = 0, colour = 0;
    bool requested = false;
  };
  struct Robot {
    int row = 0, col = 0, dir = 0;  // dir: 0 up, 1 right, 2 down, 3 left
    int colour = 0;
    int carrying = -1;  // shelf index
  };

  explicit CrwareEnv(CrwareConfig cfg) : Environment(make_spec(cfg)), cfg_(std::move(cfg)) { build_layout(); }

  static MarkovGameSpec make_spec(const CrwareConfig& cfg) {
    if (cfg.colour_counts.size() != 2) throw ContractViolation("C-RWARE: exactly two colours are supported");
    if (cfg.rows < 6 || cfg.cols < 4) throw ContractViolation("C-RWARE: grid too small");
    MarkovGameSpec s;
    s.name = cfg.name;
    s.ground_truth_types = expand_types(cfg.colour_counts);
    s.n_agents = s.ground_truth_types.size();
    s.horizon = cfg.horizon;
    for (int type : s.ground_truth_types) {
      s.obs_dims.push_back(kObsDim);
      s.action_counts.push_back(type == 0 ? 5 : 6);
    }
    return s;
  }

  bool is_rack(int r, int c) const { return rack_[cell(r, c)]; }
  bool is_goal(int r, int c) const { return goal_[cell(r, c)]; }
  const std::vector<Shelf>& shelves() const noexcept { return shelves_; }
  const std::vector<Robot>& robots() const noexcept { return robots_; }
  std::size_t rows() const noexcept { return cfg_.rows; }
  std::size_t cols() const noexcept { return cfg_.cols; }

  /// Test hook: overwrite robots/shelves; occupancy maps are rebuilt.
  void set_state(std::vector<Robot> robots, std::vector<Shelf> shelves) {
    if (robots.size() != spec_.n_agents) throw DimensionError("C-RWARE: robot count");
    robots_ = std::move(robots);
    shelves_ = std::move(shelves);
    rebuild_maps();
    t_ = 0;
    live_ = true;
  }

  std::vector<Observation> observations() const override {
    std::vector<Observation> obs;
    obs.reserve(spec_.n_agents);
    for (std::size_t i = 0; i < spec_.n_agents; ++i) obs.push_back(observe(i));
    return obs;
  }

  Observation observe(std::size_t i) const {
    const Robot& me = robots_[i];
    Observation o(kObsDim, 0.0);
    std::size_t k = 0;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc, k += kCellFeatures) {
        const int r = me.row + dr, c = me.col + dc;
        if (!in_bounds(r, c)) continue;
        if (const int s = shelf_at_[cell(r, c)]; s >= 0) {
          o[k] = 1.0;
          o[k + 1] = shelves_[s].colour == 1 ? 1.0 : 0.0;
          o[k + 2] = shelves_[s].requested ? 1.0 : 0.0;
        }
        if (const int a = robot_at_[cell(r, c)]; a >= 0 && static_cast<std::size_t>(a) != i) o[k + 3] = 1.0;
      }
    }
    o[k + static_cast<std::size_t>(me.dir)] = 1.0;
    o[k + 4] = me.carrying >= 0 ? 1.0 : 0.0;
    return o;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<CrwareEnv>(*this); }

  std::string render_ascii() const override {
    std::ostringstream os;
    for (int r = 0; r < static_cast<int>(cfg_.rows); ++r) {
      for (int c = 0; c < static_cast<int>(cfg_.cols); ++c) {
        char ch = is_goal(r, c) ? 'G' : (is_rack(r, c) ? ':' : '.');
        if (const int s = shelf_at_[cell(r, c)]; s >= 0) {
          ch = shelves_[s].colour == 0 ? 'a' : 'b';
          if (shelves_[s].requested) ch = static_cast<char>(ch - 'a' + 'A');
        }
        if (const int a = robot_at_[cell(r, c)]; a >= 0) ch = static_cast<char>('0' + a % 10);
        os << ch;
      }
      os << '\n';
    }
    return os.str();
  }

 protected:
  std::vector<Observation> do_reset() override {
    // Shelves on every rack, colours balanced and shuffled.
    shelves_.clear();
    for (int r = 0; r < static_cast<int>(cfg_.rows); ++r)
      for (int c = 0; c < static_cast<int>(cfg_.cols); ++c)
        if (is_rack(r, c)) shelves_.push_back({r, c, 0, false});
    std::vector<int> colours(shelves_.size());
    for (std::size_t s = 0; s < colours.size(); ++s) colours[s] = static_cast<int>(s % 2);
    std::shuffle(colours.begin(), colours.end(), rng_);
    for (std::size_t s = 0; s < shelves_.size(); ++s) shelves_[s].colour = colours[s];

    std::vector<std::size_t> cells(cfg_.rows * cfg_.cols);
    std::iota(cells.begin(), cells.end(), std::size_t{0});
    std::shuffle(cells.begin(), cells.end(), rng_);
    robots_.assign(spec_.n_agents, Robot{});
    for (std::size_t i = 0; i < spec_.n_agents; ++i) {
      robots_[i].row = static_cast<int>(cells[i] / cfg_.cols);
      robots_[i].col = static_cast<int>(cells[i] % cfg_.cols);
      robots_[i].dir = static_cast<int>(uniform_index(rng_, 4));
      robots_[i].colour = spec_.ground_truth_types[i];
    }
    for (std::size_t q = 0; q < std::min(spec_.n_agents, shelves_.size()); ++q) add_request(-1);
    rebuild_maps();
    return observations();
  }

  StepResult do_step(std::span<const int> actions) override {
    static constexpr int dr[4] = {-1, 0, 1, 0};
    static constexpr int dc[4] = {0, 1, 0, -1};
    StepResult res;
    res.rewards.assign(spec_.n_agents, 0.0);
    for (std::size_t i = 0; i < spec_.n_agents; ++i) {
      Robot& rb = robots_[i];
      switch (actions[i]) {
        case kRotateLeft: rb.dir = (rb.dir + 3) % 4; break;
        case kRotateRight: rb.dir = (rb.dir + 1) % 4; break;
        case kForward: {
          const int r = rb.row + dr[rb.dir], c = rb.col + dc[rb.dir];
          if (!in_bounds(r, c) || robot_at_[cell(r, c)] >= 0) break;
          if (rb.carrying >= 0 && shelf_at_[cell(r, c)] >= 0) break;
          robot_at_[cell(rb.row, rb.col)] = -1;
          if (rb.carrying >= 0) {
            shelf_at_[cell(rb.row, rb.col)] = -1;
            shelf_at_[cell(r, c)] = rb.carrying;
            shelves_[rb.carrying].row = r;
            shelves_[rb.carrying].col = c;
          }
          rb.row = r;
          rb.col = c;
          robot_at_[cell(r, c)] = static_cast<int>(i);
          break;
        }
        case kToggleLoad: {
          if (rb.carrying >= 0) {
            if (is_rack(rb.row, rb.col)) rb.carrying = -1;  // shelf stays in place on the rack
          } else if (const int s = shelf_at_[cell(rb.row, rb.col)]; s >= 0 && shelves_[s].colour == rb.colour) {
            rb.carrying = s;
          }
          break;
        }
        default: break;
      }
    }
    for (std::size_t i = 0; i < spec_.n_agents; ++i) {
      Robot& rb = robots_[i];
      if (rb.carrying < 0 || !is_goal(rb.row, rb.col)) continue;
      Shelf& sh = shelves_[rb.carrying];
      if (!sh.requested || sh.colour != rb.colour) continue;
      sh.requested = false;
      res.rewards[i] = 1.0;
      add_request(rb.carrying);
    }
    res.observations = observations();
    return res;
  }

 private:
  std::size_t cell(int r, int c) const { return static_cast<std::size_t>(r) * cfg_.cols + static_cast<std::size_t>(c); }
  bool in_bounds(int r, int c) const {
    return r >= 0 && c >= 0 && r < static_cast<int>(cfg_.rows) && c < static_cast<int>(cfg_.cols);
  }

  // Racks: two-wide column blocks separated by one-wide aisles, a cross aisle
  // every fourth row, and three free rows at the bottom with the goals in the
  // middle of the last row.
  void build_layout() {
    rack_.assign(cfg_.rows * cfg_.cols, false);
    goal_.assign(cfg_.rows * cfg_.cols, false);
    for (std::size_t r = 1; r + 3 < cfg_.rows; ++r) {
      if (r % 4 == 0) continue;
      for (std::size_t c = 0; c + 1 < cfg_.cols; ++c)
        if (c % 3 != 0) rack_[r * cfg_.cols + c] = true;
    }
    const std::size_t last = cfg_.rows - 1;
    goal_[last * cfg_.cols + cfg_.cols / 2 - 1] = true;
    goal_[last * cfg_.cols + cfg_.cols / 2] = true;
  }

  void rebuild_maps() {
    shelf_at_.assign(cfg_.rows * cfg_.cols, -1);
    robot_at_.assign(cfg_.rows * cfg_.cols, -1);
    for (std::size_t s = 0; s < shelves_.size(); ++s) shelf_at_[cell(shelves_[s].row, shelves_[s].col)] = static_cast<int>(s);
    for (std::size_t i = 0; i < robots_.size(); ++i) robot_at_[cell(robots_[i].row, robots_[i].col)] = static_cast<int>(i);
  }

  /// Requests a uniformly drawn shelf that is not requested and is not `exclude`.
  void add_request(int exclude) {
    std::vector<std::size_t> pool;
    for (std::size_t s = 0; s < shelves_.size(); ++s)
      if (!shelves_[s].requested && static_cast<int>(s) != exclude) pool.push_back(s);
    if (pool.empty()) return;
    shelves_[pool[uniform_index(rng_, pool.size())]].requested = true;
  }

  CrwareConfig cfg_;
  std::vector<bool> rack_, goal_;
  std::vector<Shelf> shelves_;
  std::vector<Robot> robots_;
  std::vector<int> shelf_at_, robot_at_;
};

}  // namespace seps::envs
