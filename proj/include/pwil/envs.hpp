#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwil/config.hpp"
#include "pwil/types.hpp"

namespace pwil {

enum class EnvKind { LineWorld, GridWorld, PointMass };

// Gridworld task flavors. Reach terminates on goal entry; Hold runs the
// full horizon with the goal absorbing by wall-bump; Loop rewards staying
// on a patrol circuit the expert walks repeatedly, which is the setting
// that separates capacity-tracking rewards from plain support rewards.
enum class GridTask { Reach, Hold, Loop };

struct EnvSpec {
  EnvKind kind = EnvKind::GridWorld;
  int horizon = 32;
  bool uniform_start = false;

  // gridworld
  int grid_size = 8;
  GridTask grid_task = GridTask::Hold;
  int goal_cx = 7, goal_cy = 7;
  int start_cx = 0, start_cy = 0;

  // pointmass / lineworld
  double step_len = 0.1;
  double goal_x = 0.8, goal_y = 0.8;
  double goal_radius = 0.15;
  double start_x = 0.1, start_y = 0.1;
  double start_lo = 0.0, start_hi = 0.3;
  double line_min = 0.0, line_max = 10.0;

  int state_dim() const { return kind == EnvKind::LineWorld ? 1 : 2; }
  int action_dim() const { return kind == EnvKind::LineWorld ? 1 : 2; }
  int num_actions() const {
    switch (kind) {
      case EnvKind::LineWorld: return 3;
      case EnvKind::GridWorld: return 4;
      case EnvKind::PointMass: return 8;
    }
    return 0;
  }

  std::vector<double> state_lo() const {
    switch (kind) {
      case EnvKind::LineWorld: return {line_min};
      case EnvKind::GridWorld: return {0.0, 0.0};
      case EnvKind::PointMass: return {0.0, 0.0};
    }
    return {};
  }

  std::vector<double> state_hi() const {
    switch (kind) {
      case EnvKind::LineWorld: return {line_max};
      case EnvKind::GridWorld: {
        double m = static_cast<double>(grid_size - 1);
        return {m, m};
      }
      case EnvKind::PointMass: return {1.0, 1.0};
    }
    return {};
  }

  static EnvSpec gridworld(int size, int horizon, GridTask task) {
    EnvSpec s;
    s.kind = EnvKind::GridWorld;
    s.grid_size = size;
    s.horizon = horizon;
    s.grid_task = task;
    s.goal_cx = size - 1;
    s.goal_cy = size - 1;
    if (task == GridTask::Loop) {
      s.start_cx = 1;
      s.start_cy = 1;
    }
    return s;
  }

  static EnvSpec pointmass(int horizon, double step_len = 0.1) {
    EnvSpec s;
    s.kind = EnvKind::PointMass;
    s.horizon = horizon;
    s.step_len = step_len;
    s.goal_radius = 1.5 * step_len;
    return s;
  }

  static EnvSpec lineworld(int horizon, double step_len = 1.0) {
    EnvSpec s;
    s.kind = EnvKind::LineWorld;
    s.horizon = horizon;
    s.step_len = step_len;
    s.goal_x = 8.0;
    s.start_x = 2.0;
    s.goal_radius = 0.5 * step_len;
    return s;
  }

  static EnvSpec from_config(const KeyValueConfig& kv) {
    std::string kind = kv.get_str("env", "gridworld");
    EnvSpec s;
    if (kind == "gridworld") {
      std::string task = kv.get_str("task", "hold");
      GridTask t = task == "reach"  ? GridTask::Reach
                   : task == "hold" ? GridTask::Hold
                   : task == "loop" ? GridTask::Loop
                                    : throw std::invalid_argument("unknown task: " + task);
      s = gridworld(kv.get_int("grid_size", 8), kv.get_int("horizon", 32), t);
      s.goal_cx = kv.get_int("goal_x", s.goal_cx);
      s.goal_cy = kv.get_int("goal_y", s.goal_cy);
      s.start_cx = kv.get_int("start_x", s.start_cx);
      s.start_cy = kv.get_int("start_y", s.start_cy);
    } else if (kind == "pointmass") {
      s = pointmass(kv.get_int("horizon", 40), kv.get_real("step_len", 0.1));
      s.goal_x = kv.get_real("goal_x", s.goal_x);
      s.goal_y = kv.get_real("goal_y", s.goal_y);
      s.goal_radius = kv.get_real("goal_radius", s.goal_radius);
    } else if (kind == "lineworld") {
      s = lineworld(kv.get_int("horizon", 20), kv.get_real("step_len", 1.0));
      s.goal_x = kv.get_real("goal_x", s.goal_x);
      s.start_x = kv.get_real("start_x", s.start_x);
    } else {
      throw std::invalid_argument("unknown env: " + kind);
    }
    s.uniform_start = kv.get_str("start", "fixed") == "uniform";
    if (s.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    return s;
  }
};

namespace detail {

// clockwise patrol ring one cell in from the border
inline std::vector<std::pair<int, int>> loop_ring(int size) {
  int lo = 1, hi = size - 2;
  std::vector<std::pair<int, int>> ring;
  for (int x = lo; x < hi; ++x) ring.push_back({x, lo});
  for (int y = lo; y < hi; ++y) ring.push_back({hi, y});
  for (int x = hi; x > lo; --x) ring.push_back({x, hi});
  for (int y = hi; y > lo; --y) ring.push_back({lo, y});
  return ring;
}

}  // namespace detail

// Deterministic dynamics; all stochasticity comes through the injected
// rng at reset time.
class Environment {
 public:
  explicit Environment(EnvSpec spec) : spec_(std::move(spec)) {
    if (spec_.kind == EnvKind::GridWorld && spec_.grid_size < 4) {
      throw std::invalid_argument("grid_size must be >= 4");
    }
  }

  const EnvSpec& spec() const { return spec_; }

  std::vector<double> reset(std::mt19937_64& rng) {
    t_ = 0;
    done_ = false;
    switch (spec_.kind) {
      case EnvKind::GridWorld: {
        int x = spec_.start_cx, y = spec_.start_cy;
        if (spec_.uniform_start) {
          std::uniform_int_distribution<int> cell(0, spec_.grid_size - 1);
          do {
            x = cell(rng);
            y = cell(rng);
          } while (spec_.grid_task == GridTask::Reach && x == spec_.goal_cx &&
                   y == spec_.goal_cy);
        }
        state_ = {static_cast<double>(x), static_cast<double>(y)};
        break;
      }
      case EnvKind::PointMass: {
        double x = spec_.start_x, y = spec_.start_y;
        if (spec_.uniform_start) {
          std::uniform_real_distribution<double> u(spec_.start_lo, spec_.start_hi);
          x = u(rng);
          y = u(rng);
        }
        state_ = {x, y};
        break;
      }
      case EnvKind::LineWorld: {
        double x = spec_.start_x;
        if (spec_.uniform_start) {
          std::uniform_real_distribution<double> u(spec_.line_min, spec_.line_max);
          x = u(rng);
        }
        state_ = {x};
        break;
      }
    }
    return state_;
  }

  struct Outcome {
    std::vector<double> state;
    bool done = false;
    double hidden_reward = 0.0;
  };

  // Displacement encoding of a discrete action; this is what the metric
  // sees and what demo files store.
  std::vector<double> action_vector(int a) const {
    check_action(a);
    switch (spec_.kind) {
      case EnvKind::GridWorld: {
        static constexpr int dx[4] = {1, 0, -1, 0};
        static constexpr int dy[4] = {0, 1, 0, -1};
        return {static_cast<double>(dx[a]), static_cast<double>(dy[a])};
      }
      case EnvKind::PointMass: {
        static constexpr int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
        static constexpr int dy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
        return {dx[a] * spec_.step_len, dy[a] * spec_.step_len};
      }
      case EnvKind::LineWorld: {
        static constexpr int dx[3] = {1, -1, 0};
        return {dx[a] * spec_.step_len};
      }
    }
    return {};
  }

  Outcome step(int a) {
    if (done_) throw std::logic_error("step after episode end");
    check_action(a);
    Outcome out;
    ++t_;
    switch (spec_.kind) {
      case EnvKind::GridWorld: {
        auto delta = action_vector(a);
        double m = static_cast<double>(spec_.grid_size - 1);
        state_[0] = std::clamp(state_[0] + delta[0], 0.0, m);
        state_[1] = std::clamp(state_[1] + delta[1], 0.0, m);
        bool at_goal = state_[0] == spec_.goal_cx && state_[1] == spec_.goal_cy;
        switch (spec_.grid_task) {
          case GridTask::Reach:
            out.hidden_reward = (at_goal ? 1.0 : 0.0) - 0.01;
            done_ = at_goal || t_ >= spec_.horizon;
            break;
          case GridTask::Hold:
            out.hidden_reward = at_goal ? 1.0 : 0.0;
            done_ = t_ >= spec_.horizon;
            break;
          case GridTask::Loop: {
            auto ring = detail::loop_ring(spec_.grid_size);
            bool on_ring = false;
            for (auto [rx, ry] : ring) {
              if (state_[0] == rx && state_[1] == ry) {
                on_ring = true;
                break;
              }
            }
            out.hidden_reward = on_ring ? 1.0 : 0.0;
            done_ = t_ >= spec_.horizon;
            break;
          }
        }
        break;
      }
      case EnvKind::PointMass: {
        auto delta = action_vector(a);
        state_[0] = std::clamp(state_[0] + delta[0], 0.0, 1.0);
        state_[1] = std::clamp(state_[1] + delta[1], 0.0, 1.0);
        double cheb = std::max(std::abs(state_[0] - spec_.goal_x),
                               std::abs(state_[1] - spec_.goal_y));
        out.hidden_reward = cheb <= spec_.goal_radius ? 1.0 : 0.0;
        done_ = t_ >= spec_.horizon;
        break;
      }
      case EnvKind::LineWorld: {
        auto delta = action_vector(a);
        state_[0] = std::clamp(state_[0] + delta[0], spec_.line_min, spec_.line_max);
        out.hidden_reward = std::abs(state_[0] - spec_.goal_x) <= spec_.goal_radius ? 1.0 : 0.0;
        done_ = t_ >= spec_.horizon;
        break;
      }
    }
    out.state = state_;
    out.done = done_;
    return out;
  }

  const std::vector<double>& state() const { return state_; }
  int t() const { return t_; }
  bool done() const { return done_; }

 private:
  void check_action(int a) const {
    if (a < 0 || a >= spec_.num_actions()) {
      throw std::invalid_argument("invalid action index " + std::to_string(a));
    }
  }

  EnvSpec spec_;
  std::vector<double> state_;
  int t_ = 0;
  bool done_ = false;
};

// Restricted environment handle for imitation training: exposes
// transitions and termination, never the hidden task reward.
class ImitationView {
 public:
  explicit ImitationView(Environment& env) : env_(&env) {}

  struct Outcome {
    std::vector<double> state;
    bool done = false;
  };

  std::vector<double> reset(std::mt19937_64& rng) { return env_->reset(rng); }

  Outcome step(int a) {
    auto full = env_->step(a);
    return {std::move(full.state), full.done};
  }

  std::vector<double> action_vector(int a) const { return env_->action_vector(a); }
  int num_actions() const { return env_->spec().num_actions(); }
  int horizon() const { return env_->spec().horizon; }

 private:
  Environment* env_;
};

using Policy = std::function<int(const std::vector<double>&)>;

// Deterministic near-optimal policy for each task.
inline Policy scripted_expert(const EnvSpec& spec) {
  switch (spec.kind) {
    case EnvKind::GridWorld: {
      if (spec.grid_task == GridTask::Loop) {
        auto ring = detail::loop_ring(spec.grid_size);
        return [ring](const std::vector<double>& s) -> int {
          int x = static_cast<int>(s[0]);
          int y = static_cast<int>(s[1]);
          int at = -1;
          for (size_t k = 0; k < ring.size(); ++k) {
            if (ring[k].first == x && ring[k].second == y) {
              at = static_cast<int>(k);
              break;
            }
          }
          int tx, ty;
          if (at >= 0) {
            auto [nx, ny] = ring[(at + 1) % ring.size()];
            tx = nx;
            ty = ny;
          } else {
            tx = ring[0].first;
            ty = ring[0].second;
          }
          if (tx > x) return 0;
          if (tx < x) return 2;
          if (ty > y) return 1;
          return 3;
        };
      }
      int gx = spec.goal_cx, gy = spec.goal_cy, size = spec.grid_size;
      return [gx, gy, size](const std::vector<double>& s) -> int {
        int dx = gx - static_cast<int>(s[0]);
        int dy = gy - static_cast<int>(s[1]);
        if (dx == 0 && dy == 0) {
          // absorbing bump: an action whose clamp keeps us on the goal
          if (gx == size - 1) return 0;
          if (gy == size - 1) return 1;
          if (gx == 0) return 2;
          return 3;
        }
        if (std::abs(dx) >= std::abs(dy) && dx != 0) return dx > 0 ? 0 : 2;
        return dy > 0 ? 1 : 3;
      };
    }
    case EnvKind::PointMass: {
      double gx = spec.goal_x, gy = spec.goal_y, step = spec.step_len;
      return [gx, gy, step](const std::vector<double>& s) -> int {
        double dx = gx - s[0];
        double dy = gy - s[1];
        int mx = std::abs(dx) > 0.5 * step ? (dx > 0 ? 1 : -1) : 0;
        int my = std::abs(dy) > 0.5 * step ? (dy > 0 ? 1 : -1) : 0;
        if (mx == 0 && my == 0) mx = 1;  // no stay action; oscillate inside the goal box
        static constexpr int dxs[8] = {1, 1, 0, -1, -1, -1, 0, 1};
        static constexpr int dys[8] = {0, 1, 1, 1, 0, -1, -1, -1};
        for (int a = 0; a < 8; ++a) {
          if (dxs[a] == mx && dys[a] == my) return a;
        }
        return 0;
      };
    }
    case EnvKind::LineWorld: {
      double gx = spec.goal_x, r = spec.goal_radius;
      return [gx, r](const std::vector<double>& s) -> int {
        double dx = gx - s[0];
        if (std::abs(dx) <= r) return 2;  // stay
        return dx > 0 ? 0 : 1;
      };
    }
  }
  throw std::logic_error("unreachable env kind");
}

struct Rollout {
  Trajectory traj;
  double hidden_return = 0.0;
};

inline Rollout rollout(Environment& env, const Policy& policy, std::mt19937_64& rng,
                       int episode_id) {
  Rollout out;
  out.traj.episode_id = episode_id;
  out.traj.nominal_horizon = env.spec().horizon;
  std::vector<double> state = env.reset(rng);
  for (int i = 0; i < env.spec().horizon; ++i) {
    int a = policy(state);
    out.traj.points.push_back(
        Point{state, env.action_vector(a), episode_id, i});
    auto oc = env.step(a);
    out.hidden_return += oc.hidden_reward;
    state = std::move(oc.state);
    if (oc.done) break;
  }
  return out;
}

inline std::vector<Trajectory> generate_demos(const EnvSpec& spec, const Policy& policy,
                                              int n_episodes, std::mt19937_64& rng) {
  std::vector<Trajectory> demos;
  demos.reserve(n_episodes);
  Environment env(spec);
  for (int e = 0; e < n_episodes; ++e) {
    demos.push_back(rollout(env, policy, rng, e).traj);
  }
  return demos;
}

}  // namespace pwil
