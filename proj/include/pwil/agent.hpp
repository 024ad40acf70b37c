#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "pwil/types.hpp"

namespace pwil {

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

// Fixed-capacity ring with FIFO eviction.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be > 0");
  }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  const Transition& sample(std::mt19937_64& rng) const {
    if (data_.empty()) throw std::logic_error("sampling from empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    return data_[pick(rng)];
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_.at(i); }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> data_;
};

// Uniform per-dimension binning of a box.
struct DiscretizerSpec {
  std::vector<double> lo;
  std::vector<double> hi;
  int bins = 16;
};

// Tabular Q-learning over discretized states with epsilon-greedy
// exploration. Deliberately the simplest learner that exercises an
// observe/update agent contract.
class QLearner {
 public:
  QLearner(DiscretizerSpec grid, int num_actions, double gamma, double learning_rate)
      : grid_(std::move(grid)),
        num_actions_(num_actions),
        gamma_(gamma),
        lr_(learning_rate) {
    if (grid_.lo.size() != grid_.hi.size() || grid_.lo.empty()) {
      throw std::invalid_argument("bad discretizer bounds");
    }
    if (grid_.bins < 1) throw std::invalid_argument("bins must be >= 1");
    if (num_actions_ < 1) throw std::invalid_argument("num_actions must be >= 1");
    if (gamma_ < 0.0 || gamma_ >= 1.0) throw std::invalid_argument("gamma must be in [0,1)");
  }

  std::uint64_t state_key(const std::vector<double>& s) const {
    if (s.size() != grid_.lo.size()) throw std::invalid_argument("state dimension mismatch");
    std::uint64_t key = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      double span = grid_.hi[k] - grid_.lo[k];
      int bin = span > 0.0
                    ? static_cast<int>(std::floor((s[k] - grid_.lo[k]) / span * grid_.bins))
                    : 0;
      bin = std::clamp(bin, 0, grid_.bins - 1);
      key = key * static_cast<std::uint64_t>(grid_.bins) + static_cast<std::uint64_t>(bin);
    }
    return key;
  }

  // epsilon-greedy; greedy ties resolve to the lowest action index
  int act(const std::vector<double>& s, std::mt19937_64& rng) const {
    if (epsilon_ > 0.0) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      if (u(rng) < epsilon_) {
        std::uniform_int_distribution<int> pick(0, num_actions_ - 1);
        return pick(rng);
      }
    }
    return greedy_action(s);
  }

  int greedy_action(const std::vector<double>& s) const {
    const std::vector<double>* q = find_row(state_key(s));
    if (!q) return 0;
    int best = 0;
    for (int a = 1; a < num_actions_; ++a) {
      if ((*q)[a] > (*q)[best]) best = a;
    }
    return best;
  }

  // Append the transition, then back up a uniformly sampled batch:
  //   Q(s,a) += lr * (r + gamma * (1-done) * max_a' Q(s',a') - Q(s,a))
  void observe_update(ReplayBuffer& buffer, Transition tr, int batch_size,
                      std::mt19937_64& rng) {
    buffer.push(std::move(tr));
    for (int b = 0; b < batch_size; ++b) {
      const Transition& s = buffer.sample(rng);
      double target = s.reward + gamma_ * (s.done ? 0.0 : max_q(s.next_state));
      double& q = row(state_key(s.state))[s.action];
      q += lr_ * (target - q);
    }
  }

  double q_value(const std::vector<double>& s, int a) const {
    const std::vector<double>* q = find_row(state_key(s));
    return q ? (*q)[a] : 0.0;
  }

  double max_q(const std::vector<double>& s) const {
    const std::vector<double>* q = find_row(state_key(s));
    if (!q) return 0.0;
    return *std::max_element(q->begin(), q->end());
  }

  void set_epsilon(double e) {
    if (e < 0.0 || e > 1.0) throw std::invalid_argument("epsilon must be in [0,1]");
    epsilon_ = e;
  }
  double epsilon() const { return epsilon_; }
  int num_actions() const { return num_actions_; }
  std::size_t table_size() const { return q_.size(); }

 private:
  std::vector<double>& row(std::uint64_t key) {
    auto it = q_.find(key);
    if (it == q_.end()) {
      it = q_.emplace(key, std::vector<double>(num_actions_, 0.0)).first;
    }
    return it->second;
  }

  const std::vector<double>* find_row(std::uint64_t key) const {
    auto it = q_.find(key);
    return it == q_.end() ? nullptr : &it->second;
  }

  DiscretizerSpec grid_;
  int num_actions_;
  double gamma_;
  double lr_;
  double epsilon_ = 1.0;
  std::unordered_map<std::uint64_t, std::vector<double>> q_;
};

// Seed the buffer with expert transitions at maximum reward. Next states
// come from consecutive retained demo points, so subsampled demos yield
// an approximate replay of the underlying trajectories. `action_index`
// decodes a stored action vector back to the discrete action id.
inline void prefill(ReplayBuffer& buffer, const std::vector<Trajectory>& demos,
                    int count, double alpha,
                    const std::function<int(const std::vector<double>&)>& action_index,
                    std::mt19937_64& rng) {
  if (count == 0) return;
  struct Pair {
    const Point* from;
    const Point* to;
  };
  std::vector<Pair> pairs;
  for (const auto& d : demos) {
    for (size_t i = 0; i + 1 < d.points.size(); ++i) {
      if (!d.points[i].has_action()) {
        throw std::invalid_argument("prefill requires expert actions");
      }
      pairs.push_back({&d.points[i], &d.points[i + 1]});
    }
  }
  if (pairs.empty()) throw std::invalid_argument("prefill: no demo transitions");
  if (!action_index) throw std::invalid_argument("prefill: missing action decoder");
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  for (int n = 0; n < count; ++n) {
    const Pair& p = pairs[pick(rng)];
    buffer.push(Transition{p.from->state, action_index(*p.from->action), alpha,
                           p.to->state, false});
  }
}

}  // namespace pwil
