#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pwil/metric.hpp"
#include "pwil/types.hpp"

namespace pwil {

// Reward map r = alpha * exp(-normalizer * c). The normalizer folds the
// horizon (and optionally the metric dimensionality) into the exponent so
// alpha/beta transfer across tasks.
struct RewardParams {
  double alpha = 5.0;
  double beta = 5.0;
  double normalizer = 1.0;

  static RewardParams dim_scaled(double alpha, double beta, int horizon, int metric_dim) {
    if (metric_dim <= 0) throw std::invalid_argument("metric_dim must be positive");
    RewardParams p{alpha, beta, beta * horizon / std::sqrt(static_cast<double>(metric_dim))};
    p.check();
    return p;
  }

  static RewardParams horizon_only(double alpha, double beta, int horizon) {
    RewardParams p{alpha, beta, beta * static_cast<double>(horizon)};
    p.check();
    return p;
  }

  double reward(double cost) const { return alpha * std::exp(-normalizer * cost); }

  void check() const {
    if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("alpha, beta must be > 0");
    if (!(normalizer > 0.0) || !std::isfinite(normalizer)) {
      throw std::invalid_argument("normalizer must be positive and finite");
    }
  }
};

struct StepResult {
  double cost = 0.0;
  double reward = 0.0;
};

// One transport assignment: episode step i sent `units` grid units of
// mass to expert atom j. Mass = units / (T*D).
struct CouplingLogEntry {
  int step = 0;
  int atom = 0;
  std::int64_t units = 0;
};

// Online greedy coupling against a fixed demonstration measure.
//
// Weights live on the exact 1/(T*D) grid: every expert atom holds T units
// (weight 1/D), every episode step spends D units (weight 1/T). Integer
// bookkeeping makes the "remaining mass > 0" loop condition exact, so no
// atom is ever skipped or double-popped by float drift.
class Rewarder {
 public:
  Rewarder(EmpiricalMeasure demos, int nominal_horizon, MetricSpec metric,
           RewardParams params, bool log_coupling = true)
      : demos_(std::move(demos)),
        horizon_(nominal_horizon),
        metric_(std::move(metric)),
        params_(params),
        log_on_(log_coupling) {
    if (demos_.atoms.empty()) throw std::invalid_argument("empty demonstration measure");
    if (horizon_ < 1) throw std::invalid_argument("nominal horizon must be >= 1");
    if (!demos_.is_uniform()) {
      throw std::invalid_argument("rewarder requires uniform demonstration weights");
    }
    params_.check();
    dist_buf_.resize(demos_.atoms.size());
    reset();
  }

  // Fresh episode: restore every atom to its full 1/D weight.
  void reset() {
    const int d = demos_.size();
    remaining_units_.assign(d, static_cast<std::int64_t>(horizon_));
    alive_.resize(d);
    for (int j = 0; j < d; ++j) alive_[j] = j;
    steps_ = 0;
    consumed_units_ = 0;
    log_.clear();
  }

  // Transport this step's 1/T of mass to the nearest remaining expert
  // atoms, nearest first, popping atoms as they fill.
  StepResult step(const Point& x) {
    const int d = demos_.size();
    if (steps_ >= horizon_) throw std::runtime_error("mass exhausted: step past nominal horizon");
    for (int j : alive_) dist_buf_[j] = distance(metric_, x, demos_.atoms[j].point);

    std::int64_t budget = d;  // 1/T of mass in grid units
    double unit_cost = 0.0;   // sum of units * distance
    while (budget > 0) {
      // argmin over remaining atoms; ties go to the lower atom index
      int best_pos = -1;
      int best_atom = -1;
      double best_dist = 0.0;
      for (size_t pos = 0; pos < alive_.size(); ++pos) {
        int j = alive_[pos];
        double dj = dist_buf_[j];
        if (best_pos < 0 || dj < best_dist || (dj == best_dist && j < best_atom)) {
          best_pos = static_cast<int>(pos);
          best_atom = j;
          best_dist = dj;
        }
      }
      std::int64_t take = std::min(budget, remaining_units_[best_atom]);
      unit_cost += static_cast<double>(take) * best_dist;
      remaining_units_[best_atom] -= take;
      budget -= take;
      if (log_on_) log_.push_back({steps_, best_atom, take});
      if (remaining_units_[best_atom] == 0) {
        alive_[best_pos] = alive_.back();
        alive_.pop_back();
      }
    }
    consumed_units_ += d;
    ++steps_;
    double cost = unit_cost / (static_cast<double>(horizon_) * d);
    return {cost, params_.reward(cost)};
  }

  // Support-estimation ablation: cost is the distance to the nearest
  // expert atom with no capacity bookkeeping (atoms never pop).
  StepResult step_support(const Point& x) {
    if (steps_ >= horizon_) throw std::runtime_error("mass exhausted: step past nominal horizon");
    double best = distance(metric_, x, demos_.atoms[0].point);
    for (int j = 1; j < demos_.size(); ++j) {
      best = std::min(best, distance(metric_, x, demos_.atoms[j].point));
    }
    ++steps_;
    double cost = best / static_cast<double>(horizon_);
    return {cost, params_.reward(cost)};
  }

  struct FinishedCoupling {
    Coupling coupling;
    bool partial = false;         // episode ended before the nominal horizon
    double transported_mass = 0;  // steps_taken / T
  };

  // Materialize the transport plan accumulated so far.
  FinishedCoupling finish_episode() const {
    if (!log_on_) throw std::logic_error("finish_episode requires coupling logging");
    const int d = demos_.size();
    FinishedCoupling out{Coupling(horizon_, d), steps_ < horizon_, transported_mass()};
    double grid = static_cast<double>(horizon_) * d;
    for (const auto& e : log_) {
      out.coupling.at(e.step, e.atom) += static_cast<double>(e.units) / grid;
    }
    return out;
  }

  int steps_taken() const { return steps_; }
  int nominal_horizon() const { return horizon_; }
  double transported_mass() const {
    return static_cast<double>(consumed_units_) /
           (static_cast<double>(horizon_) * demos_.size());
  }

  std::vector<double> remaining_weights() const {
    std::vector<double> w(remaining_units_.size());
    double grid = static_cast<double>(horizon_) * demos_.size();
    for (size_t j = 0; j < w.size(); ++j) w[j] = static_cast<double>(remaining_units_[j]) / grid;
    return w;
  }

  const std::vector<CouplingLogEntry>& coupling_log() const { return log_; }
  const EmpiricalMeasure& demos() const { return demos_; }
  const MetricSpec& metric() const { return metric_; }
  const RewardParams& params() const { return params_; }

 private:
  EmpiricalMeasure demos_;
  int horizon_;
  MetricSpec metric_;
  RewardParams params_;
  bool log_on_;

  std::vector<std::int64_t> remaining_units_;  // per atom, T units when full
  std::vector<int> alive_;                     // atom indices with mass left
  std::vector<double> dist_buf_;               // per-step distance cache
  int steps_ = 0;
  std::int64_t consumed_units_ = 0;
  std::vector<CouplingLogEntry> log_;
};

// Total greedy-coupling transport cost of a full-horizon trajectory;
// upper-bounds the exact W1 to the demonstration measure.
inline double greedy_cost_total(const Trajectory& traj, const EmpiricalMeasure& demos,
                                const MetricSpec& metric, int nominal_horizon) {
  if (traj.length() != nominal_horizon) {
    throw std::invalid_argument("greedy_cost_total: trajectory length != nominal horizon");
  }
  Rewarder rew(demos, nominal_horizon, metric, RewardParams{1.0, 1.0, 1.0},
               /*log_coupling=*/false);
  KahanSum total;
  for (const auto& p : traj.points) total.add(rew.step(p).cost);
  return total.value();
}

}  // namespace pwil
