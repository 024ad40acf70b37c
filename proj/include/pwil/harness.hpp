#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "pwil/agent.hpp"
#include "pwil/envs.hpp"
#include "pwil/metric.hpp"
#include "pwil/ot_exact.hpp"
#include "pwil/rewarder.hpp"
#include "pwil/types.hpp"

namespace pwil {

// Keep every rate-th point, starting from a per-episode uniform random
// offset in [0, rate). rate = 1 is the identity.
inline std::vector<Trajectory> subsample(const std::vector<Trajectory>& demos, int rate,
                                         std::mt19937_64& rng) {
  if (rate < 1) throw std::invalid_argument("subsample rate must be >= 1");
  if (rate == 1) return demos;
  std::vector<Trajectory> out;
  out.reserve(demos.size());
  std::uniform_int_distribution<int> offset_dist(0, rate - 1);
  for (const auto& d : demos) {
    Trajectory kept;
    kept.episode_id = d.episode_id;
    kept.nominal_horizon = d.nominal_horizon;
    for (int i = offset_dist(rng); i < d.length(); i += rate) {
      kept.points.push_back(d.points[i]);
    }
    out.push_back(std::move(kept));
  }
  return out;
}

// Assemble the distance used by both the rewarder and the W1 evaluator.
// Variant flags override the configured metric kind: state-only projects
// out actions, l2 drops the standardization weights (ones for state-only
// l2). Standardizers are fit on the pooled demo set the rewarder sees.
inline MetricSpec resolve_metric(const RunConfig& cfg, const std::vector<Trajectory>& demos,
                                 std::shared_ptr<const EmbeddingTable> embeddings = nullptr) {
  MetricKind kind = cfg.metric_kind;
  if (cfg.variant.state_only) kind = MetricKind::StateOnlyStandardized;
  else if (cfg.variant.plain_l2) kind = MetricKind::PlainEuclidean;

  switch (kind) {
    case MetricKind::StandardizedEuclidean:
      return MetricSpec::standardized(fit_standardizer(demos, false).inv_std);
    case MetricKind::PlainEuclidean:
      return MetricSpec::plain();
    case MetricKind::StateOnlyStandardized: {
      if (cfg.variant.plain_l2) {
        size_t sdim = demos.at(0).points.at(0).state.size();
        return MetricSpec::state_only(std::vector<double>(sdim, 1.0));
      }
      return MetricSpec::state_only(fit_standardizer(demos, true).inv_std);
    }
    case MetricKind::PrecomputedEmbedding:
      if (!embeddings) throw std::invalid_argument("embedding metric requires a sidecar table");
      return MetricSpec::embedding(std::move(embeddings));
  }
  throw std::logic_error("unreachable metric kind");
}

struct EvalRow {
  int episode = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double w1_mean = 0.0;
  double greedy_bound_mean = 0.0;
};

struct RunReport {
  std::vector<EvalRow> rows;

  double initial_w1() const { return rows.empty() ? 0.0 : rows.front().w1_mean; }
  double final_w1() const { return rows.empty() ? 0.0 : rows.back().w1_mean; }
  double final_return() const { return rows.empty() ? 0.0 : rows.back().mean_return; }

  void write_csv(std::ostream& out) const {
    out << "episode,mean_return,std_return,w1_mean,greedy_bound_mean\n";
    out.precision(17);
    for (const auto& r : rows) {
      out << r.episode << ',' << r.mean_return << ',' << r.std_return << ','
          << r.w1_mean << ',' << r.greedy_bound_mean << '\n';
    }
  }
};

struct RunHooks {
  Policy act_override;  // replaces the learner's action choice (probes)
  std::function<void(const Rewarder&)> on_episode_start;
};

namespace detail {

struct MeanStd {
  double mean = 0.0;
  double stdev = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= xs.size();
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {m, std::sqrt(v / xs.size())};
}

}  // namespace detail

// One seed of the imitation loop: per episode the rewarder is reset to a
// fresh copy of the demonstration weights, the learner acts through a
// handle that hides the task reward, and the greedy-coupling reward is
// the only learning signal. Periodic greedy-policy evaluations record the
// hidden return, the exact W1 of the evaluation trajectories to the demo
// measure, and the greedy upper bound.
inline RunReport run_imitation(const RunConfig& cfg, const EnvSpec& env_spec,
                               const std::vector<Trajectory>& demos,
                               const RunHooks& hooks = {}) {
  cfg.validate();
  if (cfg.metric_kind == MetricKind::PrecomputedEmbedding) {
    throw std::invalid_argument(
        "run_imitation cannot use a precomputed-embedding metric: live rollouts "
        "visit points with no embedding key");
  }
  if (demos.empty()) throw std::invalid_argument("no demonstrations");

  std::mt19937_64 rng(cfg.seed);
  auto demos_sub = subsample(demos, cfg.subsample_rate, rng);
  MetricSpec metric = resolve_metric(cfg, demos_sub);
  EmpiricalMeasure reward_measure = measure_from_demos(demos_sub);
  EmpiricalMeasure eval_measure =
      cfg.eval_full_demos ? measure_from_demos(demos) : reward_measure;

  const int horizon = env_spec.horizon;
  int dim = metric_dimension(metric, env_spec.state_dim(), env_spec.action_dim());
  RewardParams params = cfg.normalizer == NormalizerKind::DimScaled
                            ? RewardParams::dim_scaled(cfg.alpha, cfg.beta, horizon, dim)
                            : RewardParams::horizon_only(cfg.alpha, cfg.beta, horizon);

  Environment env(env_spec);
  ImitationView view(env);
  Rewarder rewarder(reward_measure, horizon, metric, params, /*log_coupling=*/false);

  QLearner learner(DiscretizerSpec{env_spec.state_lo(), env_spec.state_hi(), cfg.bins},
                   env_spec.num_actions(), cfg.gamma, cfg.learning_rate);
  ReplayBuffer buffer(cfg.buffer_capacity);

  std::vector<std::vector<double>> avecs;
  for (int a = 0; a < env_spec.num_actions(); ++a) avecs.push_back(env.action_vector(a));
  auto action_index = [&avecs](const std::vector<double>& vec) -> int {
    for (size_t a = 0; a < avecs.size(); ++a) {
      if (avecs[a] == vec) return static_cast<int>(a);
    }
    throw std::invalid_argument("prefill: unknown action vector");
  };

  // LfO setting: no access to expert actions, so no prefill either
  if (!cfg.variant.nofill && !cfg.variant.state_only && cfg.prefill_count > 0) {
    prefill(buffer, demos_sub, cfg.prefill_count, cfg.alpha, action_index, rng);
  }

  auto evaluate = [&](int episode) {
    std::mt19937_64 eval_rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(episode)));
    Environment eval_env(env_spec);
    Policy greedy = hooks.act_override
                        ? hooks.act_override
                        : Policy([&learner](const std::vector<double>& s) {
                            return learner.greedy_action(s);
                          });
    std::vector<double> returns, w1s, bounds;
    for (int r = 0; r < cfg.eval_rollouts; ++r) {
      Rollout ro = rollout(eval_env, greedy, eval_rng, r);
      returns.push_back(ro.hidden_return);
      if (ro.traj.points.empty()) continue;
      // realized support, renormalized uniform weights
      EmpiricalMeasure pi = measure_from_trajectory(ro.traj);
      w1s.push_back(solve_w1(pi, eval_measure, metric).value);
      Rewarder bound_rew(reward_measure, horizon, metric, params, false);
      KahanSum bound;
      for (const auto& p : ro.traj.points) bound.add(bound_rew.step(p).cost);
      bounds.push_back(bound.value());
    }
    auto ret = detail::mean_std(returns);
    auto w1 = detail::mean_std(w1s);
    auto bd = detail::mean_std(bounds);
    return EvalRow{episode, ret.mean, ret.stdev, w1.mean, bd.mean};
  };

  RunReport report;
  double eps_span = cfg.epsilon_start - cfg.epsilon_end;
  long step_counter = 0;

  for (int k = 0; k < cfg.episodes; ++k) {
    if (cfg.eval_interval > 0 && k % cfg.eval_interval == 0) {
      report.rows.push_back(evaluate(k));
    }
    double frac = cfg.epsilon_decay_episodes > 0
                      ? std::min(1.0, static_cast<double>(k) / cfg.epsilon_decay_episodes)
                      : 1.0;
    learner.set_epsilon(cfg.epsilon_start - eps_span * frac);

    rewarder.reset();
    if (hooks.on_episode_start) hooks.on_episode_start(rewarder);

    std::vector<double> state = view.reset(rng);
    for (int i = 0; i < horizon; ++i) {
      int a = hooks.act_override ? hooks.act_override(state) : learner.act(state, rng);
      Point pt{state, env.action_vector(a), k, i};
      StepResult sr =
          cfg.variant.support ? rewarder.step_support(pt) : rewarder.step(pt);
      auto oc = view.step(a);
      bool do_update = cfg.update_every <= 1 || (step_counter % cfg.update_every == 0);
      learner.observe_update(buffer,
                             Transition{state, a, sr.reward, oc.state, oc.done},
                             do_update ? cfg.batch_size : 0, rng);
      ++step_counter;
      state = std::move(oc.state);
      if (oc.done) break;
    }
  }
  if (cfg.episodes > 0) report.rows.push_back(evaluate(cfg.episodes));
  return report;
}

struct BoundReport {
  int instances = 0;
  int violations = 0;         // greedy < exact beyond tolerance
  int coupling_failures = 0;  // infeasible greedy or optimal couplings
  double tolerance = 1e-9;
  double max_violation = 0.0;  // most negative gap seen
  double mean_gap = 0.0;
  double mean_rel_gap = 0.0;
  double max_rel_gap = 0.0;

  bool pass() const { return violations == 0 && coupling_failures == 0; }
};

// Random-instance audit of the greedy upper bound: on every instance the
// greedy transport cost must dominate the exact W1, both transport plans
// must be feasible, and the gap statistics quantify how tight the bound
// runs in practice.
inline BoundReport validate_bound(int n_instances, int max_dim, int max_T, int max_D,
                                  std::mt19937_64& rng, double tol = 1e-9) {
  BoundReport rep;
  rep.instances = n_instances;
  rep.tolerance = tol;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> weight(0.25, 4.0);
  KahanSum gap_sum, rel_sum;
  for (int n = 0; n < n_instances; ++n) {
    std::uniform_int_distribution<int> t_dist(1, max_T), d_dist(1, max_D),
        k_dist(1, max_dim);
    int T = t_dist(rng), D = d_dist(rng), dim = k_dist(rng);

    auto random_point = [&](int ep, int t) {
      Point p;
      p.state.resize(dim);
      for (double& x : p.state) x = gauss(rng);
      p.episode = ep;
      p.t = t;
      return p;
    };
    Trajectory traj;
    traj.nominal_horizon = T;
    for (int i = 0; i < T; ++i) traj.points.push_back(random_point(0, i));
    std::vector<Point> demo_pts;
    for (int j = 0; j < D; ++j) demo_pts.push_back(random_point(1, j));
    EmpiricalMeasure demos = measure_from_points(demo_pts);

    // alternate plain and randomly weighted metrics
    std::vector<double> inv_std(dim, 1.0);
    if (n % 2 == 1) {
      for (double& w : inv_std) w = weight(rng);
    }
    MetricSpec metric = MetricSpec::state_only(inv_std);

    Rewarder rew(demos, T, metric, RewardParams{1.0, 1.0, 1.0}, true);
    KahanSum greedy_acc;
    for (const auto& p : traj.points) greedy_acc.add(rew.step(p).cost);
    double greedy = greedy_acc.value();

    W1Result exact = solve_w1(measure_from_trajectory(traj), demos, metric);

    double gap = greedy - exact.value;
    if (gap < -tol) {
      ++rep.violations;
      rep.max_violation = std::min(rep.max_violation, gap);
    }
    gap_sum.add(gap);
    double rel = exact.value > 0.0 ? gap / exact.value : 0.0;
    rel_sum.add(rel);
    rep.max_rel_gap = std::max(rep.max_rel_gap, rel);

    if (!validate_coupling(rew.finish_episode().coupling, T, D).pass()) {
      ++rep.coupling_failures;
    }
    if (!validate_coupling(exact.coupling, T, D).pass()) {
      ++rep.coupling_failures;
    }
  }
  rep.mean_gap = gap_sum.value() / std::max(1, n_instances);
  rep.mean_rel_gap = rel_sum.value() / std::max(1, n_instances);
  return rep;
}

}  // namespace pwil
