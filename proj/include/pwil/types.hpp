#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwil/config.hpp"

namespace pwil {

// Compensated (Kahan) accumulator. Marginal and mass checks run at 1e-9
// tolerances over supports that may reach ~1e5 atoms; plain summation
// drifts past that.
class KahanSum {
 public:
  void add(double x) {
    double y = x - comp_;
    double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// One state-action (or state-only) atom. `episode`/`t` identify the
// originating timestep; precomputed-embedding metrics key on them.
struct Point {
  std::vector<double> state;
  std::optional<std::vector<double>> action;
  int episode = 0;
  int t = 0;

  bool has_action() const { return action.has_value(); }
};

inline void check_point(const Point& p, int state_dim, int action_dim) {
  if (static_cast<int>(p.state.size()) != state_dim) {
    throw std::invalid_argument("point state dimension mismatch");
  }
  if (!all_finite(p.state)) throw std::invalid_argument("non-finite state entry");
  if (p.action) {
    if (static_cast<int>(p.action->size()) != action_dim) {
      throw std::invalid_argument("point action dimension mismatch");
    }
    if (!all_finite(*p.action)) throw std::invalid_argument("non-finite action entry");
  }
}

// Ordered visitation record of one episode. `nominal_horizon` is the
// task horizon T; `points.size() <= T` (early termination allowed).
struct Trajectory {
  std::vector<Point> points;
  int episode_id = 0;
  int nominal_horizon = 0;

  int length() const { return static_cast<int>(points.size()); }
};

// Finitely supported measure with per-atom weights. All constructors in
// this library produce uniform weights.
struct EmpiricalMeasure {
  struct Atom {
    Point point;
    double weight = 0.0;
  };

  std::vector<Atom> atoms;

  int size() const { return static_cast<int>(atoms.size()); }

  double total_weight() const {
    KahanSum s;
    for (const auto& a : atoms) s.add(a.weight);
    return s.value();
  }

  bool is_uniform(double tol = 1e-9) const {
    if (atoms.empty()) return false;
    double w = 1.0 / static_cast<double>(atoms.size());
    for (const auto& a : atoms) {
      if (std::abs(a.weight - w) > tol) return false;
    }
    return true;
  }
};

inline EmpiricalMeasure measure_from_points(const std::vector<Point>& points) {
  if (points.empty()) throw std::invalid_argument("empty support");
  EmpiricalMeasure m;
  double w = 1.0 / static_cast<double>(points.size());
  m.atoms.reserve(points.size());
  for (const auto& p : points) m.atoms.push_back({p, w});
  return m;
}

inline EmpiricalMeasure measure_from_trajectory(const Trajectory& traj) {
  return measure_from_points(traj.points);
}

// Pooled uniform measure over every point of every demonstration.
inline EmpiricalMeasure measure_from_demos(const std::vector<Trajectory>& demos) {
  std::vector<Point> pooled;
  for (const auto& d : demos) {
    pooled.insert(pooled.end(), d.points.begin(), d.points.end());
  }
  return measure_from_points(pooled);
}

// Dense T x D transport plan.
class Coupling {
 public:
  Coupling() = default;
  Coupling(int rows, int cols)
      : rows_(rows), cols_(cols), m_(static_cast<size_t>(rows) * cols, 0.0) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("coupling shape must be positive");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double at(int i, int j) const { return m_[static_cast<size_t>(i) * cols_ + j]; }
  double& at(int i, int j) { return m_[static_cast<size_t>(i) * cols_ + j]; }

  const std::vector<double>& data() const { return m_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> m_;
};

struct CouplingCheck {
  double max_row_err = 0.0;   // worst |row sum - 1/T|
  double max_col_err = 0.0;   // worst |col sum - 1/D|
  double min_entry = 0.0;
  double mass_err = 0.0;      // |total - 1|
  double tol = 1e-9;

  bool pass() const {
    return max_row_err <= tol && max_col_err <= tol && mass_err <= tol &&
           min_entry >= 0.0;
  }
};

// Marginal feasibility report: rows must sum to 1/T, columns to 1/D,
// entries nonnegative, total mass 1.
inline CouplingCheck validate_coupling(const Coupling& c, int T, int D,
                                       double tol = 1e-9) {
  if (c.rows() != T || c.cols() != D) {
    throw std::invalid_argument("coupling shape mismatch: expected " +
                                std::to_string(T) + "x" + std::to_string(D));
  }
  CouplingCheck r;
  r.tol = tol;
  r.min_entry = c.at(0, 0);
  double row_target = 1.0 / T;
  double col_target = 1.0 / D;
  KahanSum total;
  for (int i = 0; i < T; ++i) {
    KahanSum row;
    for (int j = 0; j < D; ++j) {
      double v = c.at(i, j);
      row.add(v);
      total.add(v);
      if (v < r.min_entry) r.min_entry = v;
    }
    r.max_row_err = std::max(r.max_row_err, std::abs(row.value() - row_target));
  }
  for (int j = 0; j < D; ++j) {
    KahanSum col;
    for (int i = 0; i < T; ++i) col.add(c.at(i, j));
    r.max_col_err = std::max(r.max_col_err, std::abs(col.value() - col_target));
  }
  r.mass_err = std::abs(total.value() - 1.0);
  return r;
}

enum class MetricKind {
  StandardizedEuclidean,
  PlainEuclidean,
  StateOnlyStandardized,
  PrecomputedEmbedding,
};

enum class NormalizerKind { DimScaled, HorizonOnly };

// Ablation switches. All false = the full method.
struct VariantFlags {
  bool state_only = false;  // match state distributions, no expert actions
  bool support = false;     // nearest-atom cost, no capacity bookkeeping
  bool nofill = false;      // skip replay-buffer prefill
  bool plain_l2 = false;    // unstandardized metric

  bool is_full() const { return !state_only && !support && !nofill && !plain_l2; }
};

inline VariantFlags parse_variant(const std::string& spec) {
  VariantFlags v;
  std::string cur;
  auto apply = [&v](const std::string& name) {
    if (name.empty() || name == "full") return;
    if (name == "state") v.state_only = true;
    else if (name == "support") v.support = true;
    else if (name == "nofill") v.nofill = true;
    else if (name == "l2") v.plain_l2 = true;
    else throw std::invalid_argument("unknown variant: " + name);
  };
  for (char ch : spec) {
    if (ch == ',' || ch == '+') {
      apply(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  apply(cur);
  return v;
}

inline std::string variant_name(const VariantFlags& v) {
  if (v.is_full()) return "full";
  std::string s;
  auto append = [&s](const char* name) {
    if (!s.empty()) s += ',';
    s += name;
  };
  if (v.state_only) append("state");
  if (v.support) append("support");
  if (v.nofill) append("nofill");
  if (v.plain_l2) append("l2");
  return s;
}

inline MetricKind parse_metric_kind(const std::string& s) {
  if (s == "standardized") return MetricKind::StandardizedEuclidean;
  if (s == "l2") return MetricKind::PlainEuclidean;
  if (s == "state") return MetricKind::StateOnlyStandardized;
  if (s == "embedding") return MetricKind::PrecomputedEmbedding;
  throw std::invalid_argument("unknown metric: " + s);
}

inline NormalizerKind parse_normalizer_kind(const std::string& s) {
  if (s == "dim") return NormalizerKind::DimScaled;
  if (s == "horizon") return NormalizerKind::HorizonOnly;
  throw std::invalid_argument("unknown normalizer: " + s);
}

// Everything a reproducible run needs beyond the environment itself.
struct RunConfig {
  double alpha = 5.0;
  double beta = 5.0;
  MetricKind metric_kind = MetricKind::StandardizedEuclidean;
  NormalizerKind normalizer = NormalizerKind::DimScaled;
  VariantFlags variant;
  int subsample_rate = 1;
  int prefill_count = 1000;
  std::uint64_t seed = 0;

  // training loop
  int episodes = 2000;
  int eval_interval = 100;
  int eval_rollouts = 10;
  int num_seeds = 1;
  bool eval_full_demos = false;  // default: evaluate against the subsampled set

  // agent
  double gamma = 0.95;
  double learning_rate = 0.2;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_episodes = 1200;
  int batch_size = 32;
  int buffer_capacity = 20000;
  int bins = 16;
  int update_every = 1;

  std::string embeddings_path;

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    if (subsample_rate < 1) throw std::invalid_argument("subsample_rate must be >= 1");
    if (prefill_count < 0) throw std::invalid_argument("prefill_count must be >= 0");
  }

  static RunConfig from_config(const KeyValueConfig& kv) {
    RunConfig c;
    c.alpha = kv.get_real("alpha", c.alpha);
    c.beta = kv.get_real("beta", c.beta);
    c.metric_kind = parse_metric_kind(kv.get_str("metric", "standardized"));
    c.normalizer = parse_normalizer_kind(kv.get_str("normalizer", "dim"));
    c.variant = parse_variant(kv.get_str("variant", "full"));
    c.subsample_rate = kv.get_int("subsample_rate", c.subsample_rate);
    c.prefill_count = kv.get_int("prefill_count", c.prefill_count);
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    c.episodes = kv.get_int("episodes", c.episodes);
    c.eval_interval = kv.get_int("eval_interval", c.eval_interval);
    c.eval_rollouts = kv.get_int("eval_rollouts", c.eval_rollouts);
    c.num_seeds = kv.get_int("seeds", c.num_seeds);
    c.eval_full_demos = kv.get_flag("eval_full_demos", c.eval_full_demos);
    c.gamma = kv.get_real("gamma", c.gamma);
    c.learning_rate = kv.get_real("learning_rate", c.learning_rate);
    c.epsilon_start = kv.get_real("epsilon_start", c.epsilon_start);
    c.epsilon_end = kv.get_real("epsilon_end", c.epsilon_end);
    c.epsilon_decay_episodes = kv.get_int("epsilon_decay_episodes", c.epsilon_decay_episodes);
    c.batch_size = kv.get_int("batch_size", c.batch_size);
    c.buffer_capacity = kv.get_int("buffer_capacity", c.buffer_capacity);
    c.bins = kv.get_int("bins", c.bins);
    c.update_every = kv.get_int("update_every", c.update_every);
    c.embeddings_path = kv.get_str("embeddings", "");
    c.validate();
    return c;
  }
};

}  // namespace pwil
