#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "pwil/types.hpp"

namespace pwil {

// Embedding vectors keyed by (episode, t). Sidecar-loaded; the library
// never computes embeddings itself.
class EmbeddingTable {
 public:
  void insert(int episode, int t, std::vector<double> emb) {
    table_[key(episode, t)] = std::move(emb);
  }

  const std::vector<double>* find(int episode, int t) const {
    auto it = table_.find(key(episode, t));
    return it == table_.end() ? nullptr : &it->second;
  }

  size_t size() const { return table_.size(); }

 private:
  static std::uint64_t key(int episode, int t) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(episode)) << 32) |
           static_cast<std::uint32_t>(t);
  }

  std::unordered_map<std::uint64_t, std::vector<double>> table_;
};

// Which distance to use and its parameters. Immutable once built.
struct MetricSpec {
  MetricKind kind = MetricKind::PlainEuclidean;
  std::vector<double> inv_std;  // standardized kinds only; length |S|+|A| or |S|
  std::shared_ptr<const EmbeddingTable> embeddings;

  static MetricSpec plain() { return MetricSpec{MetricKind::PlainEuclidean, {}, nullptr}; }

  static MetricSpec standardized(std::vector<double> inv_std) {
    return MetricSpec{MetricKind::StandardizedEuclidean, std::move(inv_std), nullptr};
  }

  static MetricSpec state_only(std::vector<double> inv_std) {
    return MetricSpec{MetricKind::StateOnlyStandardized, std::move(inv_std), nullptr};
  }

  static MetricSpec embedding(std::shared_ptr<const EmbeddingTable> table) {
    return MetricSpec{MetricKind::PrecomputedEmbedding, {}, std::move(table)};
  }

  bool uses_action() const {
    return kind == MetricKind::StandardizedEuclidean || kind == MetricKind::PlainEuclidean;
  }
};

struct StandardizerFit {
  std::vector<double> inv_std;
  std::vector<int> floored_dims;  // dimensions whose std hit the floor

  bool floored() const { return !floored_dims.empty(); }
};

// Per-dimension inverse population standard deviation over the pooled
// demonstration atoms (state‖action concatenated, or state only).
// Zero-variance dimensions are floored at `sigma_floor` before inversion.
inline StandardizerFit fit_standardizer(const std::vector<Trajectory>& demos,
                                        bool state_only = false,
                                        double sigma_floor = 1e-8) {
  std::vector<const Point*> pts;
  for (const auto& d : demos) {
    for (const auto& p : d.points) pts.push_back(&p);
  }
  if (pts.size() < 2) {
    throw std::invalid_argument("fit_standardizer needs at least 2 demonstration points");
  }
  size_t sdim = pts[0]->state.size();
  size_t adim = 0;
  if (!state_only) {
    if (!pts[0]->has_action()) {
      throw std::invalid_argument("fit_standardizer: demonstrations lack actions");
    }
    adim = pts[0]->action->size();
  }
  size_t dim = sdim + adim;

  auto coord = [&](const Point& p, size_t k) {
    return k < sdim ? p.state[k] : (*p.action)[k - sdim];
  };

  StandardizerFit fit;
  fit.inv_std.resize(dim);
  double n = static_cast<double>(pts.size());
  for (size_t k = 0; k < dim; ++k) {
    KahanSum mean_acc;
    for (const Point* p : pts) mean_acc.add(coord(*p, k));
    double mean = mean_acc.value() / n;
    KahanSum var_acc;
    for (const Point* p : pts) {
      double dx = coord(*p, k) - mean;
      var_acc.add(dx * dx);
    }
    double sigma = std::sqrt(var_acc.value() / n);
    if (sigma < sigma_floor) {
      sigma = sigma_floor;
      fit.floored_dims.push_back(static_cast<int>(k));
    }
    fit.inv_std[k] = 1.0 / sigma;
  }
  return fit;
}

namespace detail {

inline double weighted_l2(const std::vector<double>& a, const std::vector<double>& b,
                          const double* w) {
  if (a.size() != b.size()) throw std::invalid_argument("distance: dimension mismatch");
  double acc = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    double d = a[k] - b[k];
    if (w) d *= w[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline double concat_l2(const Point& x, const Point& y, const std::vector<double>& inv_std,
                        bool weighted) {
  if (x.state.size() != y.state.size()) {
    throw std::invalid_argument("distance: state dimension mismatch");
  }
  if (!x.has_action() || !y.has_action()) {
    throw std::invalid_argument("distance: state-action metric requires actions");
  }
  if (x.action->size() != y.action->size()) {
    throw std::invalid_argument("distance: action dimension mismatch");
  }
  size_t sdim = x.state.size();
  size_t dim = sdim + x.action->size();
  if (weighted && inv_std.size() != dim) {
    throw std::invalid_argument("distance: inv_std length mismatch");
  }
  double acc = 0.0;
  for (size_t k = 0; k < dim; ++k) {
    double xv = k < sdim ? x.state[k] : (*x.action)[k - sdim];
    double yv = k < sdim ? y.state[k] : (*y.action)[k - sdim];
    double d = xv - yv;
    if (weighted) d *= inv_std[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace detail

inline double distance(const MetricSpec& spec, const Point& x, const Point& y) {
  switch (spec.kind) {
    case MetricKind::StandardizedEuclidean:
      return detail::concat_l2(x, y, spec.inv_std, true);
    case MetricKind::PlainEuclidean:
      return detail::concat_l2(x, y, spec.inv_std, false);
    case MetricKind::StateOnlyStandardized:
      if (spec.inv_std.size() != x.state.size()) {
        throw std::invalid_argument("distance: inv_std length mismatch");
      }
      return detail::weighted_l2(x.state, y.state, spec.inv_std.data());
    case MetricKind::PrecomputedEmbedding: {
      if (!spec.embeddings) throw std::invalid_argument("distance: no embedding table");
      const auto* ex = spec.embeddings->find(x.episode, x.t);
      const auto* ey = spec.embeddings->find(y.episode, y.t);
      if (!ex || !ey) {
        throw std::invalid_argument("distance: missing embedding for (episode,t) key");
      }
      return detail::weighted_l2(*ex, *ey, nullptr);
    }
  }
  throw std::logic_error("unreachable metric kind");
}

// Dimensionality of the space the metric operates in; feeds the reward
// normalizer.
inline int metric_dimension(const MetricSpec& spec, int state_dim, int action_dim) {
  switch (spec.kind) {
    case MetricKind::StandardizedEuclidean:
    case MetricKind::PlainEuclidean:
      return state_dim + action_dim;
    case MetricKind::StateOnlyStandardized:
      return state_dim;
    case MetricKind::PrecomputedEmbedding:
      return state_dim + action_dim;  // caller typically pairs this with HorizonOnly
  }
  return state_dim + action_dim;
}

}  // namespace pwil
