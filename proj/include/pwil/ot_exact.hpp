#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pwil/metric.hpp"
#include "pwil/types.hpp"

namespace pwil {

// One arc of an exact transport plan; mass = units / (T*D).
struct TransportEntry {
  int i = 0;
  int j = 0;
  std::int64_t units = 0;
};

struct W1Result {
  double value = 0.0;
  Coupling coupling;
  std::vector<TransportEntry> plan;  // exact integer flows on the 1/(T*D) grid
};

inline std::vector<double> distance_matrix(const EmpiricalMeasure& mu,
                                           const EmpiricalMeasure& nu,
                                           const MetricSpec& metric) {
  std::vector<double> d(static_cast<size_t>(mu.size()) * nu.size());
  for (int i = 0; i < mu.size(); ++i) {
    for (int j = 0; j < nu.size(); ++j) {
      d[static_cast<size_t>(i) * nu.size() + j] =
          distance(metric, mu.atoms[i].point, nu.atoms[j].point);
    }
  }
  return d;
}

namespace detail {

// Transportation simplex on the dense bipartite instance with integer
// supplies: row i supplies D units, column j demands T units (grid units
// of 1/(T*D)), so all flows stay integral and degenerate pivots cannot
// drift. Entering arc: Bland's rule (lowest cell index with negative
// reduced cost). Leaving arc: minimum flow on the cycle's minus arcs,
// lowest cell index on ties.
class TransportSimplex {
 public:
  TransportSimplex(const std::vector<double>& cost, int T, int D)
      : cost_(cost), T_(T), D_(D), n_(T + D) {
    if (T < 1 || D < 1) throw std::invalid_argument("transport: empty marginal");
    if (cost.size() != static_cast<size_t>(T) * D) {
      throw std::invalid_argument("transport: cost matrix shape mismatch");
    }
    flow_.assign(cost_.size(), 0);
    basic_.assign(cost_.size(), 0);
    adj_.assign(n_, {});
    u_.assign(T_, 0.0);
    v_.assign(D_, 0.0);
    double scale = 1.0;
    for (double c : cost_) scale = std::max(scale, std::abs(c));
    tol_ = 1e-12 * scale;
  }

  void solve() {
    northwest_corner();
    // max pivot guard; Bland's rule terminates long before this
    const std::int64_t cap = 1000LL * (T_ + D_) * std::max(T_, D_) + 100000LL;
    for (std::int64_t it = 0; it < cap; ++it) {
      compute_duals();
      int enter = entering_arc();
      if (enter < 0) return;
      pivot(enter);
    }
    throw std::logic_error("transport simplex exceeded pivot cap");
  }

  std::int64_t flow_at(int cell) const { return flow_[cell]; }
  const std::vector<std::int64_t>& flows() const { return flow_; }

 private:
  int row_of(int cell) const { return cell / D_; }
  int col_of(int cell) const { return cell % D_; }
  int sink_node(int j) const { return T_ + j; }

  void add_basic(int cell) {
    basic_[cell] = 1;
    adj_[row_of(cell)].push_back(cell);
    adj_[sink_node(col_of(cell))].push_back(cell);
  }

  void drop_basic(int cell) {
    basic_[cell] = 0;
    auto erase_from = [cell](std::vector<int>& lst) {
      lst.erase(std::find(lst.begin(), lst.end(), cell));
    };
    erase_from(adj_[row_of(cell)]);
    erase_from(adj_[sink_node(col_of(cell))]);
  }

  // Initial spanning-tree basis with exactly T+D-1 cells; simultaneous
  // supply/demand exhaustion leaves zero-flow basic cells behind.
  void northwest_corner() {
    std::int64_t rem_a = D_;  // row supply in grid units
    std::int64_t rem_b = T_;  // column demand in grid units
    int i = 0, j = 0;
    while (true) {
      std::int64_t f = std::min(rem_a, rem_b);
      int cell = i * D_ + j;
      flow_[cell] = f;
      add_basic(cell);
      rem_a -= f;
      rem_b -= f;
      if (i == T_ - 1 && j == D_ - 1) break;
      if (rem_a == 0 && i < T_ - 1) {
        ++i;
        rem_a = D_;
      } else {
        ++j;
        rem_b = T_;
      }
    }
  }

  // u_i + v_j = c_ij on basic arcs, anchored at u_0 = 0; one tree walk.
  void compute_duals() {
    seen_.assign(n_, 0);
    stack_.clear();
    stack_.push_back(0);
    seen_[0] = 1;
    u_[0] = 0.0;
    while (!stack_.empty()) {
      int node = stack_.back();
      stack_.pop_back();
      for (int cell : adj_[node]) {
        int r = row_of(cell);
        int s = sink_node(col_of(cell));
        int other = (node == r) ? s : r;
        if (seen_[other]) continue;
        seen_[other] = 1;
        if (other == s) {
          v_[col_of(cell)] = cost_[cell] - u_[r];
        } else {
          u_[r] = cost_[cell] - v_[col_of(cell)];
        }
        stack_.push_back(other);
      }
    }
  }

  int entering_arc() const {
    const int total = T_ * D_;
    for (int cell = 0; cell < total; ++cell) {
      if (basic_[cell]) continue;
      double rc = cost_[cell] - u_[row_of(cell)] - v_[col_of(cell)];
      if (rc < -tol_) return cell;
    }
    return -1;
  }

  void pivot(int enter) {
    // tree path from the entering arc's row node to its column node
    int src = row_of(enter);
    int dst = sink_node(col_of(enter));
    parent_cell_.assign(n_, -1);
    parent_node_.assign(n_, -1);
    seen_.assign(n_, 0);
    stack_.clear();
    stack_.push_back(src);
    seen_[src] = 1;
    while (!stack_.empty()) {
      int node = stack_.back();
      stack_.pop_back();
      if (node == dst) break;
      for (int cell : adj_[node]) {
        int r = row_of(cell);
        int s = sink_node(col_of(cell));
        int other = (node == r) ? s : r;
        if (seen_[other]) continue;
        seen_[other] = 1;
        parent_cell_[other] = cell;
        parent_node_[other] = node;
        stack_.push_back(other);
      }
    }

    path_.clear();  // cells from dst back to src
    for (int node = dst; node != src; node = parent_node_[node]) {
      path_.push_back(parent_cell_[node]);
    }
    // walking from src toward dst, signs alternate -, +, -, ... starting
    // at the arc incident to src (it shares the entering arc's row)
    std::reverse(path_.begin(), path_.end());

    std::int64_t theta = -1;
    int leave = -1;
    for (size_t k = 0; k < path_.size(); ++k) {
      if (k % 2 != 0) continue;  // minus arcs sit at even walk positions
      int cell = path_[k];
      if (theta < 0 || flow_[cell] < theta ||
          (flow_[cell] == theta && cell < leave)) {
        theta = flow_[cell];
        leave = cell;
      }
    }

    flow_[enter] += theta;
    for (size_t k = 0; k < path_.size(); ++k) {
      flow_[path_[k]] += (k % 2 == 0) ? -theta : theta;
    }
    add_basic(enter);
    drop_basic(leave);
  }

  const std::vector<double>& cost_;
  int T_, D_, n_;
  double tol_;
  std::vector<std::int64_t> flow_;
  std::vector<char> basic_;
  std::vector<std::vector<int>> adj_;  // node -> incident basic cells
  std::vector<double> u_, v_;

  // scratch
  std::vector<char> seen_;
  std::vector<int> stack_, parent_cell_, parent_node_, path_;
};

}  // namespace detail

// Exact 1-Wasserstein between uniform empirical measures, on a
// precomputed row-major distance matrix.
inline W1Result solve_w1_matrix(const std::vector<double>& dist, int T, int D) {
  detail::TransportSimplex simplex(dist, T, D);
  simplex.solve();
  W1Result out;
  out.coupling = Coupling(T, D);
  double grid = static_cast<double>(T) * D;
  KahanSum value;
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < D; ++j) {
      std::int64_t f = simplex.flow_at(i * D + j);
      if (f == 0) continue;
      out.plan.push_back({i, j, f});
      double mass = static_cast<double>(f) / grid;
      out.coupling.at(i, j) = mass;
      value.add(mass * dist[static_cast<size_t>(i) * D + j]);
    }
  }
  out.value = value.value();
  return out;
}

inline W1Result solve_w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                         const MetricSpec& metric) {
  if (mu.atoms.empty() || nu.atoms.empty()) throw std::invalid_argument("empty support");
  if (!mu.is_uniform() || !nu.is_uniform()) {
    throw std::invalid_argument("solve_w1 supports uniform weights only");
  }
  return solve_w1_matrix(distance_matrix(mu, nu, metric), mu.size(), nu.size());
}

// Exhaustive oracle for equal supports: with uniform equal-size marginals
// an optimal coupling is a permutation matrix, so minimize the mean
// matched distance over all n! assignments.
inline double solve_w1_permutation_oracle(const EmpiricalMeasure& mu,
                                          const EmpiricalMeasure& nu,
                                          const MetricSpec& metric,
                                          int max_n = 8) {
  int n = mu.size();
  if (n != nu.size()) throw std::invalid_argument("permutation oracle needs equal sizes");
  if (n > max_n) throw std::invalid_argument("instance too large for enumeration");
  auto d = distance_matrix(mu, nu, metric);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += d[static_cast<size_t>(i) * n + perm[i]];
    if (best < 0.0 || s < best) best = s;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

// Oracle for unequal supports: replicate atoms up to the lcm of the two
// sizes (replication leaves W1 unchanged), then enumerate assignments.
inline double solve_w1_unequal_oracle(const EmpiricalMeasure& mu,
                                      const EmpiricalMeasure& nu,
                                      const MetricSpec& metric) {
  int t = mu.size();
  int d = nu.size();
  std::int64_t lcm = std::lcm<std::int64_t>(t, d);
  if (lcm > 8) throw std::invalid_argument("instance too large for enumeration");
  int n = static_cast<int>(lcm);
  int rep_mu = n / t;
  int rep_nu = n / d;
  auto dist = distance_matrix(mu, nu, metric);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  do {
    double s = 0.0;
    for (int a = 0; a < n; ++a) {
      s += dist[static_cast<size_t>(a / rep_mu) * d + perm[a] / rep_nu];
    }
    if (best < 0.0 || s < best) best = s;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

// c_i = sum_j d_ij * theta_ij; the rows of the transport-cost inner
// product, summing exactly to the coupling's total cost.
inline std::vector<double> per_step_costs(const Coupling& coupling,
                                          const std::vector<double>& dist) {
  if (dist.size() != static_cast<size_t>(coupling.rows()) * coupling.cols()) {
    throw std::invalid_argument("per_step_costs: distance matrix shape mismatch");
  }
  std::vector<double> out(coupling.rows());
  for (int i = 0; i < coupling.rows(); ++i) {
    KahanSum row;
    for (int j = 0; j < coupling.cols(); ++j) {
      row.add(coupling.at(i, j) * dist[static_cast<size_t>(i) * coupling.cols() + j]);
    }
    out[i] = row.value();
  }
  return out;
}

}  // namespace pwil
