#pragma once

#include "rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aggne {

// Undirected edges over nodes 0..n-1, no self loops.
using EdgeList = std::vector<std::pair<int, int>>;

using MixingMatrix = Eigen::MatrixXd;

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Metropolis-style weights with closed neighborhoods: the weight on edge
// (i, j) is 1 / max(deg_i + 1, deg_j + 1) and the diagonal absorbs the
// remainder, which keeps it nonnegative for every graph. The result is
// symmetric and doubly stochastic.
inline MixingMatrix metropolis_weights(const EdgeList& edges, int n) {
  if (n < 1) throw std::invalid_argument("metropolis_weights: empty node set");
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw std::invalid_argument("metropolis_weights: edge endpoint out of range");
    if (a == b) throw std::invalid_argument("metropolis_weights: self loop");
    ++degree[static_cast<std::size_t>(a)];
    ++degree[static_cast<std::size_t>(b)];
  }
  MixingMatrix w = MixingMatrix::Zero(n, n);
  for (const auto& [a, b] : edges) {
    const double weight = 1.0 / std::max(degree[static_cast<std::size_t>(a)] + 1,
                                         degree[static_cast<std::size_t>(b)] + 1);
    w(a, b) += weight;
    w(b, a) += weight;
  }
  for (int i = 0; i < n; ++i) {
    const double off = w.row(i).sum();
    if (off > 1.0)
      throw std::runtime_error("metropolis_weights: negative diagonal at node " +
                               std::to_string(i));
    w(i, i) = 1.0 - off;
  }
  return w;
}

// Checks nonnegativity, row and column sums within tol of one, and that every
// strictly positive entry clears eta. Violations are reported, never
// silently dropped.
inline ValidationReport validate(const MixingMatrix& w, double eta, double tol = 1e-12) {
  ValidationReport report;
  auto fail = [&report](std::string msg) {
    report.ok = false;
    report.violations.push_back(std::move(msg));
  };
  if (w.rows() != w.cols()) {
    fail("matrix is not square");
    return report;
  }
  const int n = static_cast<int>(w.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (w(i, j) < 0.0)
        fail("negative entry at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      if (w(i, j) > 0.0 && w(i, j) < eta - 1e-15)
        fail("positive entry below eta at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  for (int i = 0; i < n; ++i) {
    if (std::abs(w.row(i).sum() - 1.0) > tol)
      fail("row " + std::to_string(i) + " sums to " + std::to_string(w.row(i).sum()));
    if (std::abs(w.col(i).sum() - 1.0) > tol)
      fail("column " + std::to_string(i) + " sums to " + std::to_string(w.col(i).sum()));
  }
  return report;
}

inline bool union_connected(const std::vector<EdgeList>& graphs, int n) {
  if (n <= 1) return true;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& g : graphs)
    for (const auto& [a, b] : g) {
      adj[static_cast<std::size_t>(a)].push_back(b);
      adj[static_cast<std::size_t>(b)].push_back(a);
    }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[static_cast<std::size_t>(u)])
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++reached;
        frontier.push(v);
      }
  }
  return reached == n;
}

enum class TopologyMode { cyclic, random };

inline std::string to_string(TopologyMode mode) {
  return mode == TopologyMode::cyclic ? "cyclic" : "random";
}

inline TopologyMode topology_mode_from_string(const std::string& s) {
  if (s == "cyclic") return TopologyMode::cyclic;
  if (s == "random") return TopologyMode::random;
  throw std::invalid_argument("unknown topology mode: " + s);
}

// Time-varying communication topology drawn from a fixed set of base graphs
// whose union must be connected. Mixing matrices are built once; draws are
// pure given a stream, so schedules are safe to share across trials.
class GraphSchedule {
 public:
  GraphSchedule(std::vector<EdgeList> base_graphs, int n_nodes, TopologyMode mode,
                int window = 0)
      : base_(std::move(base_graphs)), n_(n_nodes), mode_(mode) {
    if (base_.empty()) throw std::invalid_argument("GraphSchedule: no base graphs");
    if (!union_connected(base_, n_))
      throw std::invalid_argument("GraphSchedule: union of base graphs is not connected");
    window_ = window > 0 ? window : static_cast<int>(base_.size());
    mats_.reserve(base_.size());
    eta_ = 1.0;
    for (const auto& g : base_) {
      MixingMatrix w = metropolis_weights(g, n_);
      for (Eigen::Index i = 0; i < w.size(); ++i)
        if (w.data()[i] > 0.0) eta_ = std::min(eta_, w.data()[i]);
      mats_.push_back(std::move(w));
    }
  }

  int n_nodes() const { return n_; }
  TopologyMode mode() const { return mode_; }
  int window() const { return window_; }
  std::size_t graph_count() const { return base_.size(); }
  const std::vector<EdgeList>& base_graphs() const { return base_; }
  const MixingMatrix& matrix(std::size_t idx) const { return mats_.at(idx); }

  // Minimum strictly positive weight over all base matrices, measured rather
  // than assumed.
  double min_positive_weight() const { return eta_; }

  std::size_t draw_index(long k, const RngStream& stream) const {
    if (k < 0) throw std::invalid_argument("draw_index: negative iteration");
    if (mode_ == TopologyMode::cyclic)
      return static_cast<std::size_t>(k) % base_.size();
    RngStream local = stream.fork(static_cast<std::uint64_t>(k));
    return static_cast<std::size_t>(local.next_u64() % base_.size());
  }

 private:
  std::vector<EdgeList> base_;
  std::vector<MixingMatrix> mats_;
  int n_;
  int window_ = 1;
  TopologyMode mode_;
  double eta_ = 1.0;
};

// Topology draw for iteration k, keyed by k through the given stream so the
// sequence is independent of evaluation order.
inline const MixingMatrix& draw_matrix(const GraphSchedule& schedule, long k,
                                       const RngStream& stream) {
  return schedule.matrix(schedule.draw_index(k, stream));
}

// Ordered product W_k W_{k-1} ... W_s; the empty product (k == s - 1) is the
// identity.
inline Eigen::MatrixXd transition_product(const GraphSchedule& schedule, long k, long s,
                                          const RngStream& stream) {
  if (k < s - 1) throw std::invalid_argument("transition_product: requires k >= s - 1");
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(schedule.n_nodes(), schedule.n_nodes());
  for (long t = s; t <= k; ++t) phi = draw_matrix(schedule, t, stream) * phi;
  return phi;
}

struct MixingConstants {
  double theta_mix = 1.0;  // geometric prefactor, >= 1
  double beta_mix = 0.0;   // geometric rate, in (0, 1)
  double eta = 0.0;        // minimum positive weight
};

// Geometric mixing constants: with rho = 1 - eta / (4 N^2), theta = rho^-2
// and beta = rho^(1/B) for connectivity window B.
inline MixingConstants mixing_constants_from(double eta, int n, int window) {
  if (eta <= 0.0 || eta > 1.0) throw std::invalid_argument("mixing constants: eta not in (0, 1]");
  if (n < 1 || window < 1) throw std::invalid_argument("mixing constants: bad dimensions");
  const double nd = static_cast<double>(n);
  const double rho = 1.0 - eta / (4.0 * nd * nd);
  MixingConstants mc;
  mc.eta = eta;
  mc.theta_mix = 1.0 / (rho * rho);
  mc.beta_mix = std::pow(rho, 1.0 / static_cast<double>(window));
  return mc;
}

inline MixingConstants mixing_constants(const GraphSchedule& schedule) {
  return mixing_constants_from(schedule.min_positive_weight(), schedule.n_nodes(),
                               schedule.window());
}

// Four sparse base graphs built from two seeded Hamiltonian cycles, each
// split into its alternating halves. For even n the halves are perfect
// matchings; for odd n the leftover edge joins the first half. The union
// contains a full cycle, so it is always connected.
inline std::vector<EdgeList> default_base_graphs(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("default_base_graphs: need at least two nodes");
  RngStream root(seed);
  std::vector<EdgeList> graphs;
  for (int ring = 0; ring < 2; ++ring) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    RngStream shuffle = root.fork(static_cast<std::uint64_t>(ring));
    for (int i = n - 1; i > 0; --i) {
      const auto j =
          static_cast<int>(shuffle.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    EdgeList half_a, half_b;
    const int edge_count = n == 2 ? 1 : n;
    for (int j = 0; j < edge_count; ++j) {
      const int a = perm[static_cast<std::size_t>(j)];
      const int b = perm[static_cast<std::size_t>((j + 1) % n)];
      (j % 2 == 0 ? half_a : half_b).emplace_back(a, b);
    }
    graphs.push_back(std::move(half_a));
    if (!half_b.empty()) graphs.push_back(std::move(half_b));
  }
  return graphs;
}

inline GraphSchedule default_schedule(int n, std::uint64_t topology_seed,
                                      TopologyMode mode = TopologyMode::random) {
  return GraphSchedule(default_base_graphs(n, topology_seed), n, mode);
}

}  // namespace aggne
