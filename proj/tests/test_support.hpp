#pragma once

// Independent oracles used by the tests: a dense linear solve for interior
// equilibria, brute-force corner enumeration, and plain reachability. These
// deliberately avoid the library's own solver and constant paths.

#include <aggne/game.hpp>
#include <aggne/network.hpp>

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace test_support {

inline aggne::CournotGame make_game(const std::vector<std::vector<double>>& costs,
                                    const std::vector<double>& d, const std::vector<double>& b,
                                    double lo, double hi, bool noise_enabled = false) {
  const auto m = static_cast<Eigen::Index>(d.size());
  std::vector<aggne::FirmParams> firms;
  for (const auto& c : costs) {
    aggne::FirmParams f;
    f.c = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    f.lower = Eigen::VectorXd::Constant(m, lo);
    f.upper = Eigen::VectorXd::Constant(m, hi);
    firms.push_back(std::move(f));
  }
  aggne::MarketParams market;
  market.d = Eigen::Map<const Eigen::VectorXd>(d.data(), m);
  market.b = Eigen::Map<const Eigen::VectorXd>(b.data(), m);
  aggne::NoiseModel noise = aggne::default_noise(firms, market, noise_enabled);
  return aggne::CournotGame(std::move(firms), std::move(market), std::move(noise));
}

// Interior equilibrium of a single-market instance by solving the stationary
// linear system b (I + 1 1') x = d - c directly.
inline Eigen::VectorXd interior_ne_single_market(const aggne::CournotGame& game) {
  const int n = game.n_players();
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(n, n);
  a.diagonal().array() += 1.0;
  a *= game.market().b[0];
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) rhs[i] = game.market().d[0] - game.firms()[static_cast<std::size_t>(i)].c[0];
  return Eigen::FullPivLU<Eigen::MatrixXd>(a).solve(rhs);
}

// Maximum Euclidean norm over all corners of a box, by enumeration.
inline double max_corner_norm(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  const auto m = lower.size();
  double best = 0.0;
  for (long mask = 0; mask < (1L << m); ++mask) {
    double sq = 0.0;
    for (Eigen::Index l = 0; l < m; ++l) {
      const double v = (mask >> l) & 1 ? upper[l] : lower[l];
      sq += v * v;
    }
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

inline bool reachable_all(const std::vector<aggne::EdgeList>& graphs, int n) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& g : graphs)
    for (const auto& [a, b] : g) {
      adj[static_cast<std::size_t>(a)].push_back(b);
      adj[static_cast<std::size_t>(b)].push_back(a);
    }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)])
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  return count == n;
}

inline aggne::EdgeList complete_edges(int n) {
  aggne::EdgeList edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return edges;
}

}  // namespace test_support
