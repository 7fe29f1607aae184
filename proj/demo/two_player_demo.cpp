// Library-level walkthrough on a two-player, one-market instance: solve the
// equilibrium, run the three methods against it, and print the error decay.

#include <aggne/aggne.hpp>

#include <cstdio>
#include <vector>

int main() {
  using namespace aggne;

  // two identical firms, inverse demand p(S) = 10 - S, capacities [2, 10]
  std::vector<FirmParams> firms(2);
  for (auto& f : firms) {
    f.c = Eigen::VectorXd::Constant(1, 3.0);
    f.lower = Eigen::VectorXd::Constant(1, 2.0);
    f.upper = Eigen::VectorXd::Constant(1, 10.0);
  }
  MarketParams market;
  market.d = Eigen::VectorXd::Constant(1, 10.0);
  market.b = Eigen::VectorXd::Constant(1, 1.0);
  const CournotGame game(firms, market, default_noise(firms, market, true));

  const VISolution sol = solve_ne(game);
  std::printf("equilibrium: (%.6f, %.6f), residual %.1e\n", sol.x_star(0, 0), sol.x_star(0, 1),
              sol.residual);

  const Schedule sched = schedule_from(game.constants());
  const GraphSchedule graphs({{{0, 1}}}, 2, TopologyMode::cyclic);
  const FeasibleSet feas = feasible_set(game);
  const Eigen::MatrixXd init = 0.5 * (feas.lower + feas.upper);

  RunOptions opts;
  opts.x_star = &sol.x_star;
  std::printf("%-8s", "k");
  for (Algo algo : {Algo::oe, Algo::pga, Algo::extrag})
    std::printf("  %-12s", to_string(algo).c_str());
  std::printf("\n");

  std::vector<RunResult> results;
  for (Algo algo : {Algo::oe, Algo::pga, Algo::extrag})
    results.push_back(run(algo, game, Regularizer::euclidean(), sched, graphs, init, 10000,
                          RngStream(7), RngStream(8), opts));

  for (long k : {1L, 10L, 100L, 1000L, 10000L}) {
    std::printf("%-8ld", k);
    for (const RunResult& r : results) {
      double err = 0.0;
      for (const auto& row : r.rows)
        if (row.k == k) err = row.sq_err;
      std::printf("  %-12.3e", err);
    }
    std::printf("\n");
  }
  std::printf("gradient samples per trial: oe %ld, pga %ld, extrag %ld\n",
              results[0].total_samples, results[1].total_samples, results[2].total_samples);
  return 0;
}
