#pragma once

#include "game.hpp"
#include "mirror.hpp"
#include "network.hpp"
#include "rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aggne {

// Diminishing step-size schedule with shift c0 = 4 lip / mu:
//   alpha_k  = 1 / (mu (k + c0 - 1))
//   theta_k  = (k + c0 + 1)(k + c0)
//   lambda_k = (k + c0 - 1)^2 / ((k + c0 + 1)(k + c0 - 2))
// The lambda value is exactly theta_{k-1} alpha_{k-1} / (theta_k alpha_k), so
// theta_k alpha_k lambda_k telescopes; the evaluators extend to k = 0 with
// theta_0 alpha_0 = c0 (c0 + 1) / (mu (c0 - 1)).
struct Schedule {
  double c0 = 0.0;
  double mu = 0.0;
  double lip = 0.0;

  double alpha(long k) const { return 1.0 / (mu * (static_cast<double>(k) + c0 - 1.0)); }

  double theta(long k) const {
    const double t = static_cast<double>(k) + c0;
    return (t + 1.0) * t;
  }

  double lambda(long k) const {
    const double t = static_cast<double>(k) + c0;
    return (t - 1.0) * (t - 1.0) / ((t + 1.0) * (t - 2.0));
  }
};

inline Schedule schedule_from(const GameConstants& gc) {
  if (gc.mu <= 0.0) throw std::invalid_argument("schedule_from: mu must be positive");
  if (gc.lip < gc.mu) throw std::invalid_argument("schedule_from: lip must be at least mu");
  return Schedule{4.0 * gc.lip / gc.mu, gc.mu, gc.lip};
}

enum class Algo { oe, pga, extrag };

inline std::string to_string(Algo a) {
  switch (a) {
    case Algo::oe: return "oe";
    case Algo::pga: return "pga";
    case Algo::extrag: return "extrag";
  }
  return "?";
}

inline Algo algo_from_string(const std::string& s) {
  if (s == "oe") return Algo::oe;
  if (s == "pga") return Algo::pga;
  if (s == "extrag") return Algo::extrag;
  throw std::invalid_argument("unknown algorithm: " + s);
}

// Counts stochastic gradient oracle calls.
struct SampleCounter {
  long calls = 0;
};

// Per-player strategies, aggregate-average estimates, the latest intermediate
// consensus estimate, and the previous gradient samples, one column per
// player. The tracking construction keeps sum_i v_i equal to the aggregate of
// the strategies at every iteration.
struct AlgoState {
  Eigen::MatrixXd x;
  Eigen::MatrixXd v;
  Eigen::MatrixXd v_hat;
  Eigen::MatrixXd q_prev;
  long k = 1;
};

inline AlgoState make_state(const Eigen::MatrixXd& x1) {
  AlgoState s;
  s.x = x1;
  s.v = x1;  // the average estimate starts at the own strategy
  s.v_hat = x1;
  s.q_prev = Eigen::MatrixXd::Zero(x1.rows(), x1.cols());
  s.k = 1;
  return s;
}

// One consensus round: v_hat_i = sum_j w_ij v_j. Column stochasticity of w
// preserves the column sum of v.
inline Eigen::MatrixXd consensus_step(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w) {
  if (w.rows() != w.cols() || w.rows() != v.cols())
    throw std::invalid_argument("consensus_step: dimension mismatch");
  return v * w.transpose();
}

inline Eigen::MatrixXd oe_direction(double lambda, const Eigen::MatrixXd& q_now,
                                    const Eigen::MatrixXd& q_prev) {
  return (1.0 + lambda) * q_now - lambda * q_prev;
}

// Stacked feasible set of a game, cached once per run.
struct FeasibleSet {
  std::vector<BoxSet> boxes;
  Eigen::MatrixXd lower;
  Eigen::MatrixXd upper;
};

template <aggregative_game G>
FeasibleSet feasible_set(const G& game) {
  FeasibleSet f;
  const int n = game.n_players();
  const int m = game.n_markets();
  f.lower.resize(m, n);
  f.upper.resize(m, n);
  f.boxes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    BoxSet box = game.box(i);
    f.lower.col(i) = box.lower;
    f.upper.col(i) = box.upper;
    f.boxes.push_back(std::move(box));
  }
  return f;
}

namespace detail {

inline Eigen::MatrixXd clamp_profile(const Eigen::MatrixXd& x, const FeasibleSet& feas) {
  return x.cwiseMax(feas.lower).cwiseMin(feas.upper);
}

}  // namespace detail

// Advances the state by one synchronous iteration with explicit step
// coefficients. All three methods share the consensus and tracking
// scaffolding and differ only in the strategy update:
//   oe      one fresh sample per player, extrapolated direction, prox step
//   pga     one fresh sample, plain projected step
//   extrag  two fresh samples against the same aggregate estimate, two
//           projected steps
// Gradient noise is keyed by (iteration, player) through the trial stream, so
// trajectories do not depend on evaluation order. At the first iteration the
// previous sample is defined to equal the current one and the extrapolation
// term vanishes.
template <aggregative_game G>
void step_with(Algo algo, AlgoState& state, const G& game, const Regularizer& reg,
               const FeasibleSet& feas, double alpha, double lambda, const Eigen::MatrixXd& w,
               const RngStream& trial_stream, SampleCounter& counter) {
  const int n = game.n_players();
  const int m = game.n_markets();
  const double n_scale = static_cast<double>(n);

  state.v_hat = consensus_step(state.v, w);
  const RngStream iter_stream = trial_stream.fork(static_cast<std::uint64_t>(state.k));

  Eigen::MatrixXd q_now(m, n);
  Eigen::MatrixXd x_next(m, n);
  switch (algo) {
    case Algo::oe: {
      for (int i = 0; i < n; ++i) {
        RngStream rng = iter_stream.fork(static_cast<std::uint64_t>(i));
        q_now.col(i) =
            game.sample_gradient(i, state.x.col(i), n_scale * state.v_hat.col(i), rng);
      }
      counter.calls += n;
      // At k = 1 the previous sample is defined to equal the current one, so
      // the extrapolation term vanishes identically.
      if (state.k == 1) state.q_prev = q_now;
      const Eigen::MatrixXd dir =
          state.k == 1 ? q_now : oe_direction(lambda, q_now, state.q_prev);
      if (reg.is_euclidean()) {
        x_next = detail::clamp_profile(state.x - alpha * dir, feas);
      } else {
        for (int i = 0; i < n; ++i)
          x_next.col(i) = prox_step(reg, feas.boxes[static_cast<std::size_t>(i)],
                                    state.x.col(i), dir.col(i), alpha);
      }
      break;
    }
    case Algo::pga: {
      for (int i = 0; i < n; ++i) {
        RngStream rng = iter_stream.fork(static_cast<std::uint64_t>(i));
        q_now.col(i) =
            game.sample_gradient(i, state.x.col(i), n_scale * state.v_hat.col(i), rng);
      }
      counter.calls += n;
      x_next = detail::clamp_profile(state.x - alpha * q_now, feas);
      break;
    }
    case Algo::extrag: {
      Eigen::MatrixXd x_half(m, n);
      for (int i = 0; i < n; ++i) {
        RngStream rng = iter_stream.fork(static_cast<std::uint64_t>(i));
        const Eigen::VectorXd z = n_scale * state.v_hat.col(i);
        const Eigen::VectorXd q1 = game.sample_gradient(i, state.x.col(i), z, rng);
        x_half.col(i) = feas.boxes[static_cast<std::size_t>(i)].clamp(state.x.col(i) - alpha * q1);
        q_now.col(i) = game.sample_gradient(i, x_half.col(i), z, rng);
      }
      counter.calls += 2 * n;
      x_next = detail::clamp_profile(state.x - alpha * q_now, feas);
      break;
    }
  }

  state.v = state.v_hat + x_next - state.x;
  state.q_prev = q_now;
  state.x = x_next;
  ++state.k;
}

template <aggregative_game G>
void oe_iterate(AlgoState& state, const G& game, const Regularizer& reg, const Schedule& sched,
                const Eigen::MatrixXd& w, const RngStream& trial_stream,
                SampleCounter* counter = nullptr) {
  SampleCounter local;
  step_with(Algo::oe, state, game, reg, feasible_set(game), sched.alpha(state.k),
            sched.lambda(state.k), w, trial_stream, counter ? *counter : local);
}

template <aggregative_game G>
void pga_iterate(AlgoState& state, const G& game, const Regularizer& reg, const Schedule& sched,
                 const Eigen::MatrixXd& w, const RngStream& trial_stream,
                 SampleCounter* counter = nullptr) {
  SampleCounter local;
  step_with(Algo::pga, state, game, reg, feasible_set(game), sched.alpha(state.k),
            sched.lambda(state.k), w, trial_stream, counter ? *counter : local);
}

template <aggregative_game G>
void extragradient_iterate(AlgoState& state, const G& game, const Regularizer& reg,
                           const Schedule& sched, const Eigen::MatrixXd& w,
                           const RngStream& trial_stream, SampleCounter* counter = nullptr) {
  SampleCounter local;
  step_with(Algo::extrag, state, game, reg, feasible_set(game), sched.alpha(state.k),
            sched.lambda(state.k), w, trial_stream, counter ? *counter : local);
}

// Dense rows up to dense_until, then one row per leading two significant
// digits of k (every 10 below 1e4, every 100 below 1e5, ...). The final
// iteration is always recorded.
struct StridePolicy {
  long dense_until = 1000;

  bool record(long k, long iters) const {
    if (k < 1) return false;
    if (k == iters || k <= dense_until) return true;
    long p = 1;
    while (p <= k / 10) p *= 10;
    const long stride = std::max(1L, p / 100);
    return k % stride == 0;
  }
};

// Metrics for one recorded iteration. Row k describes the state right after
// the k-th update: sq_err and bregman_dist compare the updated strategies
// against the reference profile, while the consensus columns measure the
// intermediate estimates used during the update against the pre-update
// aggregate. samples counts gradient draws per player in this iteration.
struct TrajectoryRow {
  long k = 0;
  double sq_err = std::numeric_limits<double>::quiet_NaN();
  double bregman_dist = std::numeric_limits<double>::quiet_NaN();
  double consensus_mean = 0.0;
  double consensus_max = 0.0;
  double epsilon = 0.0;
  double tracking_drift = 0.0;
  long samples = 0;
};

struct RunResult {
  std::vector<TrajectoryRow> rows;
  double max_tracking_drift = 0.0;
  long total_samples = 0;
  Eigen::MatrixXd x_final;
};

struct RunOptions {
  StridePolicy stride{};
  const Eigen::MatrixXd* x_star = nullptr;       // enables error metrics
  std::optional<double> step_override{};         // fixed step for the baselines
};

// Executes one trial: iterations are inherently sequential, distinct trials
// are independent given disjoint streams. Deterministic in (game, streams,
// options).
template <aggregative_game G>
RunResult run(Algo algo, const G& game, const Regularizer& reg, const Schedule& sched,
              const GraphSchedule& graphs, const Eigen::MatrixXd& init, long iters,
              const RngStream& trial_stream, const RngStream& graph_stream,
              const RunOptions& opts = {}) {
  if (iters < 1) throw std::invalid_argument("run: iters must be at least 1");
  if (init.rows() != game.n_markets() || init.cols() != game.n_players())
    throw std::invalid_argument("run: init does not match game dimensions");
  if (graphs.n_nodes() != game.n_players())
    throw std::invalid_argument("run: topology node count does not match player count");

  const FeasibleSet feas = feasible_set(game);
  for (int i = 0; i < game.n_players(); ++i)
    if (!feas.boxes[static_cast<std::size_t>(i)].contains(init.col(i)))
      throw std::invalid_argument("run: init is infeasible");

  const GameConstants gc = game.constants();
  const int n = game.n_players();
  const double n_scale = static_cast<double>(n);

  AlgoState state = make_state(init);
  SampleCounter counter;
  RunResult result;

  Eigen::VectorXd res(n), prev_res(n);
  bool have_prev_res = false;
  for (long k = 1; k <= iters; ++k) {
    const Eigen::VectorXd agg_prev = aggregate(state.x);
    const long calls_before = counter.calls;
    const double alpha =
        (opts.step_override && algo != Algo::oe) ? *opts.step_override : sched.alpha(k);
    step_with(algo, state, game, reg, feas, alpha, sched.lambda(k),
              draw_matrix(graphs, k, graph_stream), trial_stream, counter);

    for (int i = 0; i < n; ++i)
      res[i] = (n_scale * state.v_hat.col(i) - agg_prev).norm();
    if (!have_prev_res) {
      prev_res = res;  // first step: the previous estimate is defined as the current one
      have_prev_res = true;
    }

    const double drift =
        (state.v - state.x).rowwise().sum().template lpNorm<Eigen::Infinity>();
    result.max_tracking_drift = std::max(result.max_tracking_drift, drift);

    if (opts.stride.record(k, iters)) {
      TrajectoryRow row;
      row.k = k;
      if (opts.x_star) {
        row.sq_err = (state.x - *opts.x_star).squaredNorm();
        double d = 0.0;
        for (int i = 0; i < n; ++i) d += bregman(reg, state.x.col(i), opts.x_star->col(i));
        row.bregman_dist = d;
      }
      row.consensus_mean = res.mean();
      row.consensus_max = res.maxCoeff();
      row.epsilon = 2.0 * (gc.lip_f.cwiseProduct(gc.m_i).cwiseProduct(res + prev_res)).sum();
      row.tracking_drift = drift;
      row.samples = (counter.calls - calls_before) / n;
      result.rows.push_back(row);
    }
    prev_res = res;
  }

  result.total_samples = counter.calls;
  result.x_final = state.x;
  return result;
}

}  // namespace aggne
