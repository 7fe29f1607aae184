#pragma once

#include "algorithms.hpp"
#include "game.hpp"
#include "mirror.hpp"
#include "ne_oracle.hpp"
#include "network.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace aggne {

struct TopologyConfig {
  TopologyMode mode = TopologyMode::random;
  std::uint64_t seed = 101;
  int window = 0;  // 0 = one full pass over the base set
  std::vector<EdgeList> graphs;  // empty = generate from the topology seed
};

// One experiment: a game instance (inline or generated), an algorithm, and
// the trial layout. Flags on the command line override file values.
struct ExperimentConfig {
  int version = 1;
  std::optional<nlohmann::json> game;   // inline instance
  std::optional<std::string> game_file; // instance loaded from a separate file
  std::uint64_t game_seed = 1;          // otherwise: generated instance
  int n_players = 20;
  int n_markets = 3;
  std::string algo = "oe";
  std::string regularizer = "euclidean";  // the only kind accepted
  long iters = 10000;
  int trials = 20;
  std::uint64_t seed = 7;
  TopologyConfig topology;
  std::string init = "midpoint";  // midpoint | lower | upper
  std::optional<bool> noise;      // absent = inline game's flag, or on for random instances
  bool shared_graph_draws = true;
  long stride_dense_until = 1000;
  std::optional<double> step_override;  // fixed step for the baselines
  std::string out = "results.csv";
  std::string oracle_cache;  // directory; empty = no caching
  int threads = 0;           // 0 = hardware concurrency
};

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["version"] = cfg.version;
  if (cfg.game) j["game"] = *cfg.game;
  if (cfg.game_file) j["game_file"] = *cfg.game_file;
  j["game_seed"] = cfg.game_seed;
  j["n_players"] = cfg.n_players;
  j["n_markets"] = cfg.n_markets;
  j["algo"] = cfg.algo;
  j["regularizer"] = cfg.regularizer;
  j["iters"] = cfg.iters;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["topology"] = {{"mode", to_string(cfg.topology.mode)},
                   {"seed", cfg.topology.seed},
                   {"window", cfg.topology.window}};
  if (!cfg.topology.graphs.empty()) {
    nlohmann::json graphs = nlohmann::json::array();
    for (const auto& g : cfg.topology.graphs) {
      nlohmann::json edges = nlohmann::json::array();
      for (const auto& [a, b] : g) edges.push_back({a, b});
      graphs.push_back(edges);
    }
    j["topology"]["graphs"] = graphs;
  }
  j["init"] = cfg.init;
  if (cfg.noise) j["noise"] = *cfg.noise;
  j["shared_graph_draws"] = cfg.shared_graph_draws;
  j["stride_dense_until"] = cfg.stride_dense_until;
  if (cfg.step_override) j["step_override"] = *cfg.step_override;
  j["out"] = cfg.out;
  j["oracle_cache"] = cfg.oracle_cache;
  j["threads"] = cfg.threads;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.version = j.value("version", cfg.version);
  if (j.contains("game")) cfg.game = j.at("game");
  if (j.contains("game_file")) cfg.game_file = j.at("game_file").get<std::string>();
  cfg.game_seed = j.value("game_seed", cfg.game_seed);
  cfg.n_players = j.value("n_players", cfg.n_players);
  cfg.n_markets = j.value("n_markets", cfg.n_markets);
  cfg.algo = j.value("algo", cfg.algo);
  cfg.regularizer = j.value("regularizer", cfg.regularizer);
  cfg.iters = j.value("iters", cfg.iters);
  cfg.trials = j.value("trials", cfg.trials);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("topology")) {
    const auto& jt = j.at("topology");
    cfg.topology.mode = topology_mode_from_string(jt.value("mode", std::string("random")));
    cfg.topology.seed = jt.value("seed", cfg.topology.seed);
    cfg.topology.window = jt.value("window", cfg.topology.window);
    if (jt.contains("graphs")) {
      for (const auto& jg : jt.at("graphs")) {
        EdgeList edges;
        for (const auto& je : jg) edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
        cfg.topology.graphs.push_back(std::move(edges));
      }
    }
  }
  cfg.init = j.value("init", cfg.init);
  if (j.contains("noise")) cfg.noise = j.at("noise").get<bool>();
  cfg.shared_graph_draws = j.value("shared_graph_draws", cfg.shared_graph_draws);
  cfg.stride_dense_until = j.value("stride_dense_until", cfg.stride_dense_until);
  if (j.contains("step_override") && !j.at("step_override").is_null())
    cfg.step_override = j.at("step_override").get<double>();
  cfg.out = j.value("out", cfg.out);
  cfg.oracle_cache = j.value("oracle_cache", cfg.oracle_cache);
  cfg.threads = j.value("threads", cfg.threads);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

inline void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_config: cannot open " + path.string());
  out << config_to_json(cfg).dump(2) << "\n";
}

// Instantiates the configured game: an inline instance wins over a game
// file, which wins over the seeded generator. An explicit noise flag in the
// experiment overrides the instance's own flag.
inline CournotGame resolve_game(const ExperimentConfig& cfg) {
  nlohmann::json inline_game;
  if (cfg.game) {
    inline_game = *cfg.game;
  } else if (cfg.game_file) {
    std::ifstream in(*cfg.game_file);
    if (!in) throw std::runtime_error("resolve_game: cannot open " + *cfg.game_file);
    in >> inline_game;
  } else {
    return random_instance(cfg.game_seed, cfg.n_players, cfg.n_markets, cfg.noise.value_or(true));
  }
  CournotGame game = game_from_json(inline_game);
  if (cfg.noise && game.noise().enabled != *cfg.noise) {
    std::vector<FirmParams> firms = game.firms();
    MarketParams market = game.market();
    NoiseModel noise = default_noise(firms, market, *cfg.noise);
    return CournotGame(std::move(firms), std::move(market), std::move(noise));
  }
  return game;
}

// Builds the topology and records the resolved edge lists back into the
// config so a saved run config reproduces the exact graphs.
inline GraphSchedule resolve_topology(ExperimentConfig& cfg, int n) {
  if (cfg.topology.graphs.empty())
    cfg.topology.graphs = default_base_graphs(n, cfg.topology.seed);
  return GraphSchedule(cfg.topology.graphs, n, cfg.topology.mode, cfg.topology.window);
}

inline Eigen::MatrixXd initial_profile(const ExperimentConfig& cfg, const FeasibleSet& feas) {
  if (cfg.init == "midpoint") return 0.5 * (feas.lower + feas.upper);
  if (cfg.init == "lower") return feas.lower;
  if (cfg.init == "upper") return feas.upper;
  throw std::invalid_argument("unknown init policy: " + cfg.init);
}

// Trial-averaged metrics for one recorded iteration.
struct AggregateRow {
  long k = 0;
  double mean_sq_err = 0.0;
  double std_sq_err = 0.0;
  double mean_bregman = 0.0;
  double mean_consensus = 0.0;
  double max_consensus = 0.0;
  long samples_per_iter = 0;
};

struct AggregateResult {
  std::vector<AggregateRow> rows;
  double max_tracking_drift = 0.0;
  long total_samples_per_trial = 0;
  double initial_bregman = 0.0;  // Bregman distance of the shared initial point
};

namespace detail {

constexpr std::uint64_t kGraphDrawTag = 0x6472;

inline AggregateResult aggregate_trials(const std::vector<RunResult>& trials) {
  if (trials.empty()) throw std::invalid_argument("aggregate_trials: no trials");
  const std::size_t n_rows = trials.front().rows.size();
  for (const auto& t : trials)
    if (t.rows.size() != n_rows)
      throw std::runtime_error("aggregate_trials: trials recorded different row sets");

  const double n = static_cast<double>(trials.size());
  AggregateResult agg;
  agg.rows.resize(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    AggregateRow row;
    row.k = trials.front().rows[r].k;
    row.samples_per_iter = trials.front().rows[r].samples;
    double sum = 0.0, sum_breg = 0.0, sum_cons = 0.0;
    for (const auto& t : trials) {
      const TrajectoryRow& tr = t.rows[r];
      if (tr.k != row.k) throw std::runtime_error("aggregate_trials: misaligned rows");
      sum += tr.sq_err;
      sum_breg += tr.bregman_dist;
      sum_cons += tr.consensus_mean;
      row.max_consensus = std::max(row.max_consensus, tr.consensus_max);
    }
    row.mean_sq_err = sum / n;
    row.mean_bregman = sum_breg / n;
    row.mean_consensus = sum_cons / n;
    double var = 0.0;
    for (const auto& t : trials) {
      const double d = t.rows[r].sq_err - row.mean_sq_err;
      var += d * d;
    }
    row.std_sq_err = std::sqrt(var / n);
    agg.rows[r] = row;
  }
  for (const auto& t : trials) {
    agg.max_tracking_drift = std::max(agg.max_tracking_drift, t.max_tracking_drift);
    if (t.total_samples != trials.front().total_samples)
      throw std::runtime_error("aggregate_trials: trials used different sample counts");
  }
  agg.total_samples_per_trial = trials.front().total_samples;
  return agg;
}

}  // namespace detail

// Runs the configured number of independent trials against a pre-resolved
// game, topology, and oracle solution. All trials share the initial point;
// gradient noise is keyed per trial, and graph draws are shared across trials
// unless configured otherwise. Trials execute concurrently with isolated
// state and are reduced in trial order, so the output does not depend on
// scheduling.
inline AggregateResult run_experiment_resolved(const ExperimentConfig& cfg,
                                               const CournotGame& game,
                                               const GraphSchedule& graphs,
                                               const Eigen::MatrixXd& x_star) {
  if (cfg.trials < 1) throw std::invalid_argument("run_experiment: trials must be at least 1");
  if (cfg.iters < 1) throw std::invalid_argument("run_experiment: iters must be at least 1");
  if (cfg.regularizer != "euclidean")
    throw std::invalid_argument("run_experiment: unsupported regularizer " + cfg.regularizer);

  const Regularizer reg = Regularizer::euclidean();
  const GameConstants gc = game.constants();
  const Schedule sched = schedule_from(gc);
  const FeasibleSet feas = feasible_set(game);
  const Eigen::MatrixXd init = initial_profile(cfg, feas);
  const Algo algo = algo_from_string(cfg.algo);

  RunOptions opts;
  opts.stride.dense_until = cfg.stride_dense_until;
  opts.x_star = &x_star;
  opts.step_override = cfg.step_override;

  const RngStream noise_root(cfg.seed);
  const RngStream draw_root = RngStream(cfg.topology.seed).fork(detail::kGraphDrawTag);

  std::vector<RunResult> trials(static_cast<std::size_t>(cfg.trials));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.trials));

  auto run_trial = [&](int t) {
    const RngStream trial_stream = noise_root.fork(static_cast<std::uint64_t>(t));
    const RngStream graph_stream =
        cfg.shared_graph_draws ? draw_root : draw_root.fork(static_cast<std::uint64_t>(t));
    trials[static_cast<std::size_t>(t)] =
        run(algo, game, reg, sched, graphs, init, cfg.iters, trial_stream, graph_stream, opts);
  };

  int n_threads = cfg.threads > 0
                      ? cfg.threads
                      : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  n_threads = std::min(n_threads, cfg.trials);
  if (n_threads <= 1) {
    for (int t = 0; t < cfg.trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1)) {
        try {
          run_trial(t);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  AggregateResult agg = detail::aggregate_trials(trials);
  double d1 = 0.0;
  for (int i = 0; i < game.n_players(); ++i) d1 += bregman(reg, init.col(i), x_star.col(i));
  agg.initial_bregman = d1;
  return agg;
}

inline AggregateResult run_experiment(ExperimentConfig cfg) {
  const CournotGame game = resolve_game(cfg);
  const GraphSchedule graphs = resolve_topology(cfg, game.n_players());
  const VISolution sol = cfg.oracle_cache.empty()
                             ? solve_ne(game)
                             : solve_ne_cached(game, 1e-12, cfg.oracle_cache);
  if (!sol.converged)
    throw std::runtime_error("run_experiment: oracle did not converge, residual " +
                             std::to_string(sol.residual));
  return run_experiment_resolved(cfg, game, graphs, sol.x_star);
}

// Ordinary least squares on (log k, log mean_sq_err) over recorded rows with
// k_min <= k <= k_max. Rows with nonpositive error cannot enter a log fit and
// are skipped; fewer than five usable points is an error.
inline double fit_rate_slope(const AggregateResult& result, double k_min, double k_max) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : result.rows) {
    const double k = static_cast<double>(row.k);
    if (k < k_min || k > k_max) continue;
    if (row.mean_sq_err <= 0.0) continue;
    pts.emplace_back(std::log(k), std::log(row.mean_sq_err));
  }
  if (pts.size() < 5)
    throw std::runtime_error(
        "fit_rate_slope: fewer than 5 usable points in window (rows with nonpositive "
        "mean error cannot enter a log-log fit)");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  return (sxy - sx * sy / n) / (sxx - sx * sx / n);
}

inline constexpr const char* kResultsHeader =
    "k,mean_sq_err,std_sq_err,mean_bregman,mean_consensus,max_consensus,samples_per_iter";

// CSV persistence. Floats carry 17 significant digits, so writing and reading
// back is lossless.
inline void write_results(const AggregateResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_results: cannot open " + path.string());
  out << kResultsHeader << "\n";
  char buf[512];
  for (const auto& row : result.rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%ld\n", row.k,
                  row.mean_sq_err, row.std_sq_err, row.mean_bregman, row.mean_consensus,
                  row.max_consensus, row.samples_per_iter);
    out << buf;
  }
  if (!out) throw std::runtime_error("write_results: write failed for " + path.string());
}

inline AggregateResult read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_results: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_results: empty file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader)
    throw std::runtime_error("read_results: unexpected header in " + path.string());
  AggregateResult result;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    AggregateRow row;
    const int got = std::sscanf(line.c_str(), "%ld,%lf,%lf,%lf,%lf,%lf,%ld", &row.k,
                                &row.mean_sq_err, &row.std_sq_err, &row.mean_bregman,
                                &row.mean_consensus, &row.max_consensus, &row.samples_per_iter);
    if (got != 7) throw std::runtime_error("read_results: malformed row in " + path.string());
    result.rows.push_back(row);
  }
  return result;
}

// Emits a self-contained gnuplot script drawing the labelled mean-error
// curves on log-log axes. Rendering stays external; regeneration with the
// same inputs is byte-identical.
inline void emit_plot_script(const std::vector<std::pair<std::string, std::string>>& results,
                             const std::filesystem::path& out) {
  if (results.empty()) throw std::invalid_argument("emit_plot_script: no result files");
  std::ofstream script(out, std::ios::binary);
  if (!script) throw std::runtime_error("emit_plot_script: cannot open " + out.string());
  script << "#!/usr/bin/env gnuplot\n";
  script << "# mean squared distance to the equilibrium, one curve per algorithm\n";
  script << "set datafile separator \",\"\n";
  script << "set logscale xy\n";
  script << "set xlabel \"iteration k\"\n";
  script << "set ylabel \"mean squared error\"\n";
  script << "set key top right\n";
  script << "set term pngcairo size 900,640\n";
  script << "set output \"" << out.stem().string() << ".png\"\n";
  script << "plot \\\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    script << "  \"" << results[i].second << "\" skip 1 using 1:2 with lines lw 2 title \""
           << results[i].first << "\"";
    script << (i + 1 < results.size() ? ", \\\n" : "\n");
  }
  if (!script) throw std::runtime_error("emit_plot_script: write failed for " + out.string());
}

struct CompareOutputs {
  std::map<std::string, AggregateResult> results;
  std::vector<std::pair<std::string, std::filesystem::path>> csvs;
  std::filesystem::path script;
  std::filesystem::path config;
};

// Runs all three algorithms on one instance with identical seeds, writes one
// CSV per algorithm plus the comparison plot script, and saves the resolved
// config (including the generated graphs) alongside.
inline CompareOutputs compare_experiment(ExperimentConfig cfg,
                                         const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const CournotGame game = resolve_game(cfg);
  const GraphSchedule graphs = resolve_topology(cfg, game.n_players());
  const VISolution sol = cfg.oracle_cache.empty()
                             ? solve_ne(game)
                             : solve_ne_cached(game, 1e-12, cfg.oracle_cache);
  if (!sol.converged)
    throw std::runtime_error("compare_experiment: oracle did not converge, residual " +
                             std::to_string(sol.residual));

  CompareOutputs outputs;
  std::vector<std::pair<std::string, std::string>> labels;
  for (const char* name : {"oe", "pga", "extrag"}) {
    ExperimentConfig algo_cfg = cfg;
    algo_cfg.algo = name;
    AggregateResult result = run_experiment_resolved(algo_cfg, game, graphs, sol.x_star);
    const fs::path csv = out_dir / (std::string(name) + ".csv");
    write_results(result, csv);
    outputs.results.emplace(name, std::move(result));
    outputs.csvs.emplace_back(name, csv);
    labels.emplace_back(name, std::string(name) + ".csv");
  }
  outputs.script = out_dir / "compare.gp";
  emit_plot_script(labels, outputs.script);
  outputs.config = out_dir / "config.json";
  save_config(cfg, outputs.config);
  return outputs;
}

struct CheckReport {
  struct Item {
    std::string name;
    bool pass = false;
    std::string detail;
  };
  std::vector<Item> items;
  bool ok = true;

  void add(std::string name, bool pass, std::string detail = {}) {
    ok = ok && pass;
    items.push_back({std::move(name), pass, std::move(detail)});
  }
};

// Assumption suite: doubly stochastic weights, union connectivity, the
// geometric mixing envelope, operator monotonicity/smoothness against the
// derived constants, and the sampling oracle's first two moments.
inline CheckReport validate_assumptions(const CournotGame& game, const GraphSchedule& graphs,
                                        std::uint64_t check_seed, long envelope_iters = 200,
                                        int pairs = 1000, long noise_samples = 100000) {
  CheckReport report;
  char buf[160];
  const double eta = graphs.min_positive_weight();

  bool base_ok = true;
  for (std::size_t g = 0; g < graphs.graph_count(); ++g)
    base_ok = base_ok && validate(graphs.matrix(g), eta).ok;
  report.add("base matrices doubly stochastic", base_ok);

  const RngStream draw_stream = RngStream(check_seed).fork(detail::kGraphDrawTag);
  bool drawn_ok = true;
  for (long k = 1; k <= envelope_iters; ++k)
    drawn_ok = drawn_ok && validate(draw_matrix(graphs, k, draw_stream), eta).ok;
  report.add("drawn matrices doubly stochastic", drawn_ok);

  report.add("union graph connected", union_connected(graphs.base_graphs(), graphs.n_nodes()));

  const MixingConstants mc = mixing_constants(graphs);
  const int n = graphs.n_nodes();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  bool envelope_ok = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (long k = 1; k <= envelope_iters; ++k) {
    phi = draw_matrix(graphs, k, draw_stream) * phi;
    const double dev = (phi.array() - 1.0 / n).abs().maxCoeff();
    const double envelope = mc.theta_mix * std::pow(mc.beta_mix, static_cast<double>(k - 1));
    envelope_ok = envelope_ok && dev <= envelope;
    worst_margin = std::min(worst_margin, envelope - dev);
  }
  std::snprintf(buf, sizeof(buf), "worst margin %.3e", worst_margin);
  report.add("geometric mixing envelope", envelope_ok, buf);

  const GameConstants gc = game.constants();
  const FeasibleSet feas = feasible_set(game);
  RngStream pair_stream = RngStream(check_seed).fork(0x70);
  auto random_profile = [&]() {
    Eigen::MatrixXd p(game.n_markets(), game.n_players());
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      for (Eigen::Index l = 0; l < p.rows(); ++l)
        p(l, j) = pair_stream.uniform(feas.lower(l, j), feas.upper(l, j));
    return p;
  };
  bool mono_ok = true, lip_ok = true;
  for (int rep = 0; rep < pairs; ++rep) {
    const Eigen::MatrixXd x = random_profile();
    const Eigen::MatrixXd y = random_profile();
    const Eigen::MatrixXd dphi = pseudo_gradient(game, x) - pseudo_gradient(game, y);
    const Eigen::MatrixXd dx = x - y;
    const double inner = (dphi.array() * dx.array()).sum();
    mono_ok = mono_ok && inner >= gc.mu * dx.squaredNorm() - 1e-10;
    lip_ok = lip_ok && dphi.norm() <= gc.lip * dx.norm() + 1e-10;
  }
  report.add("strong monotonicity", mono_ok);
  report.add("lipschitz continuity", lip_ok);

  const Eigen::VectorXd x0 = feas.boxes[0].midpoint();
  const Eigen::VectorXd z0 = aggregate(0.5 * (feas.lower + feas.upper));
  const Eigen::VectorXd exact = game.partial_gradient(0, x0, z0);
  RngStream noise_stream = RngStream(check_seed).fork(0x4e);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(game.n_markets());
  double m2 = 0.0, m4 = 0.0;
  for (long s = 0; s < noise_samples; ++s) {
    const Eigen::VectorXd diff = game.sample_gradient(0, x0, z0, noise_stream) - exact;
    mean += diff;
    const double sq = diff.squaredNorm();
    m2 += sq;
    m4 += sq * sq;
  }
  mean /= static_cast<double>(noise_samples);
  m2 /= static_cast<double>(noise_samples);
  m4 /= static_cast<double>(noise_samples);
  const double nu0 = gc.nu_i[0];
  const double mean_tol = 4.0 * nu0 / std::sqrt(static_cast<double>(noise_samples));
  std::snprintf(buf, sizeof(buf), "||mean|| %.3e vs 4 sigma %.3e", mean.norm(), mean_tol);
  report.add("noise unbiasedness", !game.noise().enabled || mean.norm() <= mean_tol, buf);
  const double se = std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(noise_samples));
  std::snprintf(buf, sizeof(buf), "second moment %.6e vs bound %.6e (+4 se %.1e)", m2, nu0 * nu0,
                4.0 * se);
  report.add("noise second moment", m2 <= nu0 * nu0 + 4.0 * se, buf);

  return report;
}

}  // namespace aggne
