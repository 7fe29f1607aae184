// Command line front end: run a single algorithm, solve the equilibrium
// oracle, compare all three algorithms on one instance, or check the model
// assumptions on a generated instance.

#include <aggne/aggne.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string config_path;
  std::string algo;
  long iters = -1;
  long trials = -1;
  std::int64_t seed = -1;
  std::string out;
  std::string out_dir;
  double tol = 1e-12;
};

aggne::ExperimentConfig assemble_config(const CommonFlags& flags) {
  aggne::ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = aggne::load_config(flags.config_path);
  if (!flags.algo.empty()) cfg.algo = flags.algo;
  if (flags.iters >= 0) cfg.iters = flags.iters;
  if (flags.trials >= 0) cfg.trials = static_cast<int>(flags.trials);
  if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
  if (!flags.out.empty()) cfg.out = flags.out;
  return cfg;
}

void print_profile(const Eigen::MatrixXd& x) {
  char buf[64];
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    std::printf("  player %ld: (", static_cast<long>(i));
    for (Eigen::Index l = 0; l < x.rows(); ++l) {
      std::snprintf(buf, sizeof(buf), "%.17g", x(l, i));
      std::printf("%s%s", buf, l + 1 < x.rows() ? ", " : "");
    }
    std::printf(")\n");
  }
}

int cmd_run(const CommonFlags& flags) {
  aggne::ExperimentConfig cfg = assemble_config(flags);
  aggne::algo_from_string(cfg.algo);  // reject unknown names before any work

  const aggne::CournotGame game = aggne::resolve_game(cfg);
  const aggne::GraphSchedule graphs = aggne::resolve_topology(cfg, game.n_players());
  const aggne::VISolution sol = cfg.oracle_cache.empty()
                                    ? aggne::solve_ne(game)
                                    : aggne::solve_ne_cached(game, 1e-12, cfg.oracle_cache);
  if (!sol.converged) {
    std::fprintf(stderr, "oracle did not converge (residual %.3e)\n", sol.residual);
    return 1;
  }
  const aggne::AggregateResult result = aggne::run_experiment_resolved(cfg, game, graphs, sol.x_star);
  aggne::write_results(result, cfg.out);
  aggne::save_config(cfg, cfg.out + ".config.json");

  std::printf("algo=%s trials=%d iters=%ld rows=%zu\n", cfg.algo.c_str(), cfg.trials, cfg.iters,
              result.rows.size());
  if (!result.rows.empty())
    std::printf("final mean squared error %.6e (k=%ld)\n", result.rows.back().mean_sq_err,
                result.rows.back().k);
  std::printf("max tracking drift %.3e\n", result.max_tracking_drift);
  std::printf("wrote %s\n", cfg.out.c_str());
  return 0;
}

int cmd_oracle(const CommonFlags& flags) {
  aggne::ExperimentConfig cfg = assemble_config(flags);
  const aggne::CournotGame game = aggne::resolve_game(cfg);
  const aggne::VISolution sol = aggne::solve_ne(game, flags.tol);
  if (!sol.converged) {
    std::fprintf(stderr, "oracle did not converge (residual %.3e after %ld iterations)\n",
                 sol.residual, sol.iterations_used);
    return 1;
  }
  std::printf("x* =\n");
  print_profile(sol.x_star);
  std::printf("natural residual %.3e after %ld iterations\n", sol.residual, sol.iterations_used);
  return 0;
}

int cmd_compare(const CommonFlags& flags) {
  aggne::ExperimentConfig cfg = assemble_config(flags);
  const fs::path out_dir = flags.out_dir.empty() ? fs::path("compare_out") : fs::path(flags.out_dir);
  const aggne::CompareOutputs outputs = aggne::compare_experiment(cfg, out_dir);
  for (const auto& [name, path] : outputs.csvs) {
    const auto& rows = outputs.results.at(name).rows;
    std::printf("%-7s -> %s (final mean squared error %.6e)\n", name.c_str(),
                path.string().c_str(), rows.empty() ? 0.0 : rows.back().mean_sq_err);
  }
  std::printf("plot script %s\n", outputs.script.string().c_str());
  std::printf("resolved config %s\n", outputs.config.string().c_str());
  return 0;
}

int cmd_validate(const CommonFlags& flags) {
  aggne::ExperimentConfig cfg = assemble_config(flags);
  const aggne::CournotGame game = aggne::resolve_game(cfg);
  aggne::ExperimentConfig resolved = cfg;
  const aggne::GraphSchedule graphs = aggne::resolve_topology(resolved, game.n_players());
  const aggne::CheckReport report = aggne::validate_assumptions(game, graphs, cfg.seed);
  for (const auto& item : report.items)
    std::printf("[%s] %s%s%s\n", item.pass ? "pass" : "FAIL", item.name.c_str(),
                item.detail.empty() ? "" : " -- ", item.detail.c_str());
  return report.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed equilibrium seeking in stochastic aggregative games"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto add_common = [&flags](CLI::App* cmd, bool with_algo) {
    cmd->add_option("--config", flags.config_path, "experiment config file (JSON)");
    if (with_algo)
      cmd->add_option("--algo", flags.algo, "algorithm")
          ->check(CLI::IsMember({"oe", "pga", "extrag"}));
    cmd->add_option("--iters", flags.iters, "iterations per trial");
    cmd->add_option("--trials", flags.trials, "number of trials");
    cmd->add_option("--seed", flags.seed, "master seed");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run one algorithm and write a CSV");
  add_common(run_cmd, true);
  run_cmd->add_option("--out", flags.out, "output CSV path");

  CLI::App* oracle_cmd = app.add_subcommand("oracle", "solve the equilibrium and print it");
  add_common(oracle_cmd, false);
  oracle_cmd->add_option("--tol", flags.tol, "natural-residual tolerance");

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "run all three algorithms and emit a comparison script");
  add_common(compare_cmd, false);
  compare_cmd->add_option("--out-dir", flags.out_dir, "output directory");

  CLI::App* validate_cmd = app.add_subcommand("validate", "run the assumption checks");
  add_common(validate_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(flags);
    if (oracle_cmd->parsed()) return cmd_oracle(flags);
    if (compare_cmd->parsed()) return cmd_compare(flags);
    if (validate_cmd->parsed()) return cmd_validate(flags);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
