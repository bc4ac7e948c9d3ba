// ste: command line front end for running, sweeping and training.
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "ste/errors.hpp"
#include "ste/harness.hpp"
#include "ste/serialization.hpp"
#include "ste/version.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigFailure = 1;
constexpr int kRuntimeFailure = 2;

// Input files that cannot be read are configuration problems, not runtime ones.
struct InputError : ste::ConfigError {
  using ste::ConfigError::ConfigError;
};

std::string read_input(const std::string& path) {
  try {
    return ste::read_text_file(path);
  } catch (const ste::IoError& e) {
    throw InputError(e.what());
  }
}

void prepare_output(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ste::IoError("cannot create " + out.string() + ": " + ec.message());
}

void print_summary(const ste::CellResult& cell) {
  const ste::MetricsSummary& m = cell.summary;
  std::fprintf(stderr, "%s: %zu episodes, SR %.3f +/- %.3f", cell.label.c_str(), m.episodes, m.sr, m.sr_ci);
  if (m.mtd) std::fprintf(stderr, ", MTD %.2f m", *m.mtd);
  if (m.st) std::fprintf(stderr, ", ST %.3f s", *m.st);
  std::fprintf(stderr, ", mean steps %.1f\n", m.mean_steps);
}

struct RunArgs {
  std::string policy;
  std::optional<std::size_t> particles;
  std::optional<double> zeta;
  std::optional<std::size_t> episodes;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
  std::string config;
};

int cmd_run(const RunArgs& a) {
  ste::RunConfig cfg;
  if (!a.config.empty()) cfg = ste::run_config_from_json(read_input(a.config));
  if (!a.policy.empty()) cfg.policy = ste::PolicySpec::parse(a.policy);
  if (a.particles) cfg.belief.n_particles = *a.particles;
  if (a.zeta) cfg.belief.cessation_threshold = *a.zeta;
  if (a.episodes) cfg.n_episodes = *a.episodes;
  if (a.seed) cfg.base_seed = *a.seed;
  if (a.threads) cfg.threads = *a.threads;
  cfg.output_dir = a.out;
  ste::validate(cfg);
  try {
    ste::make_policy(cfg);
  } catch (const ste::IoError& e) {
    throw InputError(e.what());
  }

  prepare_output(a.out);
  const ste::CellResult cell = ste::run_cell(cfg);
  ste::export_results(std::span(&cell, 1), ste::to_json(cfg), a.out);
  if (cell.error) {
    std::fprintf(stderr, "ste: run failed: %s\n", cell.error->c_str());
    return kRuntimeFailure;
  }
  print_summary(cell);
  return kOk;
}

int cmd_sweep(const std::string& config, const std::string& out) {
  const ste::SweepSpec spec = ste::sweep_spec_from_json(read_input(config));
  std::vector<ste::RunConfig> grid = ste::expand(spec);
  for (ste::RunConfig& c : grid) {
    c.output_dir = out;
    ste::validate(c);
  }
  prepare_output(out);
  const std::vector<ste::CellResult> cells = ste::run_sweep(grid);
  ste::export_results(cells, ste::sweep_to_json(grid), out);
  std::size_t failed = 0;
  for (const ste::CellResult& c : cells) {
    if (c.error) {
      ++failed;
      std::fprintf(stderr, "ste: cell %s failed: %s\n", c.label.c_str(), c.error->c_str());
    } else {
      print_summary(c);
    }
  }
  return failed == 0 ? kOk : kRuntimeFailure;
}

int cmd_train(const std::string& config, const std::string& out) {
  const ste::TrainSpec spec = ste::train_spec_from_json(read_input(config));
  ste::validate(spec.env);
  ste::validate(spec.belief);
  ste::validate(spec.learner);
  ste::validate(spec.scenarios, spec.env);
  prepare_output(out);
  const fs::path dir(out);
  ste::write_text_file(dir / "run_config.json", ste::to_json(spec));

  ste::Rng rng(spec.seed);
  std::string log = "episode,steps,ceased,final_estimate_error,epsilon,mean_loss,updates\n";
  auto on_episode = [&](const ste::TrainingEpisode& e) {
    char line[256];
    std::snprintf(line, sizeof line, "%zu,%zu,%d,%.10g,%.10g,%.10g,%zu\n", e.episode, e.steps, e.ceased ? 1 : 0,
                  e.final_estimate_error, e.epsilon, e.mean_loss, e.updates);
    log += line;
    if ((e.episode + 1) % 50 == 0) std::fprintf(stderr, "episode %zu/%zu\n", e.episode + 1, spec.learner.episodes);
  };
  const ste::TrainingResult result = ste::train(spec.env, spec.belief, spec.learner,
                                                ste::make_scenario_sampler(spec.scenarios), rng, on_episode);
  ste::write_text_file(dir / "training_log.csv", log);
  ste::save_checkpoint(result.network, dir / "checkpoint.json");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gas source term estimation: simulate, sweep and train search policies"};
  app.require_subcommand(1);

  RunArgs run;
  CLI::App* run_cmd = app.add_subcommand("run", "Run one policy over a batch of seeded scenarios");
  run_cmd->add_option("--policy", run.policy, "infotaxis | entrotaxis | dcee | random | dqn:<checkpoint>");
  run_cmd->add_option("--particles", run.particles, "Particle count N");
  run_cmd->add_option("--zeta", run.zeta, "Cessation threshold");
  run_cmd->add_option("--episodes", run.episodes, "Number of test episodes");
  run_cmd->add_option("--seed", run.seed, "Base seed");
  run_cmd->add_option("--threads", run.threads, "Worker threads (0: all cores)");
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--config", run.config, "RunConfig JSON; flags override it");

  std::string sweep_config;
  std::string sweep_out;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run a policy x particles x threshold grid");
  sweep_cmd->add_option("--config", sweep_config, "Sweep JSON")->required();
  sweep_cmd->add_option("--out", sweep_out, "Output directory")->required();

  std::string train_config;
  std::string train_out;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a Q-network policy");
  train_cmd->add_option("--config", train_config, "Training JSON")->required();
  train_cmd->add_option("--out", train_out, "Output directory")->required();

  CLI::App* version_cmd = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigFailure;
  }

  try {
    if (*version_cmd) {
      std::cout << "ste " << ste::version() << '\n';
      return kOk;
    }
    if (*run_cmd) return cmd_run(run);
    if (*sweep_cmd) return cmd_sweep(sweep_config, sweep_out);
    if (*train_cmd) return cmd_train(train_config, train_out);
  } catch (const ste::ConfigError& e) {
    std::fprintf(stderr, "ste: configuration error: %s\n", e.what());
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ste: %s\n", e.what());
    return kRuntimeFailure;
  }
  return kOk;
}
