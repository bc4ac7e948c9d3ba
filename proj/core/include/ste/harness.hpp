#pragma once

// Experiment orchestration: scenario sampling, episode execution for any
// policy, metric aggregation, sweeps and on-disk export.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ste/belief.hpp"
#include "ste/dqn.hpp"
#include "ste/env.hpp"
#include "ste/planners.hpp"
#include "ste/random.hpp"

namespace ste {

struct UniformRange {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const UniformRange&, const UniformRange&) = default;
};

/// Per-parameter distributions of the test and training scenarios.
struct ScenarioDistributions {
  UniformRange x{10.0, 25.0};
  UniformRange y{10.0, 25.0};
  UniformRange q{100.0, 500.0};
  UniformRange u{1.0, 4.0};
  UniformRange phi_deg{0.0, 360.0};
  UniformRange d{1.0, 8.0};
  double tau = 10.0;  // s; not randomized
  double alpha = 0.3;
  double beta = 0.2;
  Box start{0.0, 5.0, 0.0, 5.0};
};

void validate(const ScenarioDistributions& dist, const EnvConfig& env);

Scenario sample_scenario(const ScenarioDistributions& dist, Rng& rng);

/// Which policy drives an episode: a planner, or a DQN checkpoint file.
struct PolicySpec {
  std::optional<PlannerKind> planner = PlannerKind::Random;
  std::string checkpoint;

  /// "infotaxis" | "entrotaxis" | "dcee" | "random" | "dqn:<path>"
  static PolicySpec parse(std::string_view text);
  std::string label() const;
  std::string to_string() const;
};

struct RunConfig {
  PolicySpec policy;
  std::size_t n_episodes = 100;
  std::uint64_t base_seed = 0;
  EnvConfig env;
  BeliefConfig belief;  // n_particles and cessation_threshold are the sweep axes
  LookaheadConfig lookahead;
  LearnerConfig learner;
  ScenarioDistributions scenarios;
  double success_radius = 2.0;
  std::string output_dir;
  std::size_t threads = 0;  // 0: one per hardware thread
};

void validate(const RunConfig& cfg);

/// Label of a sweep cell, e.g. "dcee_N1000_z0.4".
std::string cell_label(const RunConfig& cfg);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(Position pos, const Observation& latest, const Belief& belief, Rng& rng) const = 0;
};

std::unique_ptr<Policy> make_planner_policy(PlannerKind kind, const LookaheadConfig& lookahead, const EnvConfig& env);
/// Greedy (epsilon = 0) action selection from a trained network.
std::unique_ptr<Policy> make_greedy_policy(QNetwork net, const EnvConfig& env);
/// Resolves a PolicySpec; loads the checkpoint if it names one.
std::unique_ptr<Policy> make_policy(const RunConfig& cfg);

struct TraceRow {
  std::size_t step = 0;
  Position position;
  double concentration = 0.0;
  Position estimate;
  double std_x = 0.0;
  double std_y = 0.0;
  std::vector<double> std;  // every estimated dim, prior-box order
  double ess = 0.0;
  double dist_to_goal = 0.0;
  double dist_to_estimate = 0.0;
};

struct EpisodeRecord {
  std::size_t episode = 0;
  std::uint64_t seed = 0;
  Scenario scenario;
  std::vector<TraceRow> trace;  // row 0 is the start observation
  bool ceased = false;
  std::size_t steps_used = 0;
  double traveled_distance = 0.0;
  double wall_time = 0.0;  // s
  double final_estimate_error = 0.0;
  bool success = false;
  std::size_t degeneracy_events = 0;
};

/// Observe, update, test cessation, act; until cessation or max_steps.
EpisodeRecord run_episode(const Policy& policy, const Scenario& scenario, const RunConfig& cfg, Rng& rng);

struct MetricsSummary {
  std::size_t episodes = 0;
  std::size_t successes = 0;
  std::size_t ceased = 0;
  double sr = 0.0;
  double sr_ci = 0.0;  // 95% normal-approximation half-width
  std::optional<double> mtd;
  std::optional<double> mtd_ci;
  std::optional<double> st;
  std::optional<double> st_ci;
  double mean_steps = 0.0;
  double mean_final_error = 0.0;
  std::optional<double> mean_success_error;
};

MetricsSummary aggregate_metrics(std::span<const EpisodeRecord> records);

/// Streams for episode i of a cell: the scenario draw is shared by every
/// cell with the same base seed; the dynamics stream depends on the cell
/// label (policy kind, N, zeta) only.
std::uint64_t scenario_seed(std::uint64_t base_seed, std::size_t episode);
std::uint64_t episode_seed(const RunConfig& cfg, std::size_t episode);

struct CellResult {
  RunConfig config;
  std::string label;
  std::vector<EpisodeRecord> records;  // sorted by episode index
  MetricsSummary summary;
  std::optional<std::string> error;
};

/// Runs every episode of one cell, in parallel over cfg.threads workers.
CellResult run_cell(const RunConfig& cfg);

/// Runs the cells in order; a failing cell is recorded and the sweep goes on.
std::vector<CellResult> run_sweep(std::span<const RunConfig> grid);

/// Sweep description: a base configuration crossed with policy, particle
/// count and threshold axes.
struct SweepSpec {
  RunConfig base;
  std::vector<PolicySpec> policies;
  std::vector<std::size_t> particles;
  std::vector<double> zetas;
};

std::vector<RunConfig> expand(const SweepSpec& spec);

/// Inputs of `ste train`.
struct TrainSpec {
  EnvConfig env;
  BeliefConfig belief;
  LearnerConfig learner;
  ScenarioDistributions scenarios;
  std::uint64_t seed = 0;
};

/// Scenario sampler over `dist` for the learner.
ScenarioSampler make_scenario_sampler(ScenarioDistributions dist);

inline constexpr std::string_view kMetricsHeader = "policy,n_particles,zeta,episodes,sr,sr_ci,mtd,st,mean_steps";
inline constexpr std::string_view kTrajectoryHeader =
    "step,x,y,concentration,est_x,est_y,std_x,std_y,ess,dist_to_goal,dist_to_estimate";

std::string metrics_csv_row(const CellResult& cell);
std::string episode_json_line(const EpisodeRecord& record);
std::string trajectory_csv(const EpisodeRecord& record);

/// Writes metrics.csv and run_config.json at `out`. A single cell writes
/// episodes.jsonl and trajectories/<episode>.csv beside them; several cells
/// write those under cells/<label>/ (a repeated label gets "_<cell index>"
/// appended). Existing files are overwritten.
void export_results(std::span<const CellResult> cells, const std::string& run_config_json,
                    const std::filesystem::path& out);

}  // namespace ste
