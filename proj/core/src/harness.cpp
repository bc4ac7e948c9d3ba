#include "ste/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <json.hpp>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "ste/errors.hpp"
#include "ste/serialization.hpp"

namespace ste {

namespace {

constexpr std::uint64_t kScenarioStream = 0x5ce7a210ULL;
constexpr double kZ95 = 1.959963984540054;

void validate_range(const UniformRange& r, const char* name) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
    throw ConfigError(std::string("scenario range '") + name + "' is empty");
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// 95% half-width of the mean; zero for fewer than two samples.
double mean_half_width(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return kZ95 * sd / std::sqrt(static_cast<double>(v.size()));
}

class PlannerPolicy final : public Policy {
 public:
  PlannerPolicy(PlannerKind kind, LookaheadConfig lookahead, EnvConfig env)
      : kind_(kind), lookahead_(lookahead), env_(std::move(env)) {}

  Action act(Position pos, const Observation&, const Belief& belief, Rng& rng) const override {
    return select_action(kind_, belief, pos, lookahead_, env_, rng);
  }

 private:
  PlannerKind kind_;
  LookaheadConfig lookahead_;
  EnvConfig env_;
};

class GreedyPolicy final : public Policy {
 public:
  GreedyPolicy(QNetwork net, EnvConfig env) : net_(std::move(net)), env_(std::move(env)) {}

  Action act(Position pos, const Observation& latest, const Belief& belief, Rng& rng) const override {
    const Features f = featurize(pos, latest, belief, env_);
    const std::vector<double> q = q_values(net_, f);
    return actions(env_.action_set)[epsilon_greedy(q, 0.0, rng)];
  }

 private:
  QNetwork net_;
  EnvConfig env_;
};

TraceRow make_row(std::size_t step, Position pos, const Observation& obs, const Belief& belief,
                  const SourceTerm& truth) {
  TraceRow row;
  row.step = step;
  row.position = pos;
  row.concentration = obs.concentration;
  row.estimate = point_estimate(belief).position();
  row.std = posterior_std(belief);
  const auto& box = belief.prior_box();
  for (std::size_t k = 0; k < box.size(); ++k) {
    if (box[k].dim == Dim::X) row.std_x = row.std[k];
    if (box[k].dim == Dim::Y) row.std_y = row.std[k];
  }
  row.ess = effective_sample_size(belief);
  row.dist_to_goal = distance(pos, truth.position());
  row.dist_to_estimate = distance(pos, row.estimate);
  return row;
}

}  // namespace

void validate(const ScenarioDistributions& dist, const EnvConfig& env) {
  validate_range(dist.x, "x");
  validate_range(dist.y, "y");
  validate_range(dist.q, "q");
  validate_range(dist.u, "u");
  validate_range(dist.phi_deg, "phi_deg");
  validate_range(dist.d, "d");
  if (!(dist.q.lo > 0.0) || !(dist.d.lo > 0.0) || !(dist.u.lo >= 0.0) || !(dist.tau > 0.0)) {
    throw ConfigError("scenario ranges must keep q, d, tau positive and u non-negative");
  }
  if (!(dist.alpha >= 0.0) || !(dist.beta > 0.0)) throw ConfigError("scenario noise must have alpha >= 0, beta > 0");
  const Box source_box{dist.x.lo, dist.x.hi, dist.y.lo, dist.y.hi};
  if (!env.domain.contains(source_box)) throw ConfigError("scenario source range must lie inside the domain");
  if (!env.domain.contains(dist.start)) throw ConfigError("scenario start region must lie inside the domain");
}

Scenario sample_scenario(const ScenarioDistributions& dist, Rng& rng) {
  Scenario s;
  s.source.x = uniform(rng, dist.x.lo, dist.x.hi);
  s.source.y = uniform(rng, dist.y.lo, dist.y.hi);
  s.source.q = uniform(rng, dist.q.lo, dist.q.hi);
  s.source.u = uniform(rng, dist.u.lo, dist.u.hi);
  s.source.phi = uniform(rng, dist.phi_deg.lo, dist.phi_deg.hi) * std::numbers::pi / 180.0;
  s.source.d = uniform(rng, dist.d.lo, dist.d.hi);
  s.source.tau = dist.tau;
  s.start.x = uniform(rng, dist.start.x_min, dist.start.x_max);
  s.start.y = uniform(rng, dist.start.y_min, dist.start.y_max);
  s.alpha = dist.alpha;
  s.beta = dist.beta;
  return s;
}

PolicySpec PolicySpec::parse(std::string_view text) {
  PolicySpec spec;
  constexpr std::string_view prefix = "dqn:";
  if (text.starts_with(prefix)) {
    spec.planner.reset();
    spec.checkpoint = std::string(text.substr(prefix.size()));
    if (spec.checkpoint.empty()) throw ConfigError("dqn policy needs a checkpoint path");
    return spec;
  }
  spec.planner = planner_from_string(text);
  return spec;
}

std::string PolicySpec::label() const { return planner ? std::string(ste::to_string(*planner)) : "dqn"; }

std::string PolicySpec::to_string() const {
  return planner ? std::string(ste::to_string(*planner)) : "dqn:" + checkpoint;
}

void validate(const RunConfig& cfg) {
  validate(cfg.env);
  validate(cfg.belief);
  validate(cfg.lookahead);
  validate(cfg.scenarios, cfg.env);
  if (cfg.n_episodes < 1) throw ConfigError("n_episodes must be >= 1");
  if (!(cfg.success_radius > 0.0)) throw ConfigError("success_radius must be > 0");
  if (!cfg.policy.planner && cfg.policy.checkpoint.empty()) throw ConfigError("policy needs a planner or checkpoint");
}

std::string cell_label(const RunConfig& cfg) {
  return cfg.policy.label() + "_N" + std::to_string(cfg.belief.n_particles) + "_z" +
         format_number(cfg.belief.cessation_threshold);
}

std::unique_ptr<Policy> make_planner_policy(PlannerKind kind, const LookaheadConfig& lookahead, const EnvConfig& env) {
  return std::make_unique<PlannerPolicy>(kind, lookahead, env);
}

std::unique_ptr<Policy> make_greedy_policy(QNetwork net, const EnvConfig& env) {
  if (net.input_size() != kFeatureCount || net.output_size() != actions(env.action_set).size()) {
    throw ConfigError("checkpoint shape does not match the feature length and action set");
  }
  return std::make_unique<GreedyPolicy>(std::move(net), env);
}

std::unique_ptr<Policy> make_policy(const RunConfig& cfg) {
  if (cfg.policy.planner) return make_planner_policy(*cfg.policy.planner, cfg.lookahead, cfg.env);
  return make_greedy_policy(load_checkpoint(cfg.policy.checkpoint), cfg.env);
}

EpisodeRecord run_episode(const Policy& policy, const Scenario& scenario, const RunConfig& cfg, Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  const EnvConfig env = with_scenario_noise(cfg.env, scenario);
  const SourceTerm& truth = scenario.source;

  EpisodeRecord rec;
  rec.scenario = scenario;

  Belief belief = init_prior(cfg.belief, truth, rng);
  Position pos = scenario.start;
  Observation obs{pos, sample_measurement(pos, truth, env, rng)};
  belief = update(std::move(belief), obs, cfg.belief, env, rng);
  rec.trace.push_back(make_row(0, pos, obs, belief, truth));

  while (rec.steps_used < static_cast<std::size_t>(env.max_steps)) {
    const Action action = policy.act(pos, obs, belief, rng);
    const StepResult s = step(pos, action, env, truth, rng);
    rec.traveled_distance += distance(pos, s.position);
    pos = s.position;
    obs = s.observation;
    belief = update(std::move(belief), obs, cfg.belief, env, rng);
    ++rec.steps_used;
    rec.trace.push_back(make_row(rec.steps_used, pos, obs, belief, truth));
    if (cessation_check(belief, cfg.belief)) {
      rec.ceased = true;
      break;
    }
  }

  rec.final_estimate_error = distance(point_estimate(belief).position(), truth.position());
  rec.success = rec.ceased && rec.final_estimate_error <= cfg.success_radius;
  rec.degeneracy_events = belief.degeneracy_events();
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

MetricsSummary aggregate_metrics(std::span<const EpisodeRecord> records) {
  MetricsSummary m;
  m.episodes = records.size();
  if (records.empty()) return m;
  std::vector<double> dist, time, err;
  double steps = 0.0;
  double final_err = 0.0;
  for (const EpisodeRecord& r : records) {
    steps += static_cast<double>(r.steps_used);
    final_err += r.final_estimate_error;
    if (r.ceased) ++m.ceased;
    if (!r.success) continue;
    ++m.successes;
    dist.push_back(r.traveled_distance);
    time.push_back(r.wall_time);
    err.push_back(r.final_estimate_error);
  }
  const auto n = static_cast<double>(records.size());
  m.sr = static_cast<double>(m.successes) / n;
  m.sr_ci = kZ95 * std::sqrt(m.sr * (1.0 - m.sr) / n);
  m.mean_steps = steps / n;
  m.mean_final_error = final_err / n;
  if (!dist.empty()) {
    m.mtd = mean_of(dist);
    m.mtd_ci = mean_half_width(dist);
    m.st = mean_of(time);
    m.st_ci = mean_half_width(time);
    m.mean_success_error = mean_of(err);
  }
  return m;
}

std::uint64_t scenario_seed(std::uint64_t base_seed, std::size_t episode) {
  return derive_seed(base_seed, kScenarioStream, episode);
}

std::uint64_t episode_seed(const RunConfig& cfg, std::size_t episode) {
  // Keyed by the label, not the checkpoint path, so a policy's results do
  // not depend on where its file lives.
  return derive_seed(cfg.base_seed, hash_label(cell_label(cfg)), episode);
}

CellResult run_cell(const RunConfig& cfg) {
  CellResult cell;
  cell.config = cfg;
  cell.label = cell_label(cfg);
  try {
    validate(cfg);
    const std::unique_ptr<Policy> policy = make_policy(cfg);
    std::vector<EpisodeRecord> records(cfg.n_episodes);

    std::size_t workers = cfg.threads > 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, cfg.n_episodes);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
      for (std::size_t i = next++; i < cfg.n_episodes; i = next++) {
        try {
          Rng scenario_rng(scenario_seed(cfg.base_seed, i));
          const Scenario scenario = sample_scenario(cfg.scenarios, scenario_rng);
          const std::uint64_t seed = episode_seed(cfg, i);
          Rng rng(seed);
          EpisodeRecord rec = run_episode(*policy, scenario, cfg, rng);
          rec.episode = i;
          rec.seed = seed;
          records[i] = std::move(rec);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = cfg.n_episodes;
        }
      }
    };
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    cell.records = std::move(records);
    cell.summary = aggregate_metrics(cell.records);
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

std::vector<CellResult> run_sweep(std::span<const RunConfig> grid) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  std::vector<CellResult> out;
  out.reserve(grid.size());
  for (const RunConfig& cfg : grid) out.push_back(run_cell(cfg));
  return out;
}

std::vector<RunConfig> expand(const SweepSpec& spec) {
  std::vector<PolicySpec> policies = spec.policies;
  if (policies.empty()) policies.push_back(spec.base.policy);
  std::vector<std::size_t> particles = spec.particles;
  if (particles.empty()) particles.push_back(spec.base.belief.n_particles);
  std::vector<double> zetas = spec.zetas;
  if (zetas.empty()) zetas.push_back(spec.base.belief.cessation_threshold);

  std::vector<RunConfig> out;
  for (const PolicySpec& p : policies) {
    for (std::size_t n : particles) {
      for (double z : zetas) {
        RunConfig cfg = spec.base;
        cfg.policy = p;
        cfg.belief.n_particles = n;
        cfg.belief.cessation_threshold = z;
        out.push_back(std::move(cfg));
      }
    }
  }
  return out;
}

ScenarioSampler make_scenario_sampler(ScenarioDistributions dist) {
  return [dist = std::move(dist)](Rng& rng) { return sample_scenario(dist, rng); };
}

std::string metrics_csv_row(const CellResult& cell) {
  const MetricsSummary& m = cell.summary;
  std::ostringstream os;
  os << cell.config.policy.label() << ',' << cell.config.belief.n_particles << ','
     << format_number(cell.config.belief.cessation_threshold) << ',' << m.episodes << ',' << format_number(m.sr)
     << ',' << format_number(m.sr_ci) << ',' << format_optional(m.mtd) << ',' << format_optional(m.st) << ','
     << format_number(m.mean_steps);
  return os.str();
}

std::string episode_json_line(const EpisodeRecord& r) {
  const SourceTerm& s = r.scenario.source;
  nlohmann::ordered_json j;
  j["episode"] = r.episode;
  j["seed"] = r.seed;
  j["scenario"] = {{"x_s", s.x},         {"y_s", s.y},          {"q_s", s.q},
                   {"u_s", s.u},         {"phi_s", s.phi},      {"d_s", s.d},
                   {"tau_s", s.tau},     {"start_x", r.scenario.start.x}, {"start_y", r.scenario.start.y},
                   {"alpha", r.scenario.alpha}, {"beta", r.scenario.beta}};
  j["ceased"] = r.ceased;
  j["success"] = r.success;
  j["steps"] = r.steps_used;
  j["traveled_distance"] = r.traveled_distance;
  j["wall_time"] = r.wall_time;
  j["final_estimate_error"] = r.final_estimate_error;
  j["degeneracy_events"] = r.degeneracy_events;
  return j.dump();
}

std::string trajectory_csv(const EpisodeRecord& r) {
  std::ostringstream os;
  os << kTrajectoryHeader << '\n';
  for (const TraceRow& t : r.trace) {
    os << t.step << ',' << format_number(t.position.x) << ',' << format_number(t.position.y) << ','
       << format_number(t.concentration) << ',' << format_number(t.estimate.x) << ','
       << format_number(t.estimate.y) << ',' << format_number(t.std_x) << ',' << format_number(t.std_y) << ','
       << format_number(t.ess) << ',' << format_number(t.dist_to_goal) << ','
       << format_number(t.dist_to_estimate) << '\n';
  }
  return os.str();
}

void export_results(std::span<const CellResult> cells, const std::string& run_config_json,
                    const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());

  std::string metrics(kMetricsHeader);
  metrics += '\n';
  for (const CellResult& c : cells) metrics += metrics_csv_row(c) + '\n';
  write_text_file(out / "metrics.csv", metrics);
  write_text_file(out / "run_config.json", run_config_json);

  std::vector<std::string> used;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const CellResult& c = cells[i];
    // Repeated labels (e.g. two checkpoints) get the cell index appended.
    std::string name = c.label;
    if (std::find(used.begin(), used.end(), name) != used.end()) name += "_" + std::to_string(i);
    used.push_back(name);
    const fs::path dir = cells.size() == 1 ? out : out / "cells" / name;
    const fs::path traj = dir / "trajectories";
    fs::remove_all(traj, ec);
    fs::create_directories(traj, ec);
    if (ec) throw IoError("cannot create " + traj.string() + ": " + ec.message());
    std::string lines;
    for (const EpisodeRecord& r : c.records) {
      lines += episode_json_line(r) + '\n';
      write_text_file(traj / (std::to_string(r.episode) + ".csv"), trajectory_csv(r));
    }
    write_text_file(dir / "episodes.jsonl", lines);
    if (c.error) write_text_file(dir / "error.txt", *c.error + '\n');
  }
}

}  // namespace ste
