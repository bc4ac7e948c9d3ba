#include "ste/serialization.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ste/errors.hpp"

namespace ste {

namespace {

using json = nlohmann::ordered_json;

json parse(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

json encode(const Box& b) {
  return {{"x_min", b.x_min}, {"x_max", b.x_max}, {"y_min", b.y_min}, {"y_max", b.y_max}};
}

void decode(const json& j, Box& b) {
  read(j, "x_min", b.x_min);
  read(j, "x_max", b.x_max);
  read(j, "y_min", b.y_min);
  read(j, "y_max", b.y_max);
}

json encode(const UniformRange& r) { return json::array({r.lo, r.hi}); }

void decode(const json& j, UniformRange& r) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("uniform range must be a [lo, hi] pair");
  r.lo = j[0].get<double>();
  r.hi = j[1].get<double>();
}

json encode(const EnvConfig& c) {
  return {{"domain", encode(c.domain)},   {"step_length", c.step_length},
          {"action_set", std::string(to_string(c.action_set))},
          {"alpha", c.alpha},             {"beta", c.beta},
          {"noise_mean", c.noise_mean},   {"max_steps", c.max_steps},
          {"start_region", encode(c.start_region)}};
}

void decode(const json& j, EnvConfig& c) {
  if (j.contains("domain")) decode(j.at("domain"), c.domain);
  read(j, "step_length", c.step_length);
  if (j.contains("action_set")) {
    const auto s = j.at("action_set").get<std::string>();
    if (s == "four_connected") {
      c.action_set = ActionSet::FourConnected;
    } else if (s == "eight_connected") {
      c.action_set = ActionSet::EightConnected;
    } else {
      throw ConfigError("unknown action_set '" + s + "'");
    }
  }
  read(j, "alpha", c.alpha);
  read(j, "beta", c.beta);
  read(j, "noise_mean", c.noise_mean);
  read(j, "max_steps", c.max_steps);
  if (j.contains("start_region")) decode(j.at("start_region"), c.start_region);
}

json encode(const BeliefConfig& c) {
  json box = json::array();
  for (const DimRange& r : c.prior_box) box.push_back({{"dim", to_string(r.dim)}, {"lo", r.lo}, {"hi", r.hi}});
  return {{"n_particles", c.n_particles},
          {"resample_fraction", c.resample_fraction},
          {"cessation_threshold", c.cessation_threshold},
          {"prior_box", box},
          {"mcmc_move", c.mcmc_move},
          {"mcmc_scale", c.mcmc_scale}};
}

void decode(const json& j, BeliefConfig& c) {
  read(j, "n_particles", c.n_particles);
  read(j, "resample_fraction", c.resample_fraction);
  read(j, "cessation_threshold", c.cessation_threshold);
  read(j, "mcmc_move", c.mcmc_move);
  read(j, "mcmc_scale", c.mcmc_scale);
  if (j.contains("prior_box")) {
    c.prior_box.clear();
    for (const json& r : j.at("prior_box")) {
      c.prior_box.push_back({dim_from_string(r.at("dim").get<std::string>()), r.at("lo").get<double>(),
                             r.at("hi").get<double>()});
    }
  }
}

json encode(const LookaheadConfig& c) {
  return {{"n_hypothetical", c.n_hypothetical}, {"entropy_bins", c.entropy_bins}, {"entropy_cell", c.entropy_cell}};
}

void decode(const json& j, LookaheadConfig& c) {
  read(j, "n_hypothetical", c.n_hypothetical);
  read(j, "entropy_bins", c.entropy_bins);
  read(j, "entropy_cell", c.entropy_cell);
}

json encode(const LearnerConfig& c) {
  return {{"lr", c.lr},
          {"gamma", c.gamma},
          {"minibatch", c.minibatch},
          {"target_update_interval", c.target_update_interval},
          {"epsilon_start", c.epsilon_start},
          {"epsilon_end", c.epsilon_end},
          {"epsilon_decay_fraction", c.epsilon_decay_fraction},
          {"terminal_reward", c.terminal_reward},
          {"episodes", c.episodes},
          {"replay_capacity", c.replay_capacity},
          {"hidden", c.hidden}};
}

void decode(const json& j, LearnerConfig& c) {
  read(j, "lr", c.lr);
  read(j, "gamma", c.gamma);
  read(j, "minibatch", c.minibatch);
  read(j, "target_update_interval", c.target_update_interval);
  read(j, "epsilon_start", c.epsilon_start);
  read(j, "epsilon_end", c.epsilon_end);
  read(j, "epsilon_decay_fraction", c.epsilon_decay_fraction);
  read(j, "terminal_reward", c.terminal_reward);
  read(j, "episodes", c.episodes);
  read(j, "replay_capacity", c.replay_capacity);
  read(j, "hidden", c.hidden);
}

json encode(const ScenarioDistributions& d) {
  return {{"x", encode(d.x)},        {"y", encode(d.y)},         {"q", encode(d.q)},
          {"u", encode(d.u)},        {"phi_deg", encode(d.phi_deg)}, {"d", encode(d.d)},
          {"tau", d.tau},            {"alpha", d.alpha},         {"beta", d.beta},
          {"start", encode(d.start)}};
}

// Returns true when the document sets either source-location range.
bool decode(const json& j, ScenarioDistributions& d) {
  bool location = false;
  if (j.contains("x")) { decode(j.at("x"), d.x); location = true; }
  if (j.contains("y")) { decode(j.at("y"), d.y); location = true; }
  if (j.contains("q")) decode(j.at("q"), d.q);
  if (j.contains("u")) decode(j.at("u"), d.u);
  if (j.contains("phi_deg")) decode(j.at("phi_deg"), d.phi_deg);
  if (j.contains("d")) decode(j.at("d"), d.d);
  read(j, "tau", d.tau);
  read(j, "alpha", d.alpha);
  read(j, "beta", d.beta);
  if (j.contains("start")) decode(j.at("start"), d.start);
  return location;
}

void align_prior(BeliefConfig& belief, const ScenarioDistributions& d) {
  belief.prior_box = {{Dim::X, d.x.lo, d.x.hi}, {Dim::Y, d.y.lo, d.y.hi}};
}

json encode(const RunConfig& c) {
  return {{"schema_version", kConfigSchemaVersion},
          {"policy", c.policy.to_string()},
          {"n_episodes", c.n_episodes},
          {"base_seed", c.base_seed},
          {"success_radius", c.success_radius},
          {"threads", c.threads},
          {"output_dir", c.output_dir},
          {"env", encode(c.env)},
          {"belief", encode(c.belief)},
          {"lookahead", encode(c.lookahead)},
          {"learner", encode(c.learner)},
          {"scenarios", encode(c.scenarios)}};
}

void check_schema(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  if (j.contains("schema_version") && j.at("schema_version").get<int>() != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " + j.at("schema_version").dump());
  }
}

RunConfig decode_run(const json& j, const RunConfig& defaults) {
  check_schema(j);
  RunConfig c = defaults;
  try {
    if (j.contains("policy")) c.policy = PolicySpec::parse(j.at("policy").get<std::string>());
    read(j, "n_episodes", c.n_episodes);
    read(j, "base_seed", c.base_seed);
    read(j, "success_radius", c.success_radius);
    read(j, "threads", c.threads);
    read(j, "output_dir", c.output_dir);
    if (j.contains("env")) decode(j.at("env"), c.env);
    bool location = false;
    if (j.contains("scenarios")) location = decode(j.at("scenarios"), c.scenarios);
    const bool has_prior = j.contains("belief") && j.at("belief").contains("prior_box");
    if (j.contains("belief")) decode(j.at("belief"), c.belief);
    if (location && !has_prior) align_prior(c.belief, c.scenarios);
    if (j.contains("lookahead")) decode(j.at("lookahead"), c.lookahead);
    if (j.contains("learner")) decode(j.at("learner"), c.learner);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  return c;
}

}  // namespace

std::string to_json(const RunConfig& cfg) { return encode(cfg).dump(2) + "\n"; }

std::string to_json(const TrainSpec& s) {
  const json j{{"schema_version", kConfigSchemaVersion}, {"seed", s.seed},
               {"env", encode(s.env)},                   {"belief", encode(s.belief)},
               {"learner", encode(s.learner)},           {"scenarios", encode(s.scenarios)}};
  return j.dump(2) + "\n";
}

std::string sweep_to_json(std::span<const RunConfig> cells) {
  json arr = json::array();
  for (const RunConfig& c : cells) arr.push_back(encode(c));
  const json j{{"schema_version", kConfigSchemaVersion}, {"kind", "sweep"}, {"cells", arr}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(std::string_view text, const RunConfig& defaults) {
  return decode_run(parse(text, "run config"), defaults);
}

SweepSpec sweep_spec_from_json(std::string_view text) {
  const json j = parse(text, "sweep config");
  check_schema(j);
  SweepSpec spec;
  try {
    if (j.contains("base")) spec.base = decode_run(j.at("base"), RunConfig{});
    if (j.contains("policies")) {
      for (const json& p : j.at("policies")) spec.policies.push_back(PolicySpec::parse(p.get<std::string>()));
    }
    read(j, "particles", spec.particles);
    read(j, "zetas", spec.zetas);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed sweep config: ") + e.what());
  }
  return spec;
}

TrainSpec train_spec_from_json(std::string_view text) {
  const json j = parse(text, "train config");
  check_schema(j);
  TrainSpec s;
  try {
    read(j, "seed", s.seed);
    if (j.contains("env")) decode(j.at("env"), s.env);
    bool location = false;
    if (j.contains("scenarios")) location = decode(j.at("scenarios"), s.scenarios);
    const bool has_prior = j.contains("belief") && j.at("belief").contains("prior_box");
    if (j.contains("belief")) decode(j.at("belief"), s.belief);
    if (location && !has_prior) align_prior(s.belief, s.scenarios);
    if (j.contains("learner")) decode(j.at("learner"), s.learner);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed train config: ") + e.what());
  }
  return s;
}

std::string checkpoint_to_json(const QNetwork& net) {
  json layers = json::array();
  for (const DenseLayer& l : net.layers()) layers.push_back({{"weights", l.weights}, {"biases", l.biases}});
  const json j{{"version", kCheckpointVersion},
               {"architecture", net.architecture()},
               {"activation", "relu"},
               {"layers", layers}};
  return j.dump() + "\n";
}

QNetwork checkpoint_from_json(std::string_view text) {
  const json j = parse(text, "checkpoint");
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
    if (j.at("activation").get<std::string>() != "relu") throw ConfigError("checkpoint activation must be relu");
    QNetwork net(j.at("architecture").get<std::vector<std::size_t>>());
    const json& layers = j.at("layers");
    if (layers.size() != net.layers().size()) throw ConfigError("checkpoint layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      DenseLayer& dst = net.layers()[l];
      auto w = layers[l].at("weights").get<std::vector<double>>();
      auto b = layers[l].at("biases").get<std::vector<double>>();
      if (w.size() != dst.weights.size() || b.size() != dst.biases.size()) {
        throw ConfigError("checkpoint layer " + std::to_string(l) + " has the wrong size");
      }
      dst.weights = std::move(w);
      dst.biases = std::move(b);
    }
    return net;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const QNetwork& net, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_to_json(net));
}

QNetwork load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_text_file(path)); }

std::string belief_snapshot_json(const Belief& belief) {
  json particles = json::array();
  const auto& box = belief.prior_box();
  for (const Particle& p : belief.particles()) {
    json entry = json::object();
    for (const DimRange& r : box) entry[std::string(to_string(r.dim))] = component(p.theta_hat, r.dim);
    entry["weight"] = p.weight;
    particles.push_back(std::move(entry));
  }
  const SourceTerm est = point_estimate(belief);
  json estimate = json::object();
  json stds = json::object();
  const std::vector<double> sd = posterior_std(belief);
  for (std::size_t k = 0; k < box.size(); ++k) {
    estimate[std::string(to_string(box[k].dim))] = component(est, box[k].dim);
    stds[std::string(to_string(box[k].dim))] = sd[k];
  }
  const json j{{"particles", particles},
               {"estimate", estimate},
               {"std", stds},
               {"ess", effective_sample_size(belief)},
               {"history_length", belief.history().size()},
               {"degeneracy_events", belief.degeneracy_events()}};
  return j.dump();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ste
