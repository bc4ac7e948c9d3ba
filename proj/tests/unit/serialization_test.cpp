#include <gtest/gtest.h>

#include <filesystem>
#include <json.hpp>

#include "ste/errors.hpp"
#include "ste/serialization.hpp"

using namespace ste;
namespace fs = std::filesystem;

namespace {

RunConfig unusual_config() {
  RunConfig c;
  c.policy = PolicySpec::parse("entrotaxis");
  c.n_episodes = 17;
  c.base_seed = 0xDEADBEEFCAFEULL;
  c.success_radius = 1.25;
  c.threads = 3;
  c.output_dir = "out/x";
  c.env.domain = {-5, 45, 0, 60};
  c.env.step_length = 0.5;
  c.env.action_set = ActionSet::EightConnected;
  c.env.max_steps = 77;
  c.belief.n_particles = 321;
  c.belief.cessation_threshold = 0.123456789;
  c.belief.resample_fraction = 0.25;
  c.lookahead.n_hypothetical = 12;
  c.learner.lr = 3e-4;
  c.learner.hidden = {64, 32};
  c.scenarios.q = {50, 60};
  c.scenarios.tau = 7.5;
  return c;
}

}  // namespace

TEST(ConfigJson, RoundTripIsAFixedPoint) {
  const std::string text = to_json(unusual_config());
  const RunConfig back = run_config_from_json(text);
  EXPECT_EQ(to_json(back), text);
  EXPECT_EQ(back.policy.to_string(), "entrotaxis");
  EXPECT_EQ(back.base_seed, 0xDEADBEEFCAFEULL);
  EXPECT_EQ(back.belief.cessation_threshold, 0.123456789);
  EXPECT_EQ(back.env.action_set, ActionSet::EightConnected);
  EXPECT_EQ(back.learner.hidden, (std::vector<std::size_t>{64, 32}));
  EXPECT_EQ(nlohmann::json::parse(text)["schema_version"], kConfigSchemaVersion);
}

TEST(ConfigJson, MissingKeysKeepDefaults) {
  const RunConfig defaults = unusual_config();
  const RunConfig c = run_config_from_json(R"({"n_episodes": 5})", defaults);
  EXPECT_EQ(c.n_episodes, 5u);
  EXPECT_EQ(to_json(run_config_from_json(to_json(c))), to_json(c));
  EXPECT_EQ(c.belief.n_particles, 321u);
}

TEST(ConfigJson, PriorFollowsScenarioRangeUnlessGiven) {
  const RunConfig c = run_config_from_json(R"({"scenarios": {"x": [2, 8], "y": [3, 9]}})");
  EXPECT_EQ(c.belief.prior_box.front().lo, 2.0);
  EXPECT_EQ(c.belief.prior_box.front().hi, 8.0);
  EXPECT_EQ(c.belief.prior_box[1].lo, 3.0);
  EXPECT_EQ(c.belief.prior_box[1].hi, 9.0);

  const RunConfig d = run_config_from_json(
      R"({"scenarios": {"x": [2, 8]}, "belief": {"prior_box": [{"dim": "x", "lo": 0, "hi": 50}, {"dim": "y", "lo": 0, "hi": 50}]}})");
  EXPECT_EQ(d.belief.prior_box.front().hi, 50.0);
}

TEST(ConfigJson, MalformedInputIsAConfigError) {
  for (const char* bad : {"", "{", "[1, 2]", R"({"schema_version": 2})", R"({"n_episodes": "many"})",
                          R"({"policy": "teleport"})", R"({"env": {"action_set": "hex"}})",
                          R"({"scenarios": {"x": [1]}})"}) {
    EXPECT_THROW(run_config_from_json(bad), ConfigError) << bad;
  }
  EXPECT_THROW(sweep_spec_from_json(R"({"policies": [3]})"), ConfigError);
  EXPECT_THROW(train_spec_from_json(R"({"learner": {"lr": [1]}})"), ConfigError);
}

TEST(SweepJson, AxesAndBase) {
  const SweepSpec s = sweep_spec_from_json(
      R"({"base": {"n_episodes": 4}, "policies": ["dcee", "random"], "particles": [100, 200], "zetas": [0.5]})");
  EXPECT_EQ(s.base.n_episodes, 4u);
  ASSERT_EQ(s.policies.size(), 2u);
  EXPECT_EQ(s.policies[1].to_string(), "random");
  EXPECT_EQ(s.particles, (std::vector<std::size_t>{100, 200}));
  EXPECT_EQ(expand(s).size(), 4u);
  const auto doc = nlohmann::json::parse(sweep_to_json(expand(s)));
  EXPECT_EQ(doc["kind"], "sweep");
  EXPECT_EQ(doc["cells"].size(), 4u);
}

TEST(TrainJson, RoundTrip) {
  TrainSpec s;
  s.seed = 99;
  s.learner.episodes = 12;
  s.learner.gamma = 0.9;
  const std::string text = to_json(s);
  const TrainSpec back = train_spec_from_json(text);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.learner.episodes, 12u);
  EXPECT_EQ(to_json(back), text);
}

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(3);
  const QNetwork net = QNetwork::glorot({7, 16, 16, 4}, rng);
  EXPECT_EQ(checkpoint_from_json(checkpoint_to_json(net)), net);

  const fs::path path = fs::temp_directory_path() / "ste_checkpoint_roundtrip.json";
  save_checkpoint(net, path);
  EXPECT_EQ(load_checkpoint(path), net);
}

TEST(Checkpoint, RejectsInconsistentDocuments) {
  Rng rng(4);
  auto j = nlohmann::json::parse(checkpoint_to_json(QNetwork::glorot({3, 2}, rng)));
  auto bad = j;
  bad["version"] = 9;
  EXPECT_THROW(checkpoint_from_json(bad.dump()), ConfigError);
  bad = j;
  bad["activation"] = "tanh";
  EXPECT_THROW(checkpoint_from_json(bad.dump()), ConfigError);
  bad = j;
  bad["layers"][0]["weights"].erase(0);
  EXPECT_THROW(checkpoint_from_json(bad.dump()), ConfigError);
  bad = j;
  bad["architecture"] = {3, 2, 2};
  EXPECT_THROW(checkpoint_from_json(bad.dump()), ConfigError);
  EXPECT_THROW(checkpoint_from_json("not json"), ConfigError);
}

TEST(Files, MissingFileIsAnIoErrorNamingThePath) {
  const fs::path missing = fs::temp_directory_path() / "ste_no_such_dir" / "f.json";
  try {
    read_text_file(missing);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(missing.string()), std::string::npos);
  }
  EXPECT_THROW(load_checkpoint(missing), IoError);
}

TEST(Snapshot, ListsParticlesAndSummaries) {
  BeliefConfig cfg;
  cfg.n_particles = 10;
  Rng rng(1);
  const Belief b = init_prior(cfg, SourceTerm{}, rng);
  const auto j = nlohmann::json::parse(belief_snapshot_json(b));
  ASSERT_EQ(j["particles"].size(), 10u);
  for (const auto& p : j["particles"]) {
    EXPECT_TRUE(p.contains("x"));
    EXPECT_TRUE(p.contains("y"));
    EXPECT_DOUBLE_EQ(p["weight"].get<double>(), 0.1);
  }
  EXPECT_DOUBLE_EQ(j["ess"].get<double>(), 10.0);
  EXPECT_EQ(j["history_length"], 0);
  EXPECT_EQ(j["degeneracy_events"], 0);
}
