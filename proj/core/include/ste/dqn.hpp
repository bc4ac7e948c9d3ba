#pragma once

// Deep Q-network learner driven by the belief's self-issued cessation reward.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ste/belief.hpp"
#include "ste/env.hpp"
#include "ste/random.hpp"

namespace ste {

inline constexpr std::size_t kFeatureCount = 7;

/// [x/Lx, y/Ly, est_x/Lx, est_y/Ly, std_x/Lx, std_y/Ly, log(1 + c)],
/// positions measured from the domain's lower-left corner.
using Features = std::array<double, kFeatureCount>;

Features featurize(Position pos, const Observation& obs, const Belief& belief, const EnvConfig& env);

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // row-major, outputs x inputs
  std::vector<double> biases;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Fully connected network, ReLU on hidden layers, linear output.
class QNetwork {
 public:
  QNetwork() = default;
  /// Zero-initialized network; architecture lists layer widths input first.
  explicit QNetwork(std::vector<std::size_t> architecture);
  /// Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases.
  static QNetwork glorot(std::vector<std::size_t> architecture, Rng& rng);

  const std::vector<std::size_t>& architecture() const { return architecture_; }
  std::size_t input_size() const { return architecture_.front(); }
  std::size_t output_size() const { return architecture_.back(); }
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Flattened parameters: per layer, weights then biases.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  friend bool operator==(const QNetwork&, const QNetwork&) = default;

 private:
  std::vector<std::size_t> architecture_;
  std::vector<DenseLayer> layers_;
};

std::vector<double> q_values(const QNetwork& net, std::span<const double> features);

/// Index of the chosen action: uniform with probability epsilon, otherwise
/// argmax with the lowest index winning ties.
std::size_t epsilon_greedy(std::span<const double> qvals, double epsilon, Rng& rng);

struct Transition {
  Features features{};
  Action action = Action::North;
  double reward = 0.0;
  Features next_features{};
  bool done = false;
};

/// Fixed-capacity FIFO of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1000);

  void push(const Transition& t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;
  /// `count` draws with replacement; requires size() >= count.
  std::vector<Transition> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest element once full
  std::vector<Transition> data_;
};

struct LearnerConfig {
  double lr = 1e-4;
  double gamma = 0.99;
  std::size_t minibatch = 64;
  std::size_t target_update_interval = 100;  // environment steps
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.8;  // of the training episodes
  double terminal_reward = 100.0;
  std::size_t episodes = 2000;
  std::size_t replay_capacity = 1000;
  std::vector<std::size_t> hidden{128, 128, 128};
};

void validate(const LearnerConfig& cfg);

/// Linear decay from epsilon_start to epsilon_end, reaching the floor at
/// episode floor(decay_fraction * episodes) and staying there.
double epsilon_at(const LearnerConfig& cfg, std::size_t episode);

struct TdResult {
  double loss = 0.0;
  std::vector<double> gradient;  // same layout as QNetwork::parameters()
};

/// Mean squared Bellman error of `net` on the batch, bootstrapping from
/// `target` (terminal transitions use the reward alone), and its gradient.
TdResult td_loss_and_gradient(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                              double gamma);

/// One SGD step on the batch; returns the pre-step loss. Throws
/// TrainingDivergence if the loss is not finite.
double td_update(QNetwork& net, const QNetwork& target, std::span<const Transition> batch, const LearnerConfig& cfg);

/// Copies net's parameters into target; throws ConfigError on mismatch.
void sync_target(const QNetwork& net, QNetwork& target);

struct TrainingEpisode {
  std::size_t episode = 0;
  std::size_t steps = 0;
  bool ceased = false;
  double final_estimate_error = 0.0;
  double epsilon = 0.0;
  double mean_loss = 0.0;  // over the updates made in this episode (0 if none)
  std::size_t updates = 0;
};

struct TrainingResult {
  QNetwork network;
  std::vector<TrainingEpisode> log;
};

using ScenarioSampler = std::function<Scenario(Rng&)>;
using EpisodeCallback = std::function<void(const TrainingEpisode&)>;
/// Sees every transition as it enters the replay buffer.
using TransitionCallback = std::function<void(const Transition&)>;

/// Runs `learner.episodes` episodes of belief-driven Q-learning. Each step
/// earns terminal_reward and ends the episode when the belief's cessation
/// test fires; running out of steps stores a non-terminal transition.
TrainingResult train(const EnvConfig& env, const BeliefConfig& belief_cfg, const LearnerConfig& learner,
                     const ScenarioSampler& sampler, Rng& rng, const EpisodeCallback& on_episode = {},
                     const TransitionCallback& on_transition = {});

}  // namespace ste
