#include "ste/dqn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "ste/errors.hpp"

namespace ste {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VectorMap = Eigen::Map<const Eigen::VectorXd>;

RowMajorMap weights_of(const DenseLayer& l) {
  return RowMajorMap(l.weights.data(), static_cast<Eigen::Index>(l.outputs), static_cast<Eigen::Index>(l.inputs));
}

VectorMap biases_of(const DenseLayer& l) {
  return VectorMap(l.biases.data(), static_cast<Eigen::Index>(l.outputs));
}

// Column-per-sample forward pass. activations[0] is the input; entry l+1 is
// the output of layer l (post-ReLU for hidden layers).
std::vector<Matrix> forward(const QNetwork& net, Matrix input) {
  const auto& layers = net.layers();
  std::vector<Matrix> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(std::move(input));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = weights_of(layers[l]) * acts.back();
    z.colwise() += biases_of(layers[l]);
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

Matrix pack(std::span<const Transition> batch, bool next) {
  Matrix m(static_cast<Eigen::Index>(kFeatureCount), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const Features& f = next ? batch[j].next_features : batch[j].features;
    for (std::size_t i = 0; i < kFeatureCount; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[i];
  }
  return m;
}

double std_of(const Belief& belief, const std::vector<double>& stds, Dim dim) {
  const auto& box = belief.prior_box();
  for (std::size_t k = 0; k < box.size(); ++k) {
    if (box[k].dim == dim) return stds[k];
  }
  return 0.0;
}

}  // namespace

Features featurize(Position pos, const Observation& obs, const Belief& belief, const EnvConfig& env) {
  const double lx = env.domain.width();
  const double ly = env.domain.height();
  const SourceTerm est = point_estimate(belief);
  const std::vector<double> stds = posterior_std(belief);
  return Features{
      (pos.x - env.domain.x_min) / lx,
      (pos.y - env.domain.y_min) / ly,
      (est.x - env.domain.x_min) / lx,
      (est.y - env.domain.y_min) / ly,
      std_of(belief, stds, Dim::X) / lx,
      std_of(belief, stds, Dim::Y) / ly,
      std::log1p(std::max(0.0, obs.concentration)),
  };
}

QNetwork::QNetwork(std::vector<std::size_t> architecture) : architecture_(std::move(architecture)) {
  if (architecture_.size() < 2) throw ConfigError("network needs at least an input and an output layer");
  for (std::size_t w : architecture_) {
    if (w == 0) throw ConfigError("network layer width must be positive");
  }
  for (std::size_t l = 0; l + 1 < architecture_.size(); ++l) {
    DenseLayer layer;
    layer.inputs = architecture_[l];
    layer.outputs = architecture_[l + 1];
    layer.weights.assign(layer.inputs * layer.outputs, 0.0);
    layer.biases.assign(layer.outputs, 0.0);
    layers_.push_back(std::move(layer));
  }
}

QNetwork QNetwork::glorot(std::vector<std::size_t> architecture, Rng& rng) {
  QNetwork net(std::move(architecture));
  for (DenseLayer& l : net.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.inputs + l.outputs));
    for (double& w : l.weights) w = uniform(rng, -limit, limit);
  }
  return net;
}

std::size_t QNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

std::vector<double> QNetwork::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const DenseLayer& l : layers_) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.biases.begin(), l.biases.end());
  }
  return out;
}

void QNetwork::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw ConfigError("parameter vector length does not match network");
  auto it = params.begin();
  for (DenseLayer& l : layers_) {
    std::copy_n(it, l.weights.size(), l.weights.begin());
    it += static_cast<std::ptrdiff_t>(l.weights.size());
    std::copy_n(it, l.biases.size(), l.biases.begin());
    it += static_cast<std::ptrdiff_t>(l.biases.size());
  }
}

std::vector<double> q_values(const QNetwork& net, std::span<const double> features) {
  if (features.size() != net.input_size()) throw ConfigError("feature length does not match network input");
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(features.data(), static_cast<Eigen::Index>(features.size()));
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd z = weights_of(layers[l]) * x + biases_of(layers[l]);
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    x = std::move(z);
  }
  return std::vector<double>(x.data(), x.data() + x.size());
}

std::size_t epsilon_greedy(std::span<const double> qvals, double epsilon, Rng& rng) {
  if (qvals.empty()) throw ConfigError("epsilon_greedy needs at least one action value");
  // Always consume the exploration coin so the stream advances uniformly.
  const double coin = uniform(rng, 0.0, 1.0);
  if (coin < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, qvals.size() - 1);
    return pick(rng);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < qvals.size(); ++i) {
    if (qvals[i] > qvals[best]) best = i;
  }
  return best;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  data_.reserve(capacity);
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
    return;
  }
  data_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const { return data_[(head_ + i) % data_.size()]; }

std::vector<Transition> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (data_.size() < count) throw ConfigError("replay buffer holds fewer transitions than requested");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<Transition> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(data_[pick(rng)]);
  return out;
}

void validate(const LearnerConfig& cfg) {
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(cfg.lr > 0.0)) throw ConfigError("lr must be > 0");
  if (cfg.minibatch == 0) throw ConfigError("minibatch must be positive");
  if (cfg.target_update_interval == 0) throw ConfigError("target_update_interval must be positive");
  if (cfg.replay_capacity < cfg.minibatch) throw ConfigError("replay_capacity must be >= minibatch");
  if (!(cfg.epsilon_start >= 0.0 && cfg.epsilon_start <= 1.0 && cfg.epsilon_end >= 0.0 &&
        cfg.epsilon_end <= cfg.epsilon_start)) {
    throw ConfigError("epsilon schedule must satisfy 0 <= end <= start <= 1");
  }
  if (!(cfg.epsilon_decay_fraction >= 0.0 && cfg.epsilon_decay_fraction <= 1.0)) {
    throw ConfigError("epsilon_decay_fraction must lie in [0, 1]");
  }
  if (!(cfg.terminal_reward > 0.0)) throw ConfigError("terminal_reward must be > 0");
  if (cfg.episodes == 0) throw ConfigError("episodes must be positive");
  for (std::size_t w : cfg.hidden) {
    if (w == 0) throw ConfigError("hidden layer width must be positive");
  }
}

double epsilon_at(const LearnerConfig& cfg, std::size_t episode) {
  const auto decay_episodes =
      static_cast<std::size_t>(std::floor(cfg.epsilon_decay_fraction * static_cast<double>(cfg.episodes)));
  if (episode >= decay_episodes) return cfg.epsilon_end;
  const double frac = static_cast<double>(episode) / static_cast<double>(decay_episodes);
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

TdResult td_loss_and_gradient(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                              double gamma) {
  if (net.architecture() != target.architecture()) throw ConfigError("target architecture differs from network");
  if (batch.empty()) throw ConfigError("empty training batch");
  if (net.input_size() != kFeatureCount) throw ConfigError("network input must match the feature length");
  const auto b = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  const Matrix next_q = forward(target, pack(batch, true)).back();
  std::vector<Matrix> acts = forward(net, pack(batch, false));
  const Matrix& q = acts.back();

  Matrix grad_out = Matrix::Zero(q.rows(), b);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const Transition& t = batch[static_cast<std::size_t>(j)];
    const auto a = static_cast<Eigen::Index>(t.action);
    if (a >= q.rows()) throw ConfigError("transition action outside the network's action range");
    const double y = t.done ? t.reward : t.reward + gamma * next_q.col(j).maxCoeff();
    const double delta = q(a, j) - y;
    loss += delta * delta;
    grad_out(a, j) = 2.0 * delta * inv_b;
  }
  loss *= inv_b;

  const auto& layers = net.layers();
  std::vector<std::vector<double>> per_layer_w(layers.size());
  std::vector<std::vector<double>> per_layer_b(layers.size());
  Matrix g = std::move(grad_out);
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix gw = g * acts[l].transpose();
    const Eigen::VectorXd gb = g.rowwise().sum();
    auto& w_out = per_layer_w[l];
    w_out.resize(layers[l].weights.size());
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw.cols(); ++c) w_out[static_cast<std::size_t>(r * gw.cols() + c)] = gw(r, c);
    }
    per_layer_b[l].assign(gb.data(), gb.data() + gb.size());
    if (l > 0) {
      Matrix back = weights_of(layers[l]).transpose() * g;
      // ReLU derivative from the post-activation values of the layer below.
      g = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
  }

  TdResult out;
  out.loss = loss;
  out.gradient.reserve(net.parameter_count());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out.gradient.insert(out.gradient.end(), per_layer_w[l].begin(), per_layer_w[l].end());
    out.gradient.insert(out.gradient.end(), per_layer_b[l].begin(), per_layer_b[l].end());
  }
  return out;
}

double td_update(QNetwork& net, const QNetwork& target, std::span<const Transition> batch, const LearnerConfig& cfg) {
  TdResult r = td_loss_and_gradient(net, target, batch, cfg.gamma);
  const bool finite_grad =
      std::all_of(r.gradient.begin(), r.gradient.end(), [](double g) { return std::isfinite(g); });
  if (!std::isfinite(r.loss) || !finite_grad) {
    throw TrainingDivergence("Bellman loss diverged (loss=" + std::to_string(r.loss) +
                             ", batch=" + std::to_string(batch.size()) + ")");
  }
  auto it = r.gradient.begin();
  for (DenseLayer& l : net.layers()) {
    for (double& w : l.weights) w -= cfg.lr * *it++;
    for (double& bias : l.biases) bias -= cfg.lr * *it++;
  }
  return r.loss;
}

void sync_target(const QNetwork& net, QNetwork& target) {
  if (net.architecture() != target.architecture()) throw ConfigError("cannot sync networks of different shape");
  target = net;
}

TrainingResult train(const EnvConfig& env, const BeliefConfig& belief_cfg, const LearnerConfig& learner,
                     const ScenarioSampler& sampler, Rng& rng, const EpisodeCallback& on_episode,
                     const TransitionCallback& on_transition) {
  validate(env);
  validate(belief_cfg);
  validate(learner);

  const auto acts = actions(env.action_set);
  std::vector<std::size_t> arch{kFeatureCount};
  arch.insert(arch.end(), learner.hidden.begin(), learner.hidden.end());
  arch.push_back(acts.size());

  TrainingResult result;
  result.network = QNetwork::glorot(arch, rng);
  QNetwork target = result.network;
  ReplayBuffer replay(learner.replay_capacity);
  std::size_t global_step = 0;

  for (std::size_t episode = 0; episode < learner.episodes; ++episode) {
    const double epsilon = epsilon_at(learner, episode);
    const Scenario scenario = sampler(rng);
    const EnvConfig ep_env = with_scenario_noise(env, scenario);

    Belief belief = init_prior(belief_cfg, scenario.source, rng);
    Position pos = scenario.start;
    Observation obs{pos, sample_measurement(pos, scenario.source, ep_env, rng)};
    belief = update(std::move(belief), obs, belief_cfg, ep_env, rng);
    Features state = featurize(pos, obs, belief, ep_env);

    TrainingEpisode log;
    log.episode = episode;
    log.epsilon = epsilon;
    double loss_sum = 0.0;
    for (int k = 1; k <= env.max_steps; ++k) {
      const std::vector<double> q = q_values(result.network, state);
      const Action action = acts[epsilon_greedy(q, epsilon, rng)];
      const StepResult s = step(pos, action, ep_env, scenario.source, rng);
      belief = update(std::move(belief), s.observation, belief_cfg, ep_env, rng);
      const bool ceased = cessation_check(belief, belief_cfg);
      const Features next_state = featurize(s.position, s.observation, belief, ep_env);
      const Transition transition{state, action, ceased ? learner.terminal_reward : 0.0, next_state, ceased};
      replay.push(transition);
      if (on_transition) on_transition(transition);

      if (replay.size() >= learner.minibatch) {
        const std::vector<Transition> batch = replay.sample(learner.minibatch, rng);
        loss_sum += td_update(result.network, target, batch, learner);
        ++log.updates;
      }
      if (++global_step % learner.target_update_interval == 0) sync_target(result.network, target);

      state = next_state;
      pos = s.position;
      obs = s.observation;
      log.steps = static_cast<std::size_t>(k);
      if (ceased) {
        log.ceased = true;
        break;
      }
    }
    log.mean_loss = log.updates > 0 ? loss_sum / static_cast<double>(log.updates) : 0.0;
    log.final_estimate_error = distance(point_estimate(belief).position(), scenario.source.position());
    if (on_episode) on_episode(log);
    result.log.push_back(log);
  }
  return result;
}

}  // namespace ste
