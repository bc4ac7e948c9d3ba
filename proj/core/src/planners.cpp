#include "ste/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ste/errors.hpp"

namespace ste {

namespace {

// Per-candidate predictive model: each particle's mean reading and noise at
// the candidate, plus the cumulative weights used for particle draws.
struct CandidateModel {
  std::vector<double> mean;
  std::vector<double> inv_sigma;
  std::vector<double> log_sigma;
  std::vector<double> cumulative;

  CandidateModel(const Belief& belief, Position candidate, const EnvConfig& env) {
    const auto particles = belief.particles();
    const auto kernels = belief.kernels();
    const std::size_t n = particles.size();
    mean.resize(n);
    inv_sigma.resize(n);
    log_sigma.resize(n);
    cumulative.resize(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mean[i] = kernels[i].guarded(candidate);
      const double sigma = noise_std(mean[i], env);
      inv_sigma[i] = 1.0 / sigma;
      log_sigma[i] = std::log(sigma);
      acc += particles[i].weight;
      cumulative[i] = acc;
    }
  }

  std::size_t draw_particle(Rng& rng) const {
    const double u = uniform(rng, 0.0, cumulative.back());
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
  }

  double draw_reading(const EnvConfig& env, Rng& rng) const {
    return sample_from_mean(mean[draw_particle(rng)], env, rng);
  }

  // A reading from the filter's own measurement model (unclamped Gaussian),
  // so that hypothetical updates are exact Bayes updates.
  double draw_model_reading(Rng& rng) const {
    const std::size_t i = draw_particle(rng);
    return mean[i] + standard_normal(rng) / inv_sigma[i];
  }
};

std::vector<double> draw_readings(const CandidateModel& model, std::size_t m, const EnvConfig& env, Rng& rng) {
  std::vector<double> out(m);
  for (double& z : out) z = model.draw_reading(env, rng);
  return out;
}

// Position-covariance trace after reweighting by a hypothetical reading z.
double reweighted_trace(const Belief& belief, const CandidateModel& model, double z, std::vector<double>& scratch) {
  const auto particles = belief.particles();
  const std::size_t n = particles.size();
  scratch.resize(n);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = particles[i].weight;
    if (w <= 0.0) {
      scratch[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double t = (z - model.mean[i]) * model.inv_sigma[i];
    scratch[i] = std::log(w) - 0.5 * t * t - model.log_sigma[i];
    max_log = std::max(max_log, scratch[i]);
  }
  // Shift coordinates by the first particle to limit cancellation.
  const double x0 = particles[0].theta_hat.x;
  const double y0 = particles[0].theta_hat.y;
  double total = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(scratch[i] - max_log);
    const double dx = particles[i].theta_hat.x - x0;
    const double dy = particles[i].theta_hat.y - y0;
    total += w;
    sx += w * dx;
    sy += w * dy;
    sxx += w * dx * dx;
    syy += w * dy * dy;
  }
  const double mx = sx / total;
  const double my = sy / total;
  return std::max(0.0, sxx / total - mx * mx) + std::max(0.0, syy / total - my * my);
}

double epv_from_model(const Belief& belief, const CandidateModel& model, const LookaheadConfig& cfg, Rng& rng) {
  std::vector<double> scratch;
  double sum = 0.0;
  for (std::size_t k = 0; k < cfg.n_hypothetical; ++k) {
    sum += reweighted_trace(belief, model, model.draw_model_reading(rng), scratch);
  }
  return sum / static_cast<double>(cfg.n_hypothetical);
}

double squared_distance(Position a, Position b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

std::string_view to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::Infotaxis: return "infotaxis";
    case PlannerKind::Entrotaxis: return "entrotaxis";
    case PlannerKind::Dcee: return "dcee";
    case PlannerKind::Random: return "random";
  }
  return "?";
}

PlannerKind planner_from_string(std::string_view name) {
  for (PlannerKind k : {PlannerKind::Infotaxis, PlannerKind::Entrotaxis, PlannerKind::Dcee, PlannerKind::Random}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown planner '" + std::string(name) + "'");
}

void validate(const LookaheadConfig& cfg) {
  if (cfg.n_hypothetical < 1) throw ConfigError("n_hypothetical must be >= 1");
  if (cfg.entropy_bins < 2) throw ConfigError("entropy_bins must be >= 2");
  if (!(cfg.entropy_cell > 0.0)) throw ConfigError("entropy_cell must be > 0");
}

std::vector<double> predictive_samples(const Belief& belief, Position candidate, const LookaheadConfig& cfg,
                                       const EnvConfig& env, Rng& rng) {
  const CandidateModel model(belief, candidate, env);
  return draw_readings(model, cfg.n_hypothetical, env, rng);
}

double expected_posterior_variance(const Belief& belief, Position candidate, const LookaheadConfig& cfg,
                                   const EnvConfig& env, Rng& rng) {
  const CandidateModel model(belief, candidate, env);
  return epv_from_model(belief, model, cfg, rng);
}

double predictive_entropy(std::span<const double> samples, const LookaheadConfig& cfg) {
  if (samples.empty()) return 0.0;
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  if (!(span > 0.0)) return 0.0;

  const std::size_t bins = cfg.entropy_bins;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : samples) {
    auto b = static_cast<std::size_t>((v - lo) / span * static_cast<double>(bins));
    ++counts[std::min(b, bins - 1)];
  }
  const double n = static_cast<double>(samples.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double position_covariance_trace(const Belief& belief) {
  const auto particles = belief.particles();
  double mx = 0.0, my = 0.0;
  for (const Particle& p : particles) {
    mx += p.weight * p.theta_hat.x;
    my += p.weight * p.theta_hat.y;
  }
  double var = 0.0;
  for (const Particle& p : particles) {
    const double dx = p.theta_hat.x - mx;
    const double dy = p.theta_hat.y - my;
    var += p.weight * (dx * dx + dy * dy);
  }
  return var;
}

double dcee_cost(const Belief& belief, Position candidate, const LookaheadConfig& cfg, const EnvConfig& env,
                 Rng& rng) {
  const Position estimate = point_estimate(belief).position();
  return squared_distance(candidate, estimate) + expected_posterior_variance(belief, candidate, cfg, env, rng);
}

Action select_action(PlannerKind kind, const Belief& belief, Position pos, const LookaheadConfig& cfg,
                     const EnvConfig& env, Rng& rng) {
  const auto acts = actions(env.action_set);
  if (kind == PlannerKind::Random) {
    std::uniform_int_distribution<std::size_t> pick(0, acts.size() - 1);
    return acts[pick(rng)];
  }

  // Every candidate is scored with the same random numbers, so score
  // differences reflect the candidates rather than sampling noise.
  const std::uint64_t shared_seed = rng();
  const Position estimate = point_estimate(belief).position();

  Action best = acts.front();
  double best_score = 0.0;
  for (std::size_t k = 0; k < acts.size(); ++k) {
    const Position candidate = apply_action(pos, acts[k], env);
    Rng local(shared_seed);
    const CandidateModel model(belief, candidate, env);
    double score = 0.0;
    switch (kind) {
      case PlannerKind::Infotaxis:
        score = epv_from_model(belief, model, cfg, local);
        break;
      case PlannerKind::Entrotaxis:
        // Maximized; negate so that every criterion is minimized below.
        score = -predictive_entropy(draw_readings(model, cfg.n_hypothetical, env, local), cfg);
        break;
      case PlannerKind::Dcee:
        score = squared_distance(candidate, estimate) + epv_from_model(belief, model, cfg, local);
        break;
      case PlannerKind::Random:
        break;
    }
    if (k == 0 || score < best_score) {
      best = acts[k];
      best_score = score;
    }
  }
  return best;
}

}  // namespace ste
