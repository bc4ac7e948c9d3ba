#include "ste/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>

#include "ste/errors.hpp"

namespace ste {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// log(1e-300): below this the normalizing mass is treated as degenerate.
const double kLogMassFloor = std::log(1e-300);

bool inside(const std::vector<DimRange>& box, const SourceTerm& theta) {
  return std::all_of(box.begin(), box.end(), [&](const DimRange& r) {
    const double v = component(theta, r.dim);
    return v >= r.lo && v <= r.hi;
  });
}

double history_log_likelihood(const std::vector<Observation>& history, const PlumeKernel& kernel,
                              const EnvConfig& env) {
  double sum = 0.0;
  for (const Observation& obs : history) sum += log_likelihood(obs, kernel, env);
  return sum;
}

void set_uniform(std::vector<Particle>& particles) {
  const double w = 1.0 / static_cast<double>(particles.size());
  for (Particle& p : particles) p.weight = w;
}

}  // namespace

std::string_view to_string(Dim dim) {
  switch (dim) {
    case Dim::X: return "x";
    case Dim::Y: return "y";
    case Dim::Q: return "q";
    case Dim::U: return "u";
    case Dim::Phi: return "phi";
    case Dim::D: return "d";
    case Dim::Tau: return "tau";
  }
  return "?";
}

Dim dim_from_string(std::string_view name) {
  for (Dim d : {Dim::X, Dim::Y, Dim::Q, Dim::U, Dim::Phi, Dim::D, Dim::Tau}) {
    if (to_string(d) == name) return d;
  }
  throw ConfigError("unknown source-term dimension '" + std::string(name) + "'");
}

double component(const SourceTerm& t, Dim dim) {
  switch (dim) {
    case Dim::X: return t.x;
    case Dim::Y: return t.y;
    case Dim::Q: return t.q;
    case Dim::U: return t.u;
    case Dim::Phi: return t.phi;
    case Dim::D: return t.d;
    case Dim::Tau: return t.tau;
  }
  return 0.0;
}

void set_component(SourceTerm& t, Dim dim, double value) {
  switch (dim) {
    case Dim::X: t.x = value; break;
    case Dim::Y: t.y = value; break;
    case Dim::Q: t.q = value; break;
    case Dim::U: t.u = value; break;
    case Dim::Phi: t.phi = value; break;
    case Dim::D: t.d = value; break;
    case Dim::Tau: t.tau = value; break;
  }
}

void validate(const BeliefConfig& cfg) {
  if (cfg.n_particles < 2) throw ConfigError("n_particles must be >= 2");
  if (!(cfg.resample_fraction > 0.0 && cfg.resample_fraction <= 1.0)) {
    throw ConfigError("resample_fraction must lie in (0, 1]");
  }
  if (!(cfg.cessation_threshold > 0.0)) throw ConfigError("cessation_threshold must be > 0");
  if (!(cfg.mcmc_scale >= 0.0) || !std::isfinite(cfg.mcmc_scale)) {
    throw ConfigError("mcmc_scale must be >= 0");
  }
  if (cfg.prior_box.empty()) throw ConfigError("prior_box must name at least one dimension");
  for (std::size_t i = 0; i < cfg.prior_box.size(); ++i) {
    const DimRange& r = cfg.prior_box[i];
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo < r.hi)) {
      throw ConfigError("prior_box: zero-volume range on dimension '" + std::string(to_string(r.dim)) +
                        "'");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (cfg.prior_box[j].dim == r.dim) throw ConfigError("prior_box: duplicate dimension");
    }
  }
}

void Belief::rebuild_kernels() {
  kernels_.clear();
  kernels_.reserve(particles_.size());
  for (const Particle& p : particles_) kernels_.emplace_back(p.theta_hat);
}

Belief Belief::from_particles(std::vector<Particle> particles, std::vector<DimRange> prior_box) {
  if (particles.empty()) throw ConfigError("belief needs at least one particle");
  double total = 0.0;
  for (const Particle& p : particles) {
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) throw ConfigError("negative particle weight");
    total += p.weight;
  }
  if (!(total > 0.0)) throw ConfigError("particle weights sum to zero");
  for (Particle& p : particles) p.weight /= total;

  Belief b;
  b.particles_ = std::move(particles);
  b.prior_box_ = std::move(prior_box);
  b.history_loglik_.assign(b.particles_.size(), 0.0);
  b.rebuild_kernels();
  return b;
}

Belief init_prior(const BeliefConfig& cfg, const SourceTerm& known, Rng& rng) {
  validate(cfg);
  Belief b;
  b.prior_box_ = cfg.prior_box;
  b.particles_.resize(cfg.n_particles);
  for (Particle& p : b.particles_) {
    p.theta_hat = known;
    for (const DimRange& r : cfg.prior_box) set_component(p.theta_hat, r.dim, uniform(rng, r.lo, r.hi));
  }
  set_uniform(b.particles_);
  b.history_loglik_.assign(cfg.n_particles, 0.0);
  b.rebuild_kernels();
  return b;
}

double log_normal_density(double z, double mean, double sigma) {
  const double t = (z - mean) / sigma;
  return -0.5 * t * t - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double log_likelihood(const Observation& obs, const PlumeKernel& kernel, const EnvConfig& cfg) {
  const double m = kernel.guarded(obs.position);
  return log_normal_density(obs.concentration, m, noise_std(m, cfg));
}

double likelihood(const Observation& obs, const SourceTerm& theta_hat, const EnvConfig& cfg) {
  return std::exp(log_likelihood(obs, PlumeKernel(theta_hat), cfg));
}

Belief update(Belief b, const Observation& obs, const BeliefConfig& cfg, const EnvConfig& env, Rng& rng) {
  const std::size_t n = b.particles_.size();
  std::vector<double> log_w(n);
  double max_log = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double ll = log_likelihood(obs, b.kernels_[i], env);
    b.history_loglik_[i] += ll;
    const double w = b.particles_[i].weight;
    log_w[i] = w > 0.0 ? std::log(w) + ll : kNegInf;
    max_log = std::max(max_log, log_w[i]);
  }

  double scaled = 0.0;
  if (max_log > kNegInf) {
    for (double lw : log_w) scaled += std::exp(lw - max_log);
  }
  if (max_log == kNegInf || max_log + std::log(scaled) < kLogMassFloor) {
    set_uniform(b.particles_);
    ++b.degeneracy_events_;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      b.particles_[i].weight = std::exp(log_w[i] - max_log) / scaled;
    }
  }
  b.history_.push_back(obs);

  if (effective_sample_size(b) < cfg.resample_fraction * static_cast<double>(n)) {
    b = resample(std::move(b), cfg, env, rng);
  }
  return b;
}

double effective_sample_size(const Belief& belief) {
  double sum_sq = 0.0;
  for (const Particle& p : belief.particles()) sum_sq += p.weight * p.weight;
  return 1.0 / sum_sq;
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u0) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n);
  const double step = 1.0 / static_cast<double>(n);
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = u0 + static_cast<double>(i) * step;
    while (cumulative < target && j + 1 < n) {
      ++j;
      cumulative += weights[j];
    }
    out[i] = j;
  }
  return out;
}

Belief resample(Belief b, const BeliefConfig& cfg, const EnvConfig& env, Rng& rng) {
  const std::size_t n = b.particles_.size();
  // Proposal scale comes from the weighted cloud, before duplication.
  const std::vector<double> stds = posterior_std(b);

  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = b.particles_[i].weight;
  const double u0 = uniform(rng, 0.0, 1.0 / static_cast<double>(n));
  const std::vector<std::size_t> ancestors = systematic_indices(weights, u0);

  std::vector<Particle> particles(n);
  std::vector<PlumeKernel> kernels(n);
  std::vector<double> loglik(n);
  for (std::size_t i = 0; i < n; ++i) {
    particles[i] = b.particles_[ancestors[i]];
    kernels[i] = b.kernels_[ancestors[i]];
    loglik[i] = b.history_loglik_[ancestors[i]];
  }
  set_uniform(particles);
  b.particles_ = std::move(particles);
  b.kernels_ = std::move(kernels);
  b.history_loglik_ = std::move(loglik);

  const bool can_move =
      std::any_of(stds.begin(), stds.end(), [&](double s) { return cfg.mcmc_scale * s > 0.0; });
  if (!cfg.mcmc_move || b.history_.empty() || !can_move) return b;

  const std::vector<DimRange>& box = b.prior_box_;
  for (std::size_t i = 0; i < n; ++i) {
    SourceTerm proposal = b.particles_[i].theta_hat;
    for (std::size_t k = 0; k < box.size(); ++k) {
      const double v = component(proposal, box[k].dim);
      set_component(proposal, box[k].dim, v + cfg.mcmc_scale * stds[k] * standard_normal(rng));
    }
    const double log_u = std::log(uniform(rng, 0.0, 1.0));
    if (!inside(box, proposal)) continue;

    const PlumeKernel kernel(proposal);
    const double proposed = history_log_likelihood(b.history_, kernel, env);
    if (log_u < proposed - b.history_loglik_[i]) {
      b.particles_[i].theta_hat = proposal;
      b.kernels_[i] = kernel;
      b.history_loglik_[i] = proposed;
    }
  }
  return b;
}

SourceTerm point_estimate(const Belief& belief) {
  const auto particles = belief.particles();
  SourceTerm est = particles.front().theta_hat;
  for (const DimRange& r : belief.prior_box()) {
    double mean = 0.0;
    for (const Particle& p : particles) mean += p.weight * component(p.theta_hat, r.dim);
    set_component(est, r.dim, mean);
  }
  return est;
}

std::vector<double> posterior_std(const Belief& belief) {
  const auto particles = belief.particles();
  std::vector<double> out;
  out.reserve(belief.prior_box().size());
  for (const DimRange& r : belief.prior_box()) {
    double mean = 0.0;
    for (const Particle& p : particles) mean += p.weight * component(p.theta_hat, r.dim);
    double var = 0.0;
    for (const Particle& p : particles) {
      const double dev = component(p.theta_hat, r.dim) - mean;
      var += p.weight * dev * dev;
    }
    out.push_back(std::sqrt(var));
  }
  return out;
}

bool cessation_check(std::span<const double> stds, double threshold) {
  return std::all_of(stds.begin(), stds.end(), [&](double s) { return s < threshold; });
}

bool cessation_check(const Belief& belief, const BeliefConfig& cfg) {
  const std::vector<double> stds = posterior_std(belief);
  return cessation_check(stds, cfg.cessation_threshold);
}

double belief_entropy(const Belief& belief, double cell_size) {
  if (!(cell_size > 0.0)) throw ConfigError("cell_size must be > 0");
  const auto particles = belief.particles();

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const Particle& p : particles) {
    x_lo = std::min(x_lo, p.theta_hat.x);
    x_hi = std::max(x_hi, p.theta_hat.x);
    y_lo = std::min(y_lo, p.theta_hat.y);
    y_hi = std::max(y_hi, p.theta_hat.y);
  }
  for (const DimRange& r : belief.prior_box()) {
    if (r.dim == Dim::X) { x_lo = r.lo; x_hi = r.hi; }
    if (r.dim == Dim::Y) { y_lo = r.lo; y_hi = r.hi; }
  }
  const auto cells = [&](double lo, double hi) {
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((hi - lo) / cell_size)));
  };
  const std::int64_t nx = cells(x_lo, x_hi);
  const std::int64_t ny = cells(y_lo, y_hi);
  const auto index = [&](double v, double lo, std::int64_t count) {
    const auto k = static_cast<std::int64_t>(std::floor((v - lo) / cell_size));
    return std::clamp<std::int64_t>(k, 0, count - 1);
  };

  std::unordered_map<std::int64_t, double> mass;
  for (const Particle& p : particles) {
    if (p.weight <= 0.0) continue;
    mass[index(p.theta_hat.y, y_lo, ny) * nx + index(p.theta_hat.x, x_lo, nx)] += p.weight;
  }
  // Sum in key order so the result does not depend on hash-table layout.
  std::vector<std::pair<std::int64_t, double>> cells_sorted(mass.begin(), mass.end());
  std::sort(cells_sorted.begin(), cells_sorted.end());
  double h = 0.0;
  for (const auto& [key, m] : cells_sorted) h -= m * std::log(m);
  return std::max(0.0, h);
}

}  // namespace ste
