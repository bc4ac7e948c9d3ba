#pragma once

// Particle approximation of the posterior over unknown source parameters,
// with the standard-deviation cessation test.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ste/env.hpp"
#include "ste/random.hpp"

namespace ste {

/// Source-term component that a particle may vary.
enum class Dim : std::uint8_t { X, Y, Q, U, Phi, D, Tau };

std::string_view to_string(Dim dim);
Dim dim_from_string(std::string_view name);

double component(const SourceTerm& theta, Dim dim);
void set_component(SourceTerm& theta, Dim dim, double value);

/// Uniform prior range on one estimated dimension.
struct DimRange {
  Dim dim = Dim::X;
  double lo = 0.0;
  double hi = 1.0;

  friend bool operator==(const DimRange&, const DimRange&) = default;
};

struct BeliefConfig {
  std::size_t n_particles = 1000;
  double resample_fraction = 0.5;
  double cessation_threshold = 0.4;
  /// The estimated dimensions, in order, with their uniform prior ranges.
  /// Dimensions not listed are copied from the scenario.
  std::vector<DimRange> prior_box{{Dim::X, 10.0, 25.0}, {Dim::Y, 10.0, 25.0}};
  bool mcmc_move = true;
  double mcmc_scale = 0.5;
};

void validate(const BeliefConfig& cfg);

struct Particle {
  SourceTerm theta_hat;
  double weight = 0.0;
};

/// Weighted particle set plus the full observation history.
///
/// Invariant: weights are non-negative and sum to one. A per-particle plume
/// kernel and history log-likelihood are cached alongside; both are kept in
/// step by every operation that moves particles.
class Belief {
 public:
  Belief() = default;

  /// Builds a belief from explicit hypotheses. Weights are renormalized;
  /// throws ConfigError if any weight is negative or all are zero.
  static Belief from_particles(std::vector<Particle> particles, std::vector<DimRange> prior_box);

  std::span<const Particle> particles() const { return particles_; }
  std::size_t size() const { return particles_.size(); }
  const std::vector<Observation>& history() const { return history_; }
  std::size_t degeneracy_events() const { return degeneracy_events_; }
  const std::vector<DimRange>& prior_box() const { return prior_box_; }
  std::span<const PlumeKernel> kernels() const { return kernels_; }
  std::span<const double> history_log_likelihood() const { return history_loglik_; }

 private:
  friend Belief init_prior(const BeliefConfig&, const SourceTerm&, Rng&);
  friend Belief update(Belief, const Observation&, const BeliefConfig&, const EnvConfig&, Rng&);
  friend Belief resample(Belief, const BeliefConfig&, const EnvConfig&, Rng&);

  void rebuild_kernels();

  std::vector<Particle> particles_;
  std::vector<PlumeKernel> kernels_;
  std::vector<double> history_loglik_;
  std::vector<Observation> history_;
  std::vector<DimRange> prior_box_;
  std::size_t degeneracy_events_ = 0;
};

/// N particles uniform on the prior box, known dims from `known`, weights 1/N.
Belief init_prior(const BeliefConfig& cfg, const SourceTerm& known, Rng& rng);

/// Gaussian density of obs.concentration under mean m(obs.position | theta)
/// and std alpha*m + beta. Distance to the source is floored at the cutoff.
double likelihood(const Observation& obs, const SourceTerm& theta_hat, const EnvConfig& cfg);
double log_likelihood(const Observation& obs, const PlumeKernel& kernel, const EnvConfig& cfg);

/// Log of the Gaussian density N(z; mean, sigma^2).
double log_normal_density(double z, double mean, double sigma);

/// Bayes reweighting by one observation, appended to history; resamples when
/// the effective sample size drops below resample_fraction * N.
Belief update(Belief belief, const Observation& obs, const BeliefConfig& cfg, const EnvConfig& env, Rng& rng);

/// 1 / sum(w^2)
double effective_sample_size(const Belief& belief);

/// Systematic resampling to equal weights, then (if enabled) one
/// Metropolis-Hastings random-walk move per particle against the full history.
Belief resample(Belief belief, const BeliefConfig& cfg, const EnvConfig& env, Rng& rng);

/// Ancestor indices chosen by systematic resampling for offset u0 in [0, 1/N).
std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u0);

/// Weighted mean on the estimated dims; other dims passed through.
SourceTerm point_estimate(const Belief& belief);

/// Weighted population standard deviation, one entry per estimated dim.
std::vector<double> posterior_std(const Belief& belief);

/// True iff every estimated dim has posterior std below the threshold.
bool cessation_check(const Belief& belief, const BeliefConfig& cfg);
bool cessation_check(std::span<const double> stds, double threshold);

/// Entropy (nats) of the weighted histogram of source positions on a grid of
/// square cells covering the prior box.
double belief_entropy(const Belief& belief, double cell_size);

}  // namespace ste
