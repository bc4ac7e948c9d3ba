#pragma once

// One-step-lookahead search planners over a particle belief.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ste/belief.hpp"
#include "ste/env.hpp"
#include "ste/random.hpp"

namespace ste {

enum class PlannerKind : std::uint8_t { Infotaxis, Entrotaxis, Dcee, Random };

std::string_view to_string(PlannerKind kind);
PlannerKind planner_from_string(std::string_view name);

struct LookaheadConfig {
  std::size_t n_hypothetical = 25;  // sampled future measurements per candidate
  std::size_t entropy_bins = 16;    // histogram bins for predictive entropy
  double entropy_cell = 1.0;        // m, cell size for belief-histogram entropy
};

void validate(const LookaheadConfig& cfg);

/// Draws M future readings at `candidate`: particle chosen by weight, then a
/// sensor sample under that particle's hypothesis.
std::vector<double> predictive_samples(const Belief& belief, Position candidate, const LookaheadConfig& cfg,
                                       const EnvConfig& env, Rng& rng);

/// Mean over M hypothetical readings of tr Cov(x_s, y_s) of the reweighted
/// belief. Readings come from the filter's own (unclamped Gaussian)
/// measurement model, so each reweighting is an exact Bayes update. The
/// input belief is not modified.
double expected_posterior_variance(const Belief& belief, Position candidate, const LookaheadConfig& cfg,
                                   const EnvConfig& env, Rng& rng);

/// Shannon entropy (nats) of a B-bin histogram spanning [min, max] of the samples.
double predictive_entropy(std::span<const double> samples, const LookaheadConfig& cfg);

/// |candidate - estimate|^2 + expected_posterior_variance
double dcee_cost(const Belief& belief, Position candidate, const LookaheadConfig& cfg, const EnvConfig& env,
                 Rng& rng);

/// Trace of the weighted covariance of the particle source positions.
double position_covariance_trace(const Belief& belief);

/// Picks the next move. Candidates are the clamped destinations of each
/// action; ties go to the lowest action index.
Action select_action(PlannerKind kind, const Belief& belief, Position pos, const LookaheadConfig& cfg,
                     const EnvConfig& env, Rng& rng);

}  // namespace ste
