#pragma once

// Plume dispersion environment: mean concentration model, noisy point
// sensor, and grid-free agent motion over a rectangular search domain.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "ste/random.hpp"

namespace ste {

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

double distance(Position a, Position b);

/// Release parameters of a point source. Angles in radians.
struct SourceTerm {
  double x = 0.0;    // m
  double y = 0.0;    // m
  double q = 1.0;    // release rate, g/s
  double u = 0.0;    // wind speed, m/s
  double phi = 0.0;  // wind direction, rad
  double d = 1.0;    // diffusivity, m^2/s
  double tau = 1.0;  // mean particle lifetime, s

  Position position() const { return {x, y}; }
  friend bool operator==(const SourceTerm&, const SourceTerm&) = default;
};

/// Throws ConfigError unless q > 0, u >= 0, d > 0, tau > 0 and all finite.
void validate(const SourceTerm& theta);

/// Closed axis-aligned rectangle.
struct Box {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool contains(Position p) const;
  bool contains(const Box& other) const;
  Position clamp(Position p) const;

  friend bool operator==(const Box&, const Box&) = default;
};

enum class Action : std::uint8_t {
  North,
  East,
  South,
  West,
  NorthEast,
  SouthEast,
  SouthWest,
  NorthWest,
};

enum class ActionSet : std::uint8_t { FourConnected, EightConnected };

/// Actions in index order; the first four are shared by both sets.
std::span<const Action> actions(ActionSet set);
std::string_view to_string(Action a);
std::string_view to_string(ActionSet s);

struct EnvConfig {
  Box domain{0.0, 30.0, 0.0, 30.0};
  double step_length = 1.0;
  ActionSet action_set = ActionSet::FourConnected;
  double alpha = 0.3;       // signal-proportional noise coefficient
  double beta = 0.2;        // additive noise floor
  double noise_mean = 0.0;  // mean of the sensor noise
  int max_steps = 300;
  Box start_region{0.0, 5.0, 0.0, 5.0};
};

void validate(const EnvConfig& cfg);

struct Observation {
  Position position;
  double concentration = 0.0;
};

/// One search problem: the hidden source, the agent's start and the sensor
/// noise coefficients in force for the episode.
struct Scenario {
  SourceTerm source;
  Position start;
  double alpha = 0.3;
  double beta = 0.2;
};

/// `base` with the scenario's noise coefficients applied.
EnvConfig with_scenario_noise(EnvConfig base, const Scenario& scenario);

/// Distances below this are treated as coincident with the source.
inline constexpr double kSourceCutoff = 1e-9;

/// Precomputed coefficients of the mean-concentration model for one source
/// hypothesis. Evaluation costs one sqrt and one exp.
class PlumeKernel {
 public:
  PlumeKernel() = default;
  explicit PlumeKernel(const SourceTerm& theta);

  /// Throws SingularityError within kSourceCutoff of the source.
  double at(Position p) const;
  /// Same model with the distance floored at kSourceCutoff.
  double guarded(Position p) const;

  double length_scale() const { return lambda_; }

 private:
  double eval(double dx, double dy, double r) const;

  double xs_ = 0.0;
  double ys_ = 0.0;
  double prefactor_ = 0.0;  // q / (4 pi d)
  double lambda_ = 1.0;
  double inv_lambda_ = 1.0;
  double drift_x_ = 0.0;  // u cos(phi) / (2 d)
  double drift_y_ = 0.0;  // u sin(phi) / (2 d)
};

/// lambda = sqrt(d tau / (1 + u^2 tau / (4 d)))
double plume_length_scale(const SourceTerm& theta);

/// m(p | theta). Throws SingularityError when p coincides with the source.
double mean_concentration(Position p, const SourceTerm& theta);

/// Sensor noise standard deviation at mean concentration m: alpha*m + beta.
double noise_std(double mean, const EnvConfig& cfg);

/// max(0, mean + v), v ~ N(noise_mean, noise_std(mean)^2). One normal draw.
double sample_from_mean(double mean, const EnvConfig& cfg, Rng& rng);

double sample_measurement(Position p, const SourceTerm& theta, const EnvConfig& cfg, Rng& rng);

/// Position after one move, clamped per axis to the domain.
Position apply_action(Position pos, Action action, const EnvConfig& cfg);

struct StepResult {
  Position position;
  Observation observation;
};

StepResult step(Position pos, Action action, const EnvConfig& cfg, const SourceTerm& theta, Rng& rng);

}  // namespace ste
