#include "ste/env.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "ste/errors.hpp"

namespace ste {

namespace {

constexpr std::array<Action, 8> kAllActions{
    Action::North,     Action::East,      Action::South,     Action::West,
    Action::NorthEast, Action::SouthEast, Action::SouthWest, Action::NorthWest,
};

bool finite(double v) { return std::isfinite(v); }

void validate_box(const Box& b, const char* what) {
  if (!finite(b.x_min) || !finite(b.x_max) || !finite(b.y_min) || !finite(b.y_max) ||
      !(b.x_min < b.x_max) || !(b.y_min < b.y_max)) {
    throw ConfigError(std::string(what) + ": box must satisfy min < max on both axes");
  }
}

}  // namespace

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

void validate(const SourceTerm& t) {
  if (!finite(t.x) || !finite(t.y) || !finite(t.q) || !finite(t.u) || !finite(t.phi) ||
      !finite(t.d) || !finite(t.tau)) {
    throw ConfigError("source term: non-finite parameter");
  }
  if (!(t.q > 0.0)) throw ConfigError("source term: q must be > 0");
  if (!(t.u >= 0.0)) throw ConfigError("source term: u must be >= 0");
  if (!(t.d > 0.0)) throw ConfigError("source term: d must be > 0");
  if (!(t.tau > 0.0)) throw ConfigError("source term: tau must be > 0");
}

bool Box::contains(Position p) const {
  return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
}

bool Box::contains(const Box& o) const {
  return o.x_min >= x_min && o.x_max <= x_max && o.y_min >= y_min && o.y_max <= y_max;
}

Position Box::clamp(Position p) const {
  return {std::clamp(p.x, x_min, x_max), std::clamp(p.y, y_min, y_max)};
}

std::span<const Action> actions(ActionSet set) {
  const std::size_t n = set == ActionSet::FourConnected ? 4 : 8;
  return std::span<const Action>(kAllActions.data(), n);
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::North: return "N";
    case Action::East: return "E";
    case Action::South: return "S";
    case Action::West: return "W";
    case Action::NorthEast: return "NE";
    case Action::SouthEast: return "SE";
    case Action::SouthWest: return "SW";
    case Action::NorthWest: return "NW";
  }
  return "?";
}

std::string_view to_string(ActionSet s) {
  return s == ActionSet::FourConnected ? "four_connected" : "eight_connected";
}

void validate(const EnvConfig& cfg) {
  validate_box(cfg.domain, "domain");
  validate_box(cfg.start_region, "start_region");
  if (!cfg.domain.contains(cfg.start_region)) {
    throw ConfigError("start_region must lie inside the domain");
  }
  if (!(cfg.step_length > 0.0) || !finite(cfg.step_length)) {
    throw ConfigError("step_length must be > 0");
  }
  if (!(cfg.alpha >= 0.0) || !finite(cfg.alpha)) throw ConfigError("alpha must be >= 0");
  if (!(cfg.beta > 0.0) || !finite(cfg.beta)) throw ConfigError("beta must be > 0");
  if (!finite(cfg.noise_mean)) throw ConfigError("noise_mean must be finite");
  if (cfg.max_steps <= 0) throw ConfigError("max_steps must be > 0");
}

double plume_length_scale(const SourceTerm& t) {
  return std::sqrt(t.d * t.tau / (1.0 + t.u * t.u * t.tau / (4.0 * t.d)));
}

PlumeKernel::PlumeKernel(const SourceTerm& t)
    : xs_(t.x),
      ys_(t.y),
      prefactor_(t.q / (4.0 * std::numbers::pi * t.d)),
      lambda_(plume_length_scale(t)),
      inv_lambda_(1.0 / lambda_),
      drift_x_(t.u * std::cos(t.phi) / (2.0 * t.d)),
      drift_y_(t.u * std::sin(t.phi) / (2.0 * t.d)) {}

double PlumeKernel::eval(double dx, double dy, double r) const {
  const double psi = -(dx * drift_x_ + dy * drift_y_);
  return prefactor_ / r * std::exp(-r * inv_lambda_ + psi);
}

double PlumeKernel::at(Position p) const {
  const double dx = p.x - xs_;
  const double dy = p.y - ys_;
  const double r = std::sqrt(dx * dx + dy * dy);
  if (r < kSourceCutoff) {
    throw SingularityError("concentration requested at the source location");
  }
  return eval(dx, dy, r);
}

double PlumeKernel::guarded(Position p) const {
  const double dx = p.x - xs_;
  const double dy = p.y - ys_;
  const double r = std::max(std::sqrt(dx * dx + dy * dy), kSourceCutoff);
  return eval(dx, dy, r);
}

double mean_concentration(Position p, const SourceTerm& theta) { return PlumeKernel(theta).at(p); }

double noise_std(double mean, const EnvConfig& cfg) { return cfg.alpha * mean + cfg.beta; }

double sample_from_mean(double mean, const EnvConfig& cfg, Rng& rng) {
  const double sigma = noise_std(mean, cfg);
  const double noise = cfg.noise_mean + sigma * standard_normal(rng);
  return std::max(0.0, mean + noise);
}

double sample_measurement(Position p, const SourceTerm& theta, const EnvConfig& cfg, Rng& rng) {
  return sample_from_mean(mean_concentration(p, theta), cfg, rng);
}

Position apply_action(Position pos, Action action, const EnvConfig& cfg) {
  const double s = cfg.step_length;
  const double diag = s * std::numbers::sqrt2 / 2.0;
  double dx = 0.0;
  double dy = 0.0;
  switch (action) {
    case Action::North: dy = s; break;
    case Action::East: dx = s; break;
    case Action::South: dy = -s; break;
    case Action::West: dx = -s; break;
    case Action::NorthEast: dx = diag; dy = diag; break;
    case Action::SouthEast: dx = diag; dy = -diag; break;
    case Action::SouthWest: dx = -diag; dy = -diag; break;
    case Action::NorthWest: dx = -diag; dy = diag; break;
  }
  return cfg.domain.clamp({pos.x + dx, pos.y + dy});
}

EnvConfig with_scenario_noise(EnvConfig base, const Scenario& scenario) {
  base.alpha = scenario.alpha;
  base.beta = scenario.beta;
  return base;
}

StepResult step(Position pos, Action action, const EnvConfig& cfg, const SourceTerm& theta, Rng& rng) {
  const Position next = apply_action(pos, action, cfg);
  return {next, Observation{next, sample_measurement(next, theta, cfg, rng)}};
}

}  // namespace ste
