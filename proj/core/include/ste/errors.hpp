#pragma once

#include <stdexcept>
#include <string>

namespace ste {

/// Invalid configuration or domain-type invariant violation.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Plume model evaluated at (or within 1e-9 m of) the release point.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite Bellman loss during Q-network training.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-system failure; the message carries the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ste
