#pragma once

// JSON documents read and written by the harness: run/sweep/train
// configurations, Q-network checkpoints and belief snapshots.

#include <filesystem>
#include <string>
#include <string_view>

#include "ste/belief.hpp"
#include "ste/dqn.hpp"
#include "ste/harness.hpp"

namespace ste {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kCheckpointVersion = 1;

/// Fully resolved configuration, schema-versioned.
std::string to_json(const RunConfig& cfg);
std::string to_json(const TrainSpec& spec);
/// Every cell of a sweep, as {"schema_version", "kind": "sweep", "cells": [...]}.
std::string sweep_to_json(std::span<const RunConfig> cells);

/// Missing keys keep the values in `defaults`. When the document sets
/// scenario source ranges but no belief prior box, the prior box follows
/// the scenario x/y ranges. Throws ConfigError on malformed input.
RunConfig run_config_from_json(std::string_view text, const RunConfig& defaults = {});
/// {"base": <run config>, "policies": [...], "particles": [...], "zetas": [...]}
SweepSpec sweep_spec_from_json(std::string_view text);
TrainSpec train_spec_from_json(std::string_view text);

/// {version, architecture, activation: "relu", layers: [{weights, biases}]}
std::string checkpoint_to_json(const QNetwork& net);
QNetwork checkpoint_from_json(std::string_view text);
void save_checkpoint(const QNetwork& net, const std::filesystem::path& path);
QNetwork load_checkpoint(const std::filesystem::path& path);

/// {particles: [{x, y, ...estimated dims, weight}], std, ess, estimate, history_length, degeneracy_events}
std::string belief_snapshot_json(const Belief& belief);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace ste
