#pragma once

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sinkstat {

const char* tool_version();

/// Every command takes a JSON spec (defaults filled in for missing keys),
/// writes its payload under `out_dir` and finishes with manifest.json, which
/// holds the resolved spec. Feeding a manifest back as the spec reproduces the
/// same CSV bytes.
struct CommandResult {
  std::vector<std::filesystem::path> files;
  nlohmann::json manifest;
};

/// Keys: mode (H0-one | H1-one | H0-two | H1-two), grid, lambda[], n[], m[],
/// theta, reps, seed, kde_points.
CommandResult cmd_simulate_clt(const nlohmann::json& spec, const std::filesystem::path& out_dir);

/// Synthetic keys: grid, lambda[], n, theta, reps, level, seed.
/// Data keys: data (dataset JSON path), sample (label or "*" for pooled),
/// reference {groups[], uniform_support} or reference_file.
CommandResult cmd_test_one(const nlohmann::json& spec, const std::filesystem::path& out_dir);

/// Synthetic keys: grid, lambda[], n, m, theta, reps, level, seed.
/// Data keys: data, sample_a/sample_b or pairs[], reference {groups[]}.
CommandResult cmd_test_two(const nlohmann::json& spec, const std::filesystem::path& out_dir);

/// Keys: grid, theta[], lambda[], n, reps, repeats, level, seed.
CommandResult cmd_power(const nlohmann::json& spec, const std::filesystem::path& out_dir);

/// Keys: csv, bbox [xmin, xmax, ymin, ymax], rows, cols, group_col, x_col, y_col.
CommandResult cmd_ingest(const nlohmann::json& spec, const std::filesystem::path& out_dir);

/// Keys: data, groups[] (default all), uniform_support.
CommandResult cmd_barycenter(const nlohmann::json& spec, const std::filesystem::path& out_dir);

/// Dispatches on a subcommand name ("simulate-clt", "test-one", ...).
CommandResult run_command(const std::string& name, const nlohmann::json& spec,
                          const std::filesystem::path& out_dir);

}  // namespace sinkstat
