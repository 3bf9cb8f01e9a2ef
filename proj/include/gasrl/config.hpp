#pragma once

#include "gasrl/harness.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gasrl {

/// Full experiment description as read from a TOML file.
///
///   [market]   environment constants        [reward]  penalty weights and refill rule
///   [agent]    SAC hyperparameters          [run]     budget, seed, tag, evaluation counts
///   [seasonal] coefficients = "file.csv"    [output]  dir = "runs" (root for run directories)
///
/// Omitted keys keep their defaults; unknown keys are rejected.
struct ExperimentConfig {
    RunSpec run;
    std::optional<std::filesystem::path> seasonal_file;
    std::filesystem::path output_dir;  // empty: use default_output_root()
};

/// Parses TOML text. `overrides` are `section.key=value` strings applied before validation;
/// values use TOML syntax and fall back to a bare string. Relative paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& toml_text, const std::vector<std::string>& overrides = {},
                              const std::filesystem::path& base_dir = ".");

/// Throws ConfigError if the file is missing or invalid.
ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides = {});

/// Fully resolved configuration as TOML (every key present).
std::string config_to_toml(const ExperimentConfig& cfg);

/// Output root: $GASRL_OUTPUT_ROOT when set, otherwise `fallback`.
std::filesystem::path default_output_root(const std::filesystem::path& fallback = "runs");

}  // namespace gasrl
