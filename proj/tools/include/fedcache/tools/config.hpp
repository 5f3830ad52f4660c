#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedcache/engine.hpp"

namespace fedcache::tools {

/// One point of a sweep: a label and the config it runs.
struct Variant {
  std::string label;
  RunConfig config;
};

/// A grid of runs: every variant × algorithm × seed.
struct Experiment {
  std::string name = "experiment";
  std::vector<Variant> variants;
  std::vector<Algorithm> algorithms;
  std::vector<std::uint64_t> seeds;
};

/// Ordered key/value pairs of the flat config format. Lines are `key = value`; `#` starts a
/// comment; blank lines are ignored.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

ConfigEntries parse_config_text(std::string_view text, std::string_view origin = "<text>");
ConfigEntries read_config_file(const std::filesystem::path& path);
/// Splits a `key=value` command-line override.
std::pair<std::string, std::string> parse_override(std::string_view assignment);

/// Mutable description of an experiment while entries are being applied.
struct ExperimentSpec {
  std::string name = "experiment";
  RunConfig base;
  std::vector<Algorithm> algorithms{Algorithm::fedcache2};
  std::vector<std::uint64_t> seeds{0};
  std::string sweep_key;
  std::vector<std::string> sweep_values;
};

/// Applies entries in order; later entries win. Throws ConfigError naming unknown keys and
/// malformed values.
void apply_entries(ExperimentSpec& spec, const ConfigEntries& entries);
/// Sets one RunConfig key from text.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Expands the sweep and validates every variant.
Experiment build_experiment(const ExperimentSpec& spec);

/// Every RunConfig key in canonical order with its value as text. Parsing the text with
/// set_config_value reproduces an equal config.
ConfigEntries config_entries(const RunConfig& config);
std::string format_config(const RunConfig& config);

}  // namespace fedcache::tools
