#pragma once

// Flat `key = value` configuration with `[section]` headers.  Every option is
// addressed by a dotted key (`learner.k`), which is also the form accepted by
// command-line overrides (`--set learner.k=10`).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tce/trainer.hpp"

namespace tce {

struct RunConfig {
  TrainerConfig trainer;
  std::vector<std::uint64_t> seeds{0};
  std::string output = "runs/default";
};

struct ConfigEntry {
  std::string value;
  std::string origin;  // "file:line" or "--set"
};

using ConfigEntries = std::map<std::string, ConfigEntry>;

/// Parses ini-style text.  Throws ConfigError with "source:line: message".
ConfigEntries parse_config_text(const std::string& text, const std::string& source);

/// Applies "key=value"; throws ConfigError if the text has no '='.
void apply_override(ConfigEntries& entries, const std::string& assignment);

/// Unknown keys and unparsable values raise ConfigError naming the origin.
RunConfig build_run_config(const ConfigEntries& entries);

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Canonical ini text covering every key; parses back to an identical RunConfig.
std::string to_ini(const RunConfig& config);

/// All recognised dotted keys.
std::vector<std::string> config_keys();

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace tce
