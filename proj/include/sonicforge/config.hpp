#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sonicforge/builder.hpp"

namespace sonicforge {

/// Single-stimulus request for `generate`.
struct GenerateSpec {
  Attribute attribute = Attribute::Pitch;
  Task task = Task::Comparison;
  std::filesystem::path input;
  std::filesystem::path input_b;     // second clip (timbre, texture)
  double magnitude = 0.0;            // transform parameter of the target stimulus
  std::optional<double> reference;   // comparison reference; per-attribute default
  std::string label;                 // category of input (timbre, texture) or IR label
  std::string label_b;               // category of input_b
  std::string distractor;            // recognition distractor for open label spaces
};

/// Resolved run parameters. Text form is `key = value` per line; lines
/// starting with # are comments. Keys are listed in the README.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t per_cell = 100;
  int workers = 1;
  std::filesystem::path out = "out";
  std::string pool = "toy";     // "toy" or a pool manifest CSV
  std::string ir_bank = "toy";  // "toy" or an IR bank directory
  std::uint64_t pool_seed = 0;
  BuildConfig build;
  GenerateSpec generate;

  /// Sets one key. ConfigError on unknown keys or unparsable values.
  /// Relative paths resolve against `base`.
  void set(const std::string& key, const std::string& value,
           const std::filesystem::path& base = {});
  /// Every key with its effective value, in a fixed order.
  std::string resolved() const;
};

/// Defaults, then SONIC_FORGE_SEED, then the file.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base = {});
/// Seed default taken from SONIC_FORGE_SEED when set.
RunConfig default_run_config();

struct Sources {
  ClipPool pool;
  IrBank bank;
};

Sources load_sources(const RunConfig& cfg);

}  // namespace sonicforge
