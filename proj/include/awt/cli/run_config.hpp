#pragma once

#include "awt/data/synth.hpp"
#include "awt/eval/evaluate.hpp"
#include "awt/eval/probe.hpp"
#include "awt/training/trainer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace awt {

/// Everything a command reads from its config file. The file is flat
/// `key = value` lines; `#` starts a comment; unknown keys are rejected.
struct RunConfig {
  SynthConfig synth;
  TrainConfig train;
  std::uint64_t split_seed = 7;
  double train_fraction = 0.8;
  ProbeConfig probe;
  LinearProbeConfig linear_probe;
  bool two_stream = false;
  Domain two_stream_domain = Domain::inertia;
  bool two_stream_control = true;
  std::optional<int> minority_class;  // highlighted in the two-stream report

  // Optional paths; relative entries resolve against the config file's directory.
  std::filesystem::path inertia_path;
  std::filesystem::path trajectory_path;
  std::filesystem::path pairs_path;
};

/// Every accepted key in file order of `format_run_config`.
const std::vector<std::string>& run_config_keys();

/// Sets one key from its textual value. Throws ValidationError naming the key
/// when it is unknown or the value does not parse.
void set_run_config_key(RunConfig& cfg, std::string_view key, std::string_view value);

/// Parses config text. `base_dir` resolves relative path values; line numbers
/// appear in error messages.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// The effective configuration, one `key = value` line per key; parses back to
/// an identical RunConfig.
std::string format_run_config(const RunConfig& cfg);

/// Runs every component `validate` plus the split parameters.
void validate(const RunConfig& cfg);

}  // namespace awt
