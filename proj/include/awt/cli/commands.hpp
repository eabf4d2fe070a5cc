#pragma once

#include "awt/cli/run_config.hpp"
#include "awt/model/grad_suite.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace awt {

namespace fs = std::filesystem;

/// Process exit codes shared by every subcommand.
enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_validation = 2, exit_numeric = 3 };

/// Writes inertia.jsonl, trajectory.jsonl and pairs.json into `out_dir`.
void cmd_gen_data(const RunConfig& cfg, const fs::path& out_dir);

struct TrainOutputs {
  fs::path checkpoint;  // checkpoint.awt
  fs::path metrics;     // metrics.csv, one line per iteration
  fs::path stats;       // stats.json, standardization per domain
  fs::path config;      // run.cfg, effective configuration
  std::size_t iterations = 0;
};

/// Loads both datasets, prepares and splits them, trains and writes the outputs.
/// Input errors surface before the first training step.
TrainOutputs cmd_train(const RunConfig& cfg, const fs::path& inertia_path, const fs::path& trajectory_path,
                       const fs::path& out_dir, std::ostream* progress = nullptr);

enum class Direction { i2t, t2i };
Direction parse_direction(std::string_view s);

/// Translates every record of `input` and writes AWT-JSONL in the target
/// domain's physical units (labels and class names copied). For i2t with
/// `svg_dir` set, also writes `<id>.svg` per sample drawing the x-y path.
/// Returns the number of translated records.
std::size_t cmd_translate(const fs::path& checkpoint, const fs::path& input, Direction direction,
                          const fs::path& out_path, const std::optional<fs::path>& svg_dir = std::nullopt);

/// One SVG document with a single polyline through the (x, y) columns.
std::string trajectory_svg(const Matrix<double>& xy, const std::string& title);

/// Rebuilds the checkpoint's split from raw files, trains probes on the real
/// training parts and evaluates the translater on the test parts. Writes and
/// returns the report.
nlohmann::json cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& inertia_path,
                        const fs::path& trajectory_path, const std::optional<fs::path>& pairs_path,
                        const fs::path& report_path);

/// Trains and evaluates the full, no_cls and no_gan arms with one seed; writes
/// `<arm>.csv` logs and ablation.json into `out_dir`.
nlohmann::json cmd_ablate(const RunConfig& cfg, const fs::path& inertia_path, const fs::path& trajectory_path,
                          const fs::path& out_dir, std::ostream* progress = nullptr);

/// Prints one line per gradient case and a summary.
GradSuiteResult cmd_gradcheck(std::uint64_t seed, std::ostream& out);

/// Full command-line entry point; returns an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace awt
