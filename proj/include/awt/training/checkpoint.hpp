#pragma once

#include "awt/data/preprocess.hpp"
#include "awt/training/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace awt {

/// Everything needed to translate raw recordings: weights, architecture
/// snapshot, per-domain standardization and the split that produced them.
struct Checkpoint {
  Model model;
  ChannelStats stats_inertia;
  ChannelStats stats_trajectory;
  double rate_inertia_hz = 0;
  double rate_trajectory_hz = 0;
  std::vector<std::string> class_names;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;

  const ChannelStats& stats(Domain d) const { return d == Domain::inertia ? stats_inertia : stats_trajectory; }
  double rate(Domain d) const { return d == Domain::inertia ? rate_inertia_hz : rate_trajectory_hz; }
};

/// Little-endian binary archive: magic "AWTCKPT1", metadata, standardization
/// stats, then every parameter block as (name, rows, cols, float32 values
/// column-major). Loading rebuilds the architecture from the stored config and
/// requires every block name and shape to match.
std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace awt
