#pragma once

#include "awt/data/sample.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace awt {

/// Ground-truth correspondence between the two domains. Only evaluation reads it.
struct PairingManifest {
  struct Pair {
    std::string trajectory_id;
    std::string inertia_id;
  };
  std::vector<Pair> pairs;
};

/// Reads an AWT-JSONL file: one JSON object per line with
/// `id`, `domain`, `label`, `class_name`, `rate_hz` and `data` (L rows of C numbers).
/// Rejects records of another domain, wrong channel counts, mixed rates,
/// non-dense labels and inconsistent class names. Errors name the line.
Dataset load_dataset(const std::filesystem::path& path, Domain expected);

/// Writes `ds` in AWT-JSONL. Doubles are printed in shortest round-trip form.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

std::string to_jsonl_line(const Sample& s, const std::string& class_name);

/// JSON array of {"trajectory_id", "inertia_id"} objects.
PairingManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const PairingManifest& m, const std::filesystem::path& path);

}  // namespace awt
