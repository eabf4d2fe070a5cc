#pragma once

#include "awt/data/sample.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace awt {

inline constexpr Index kMovingAverageWindow = 5;

/// Centered moving average (window 5) per channel. Near either end the window
/// is clipped to the sample, so the first widths are 3, 4, 5 and the last 5, 4, 3.
Sample preprocess_inertial(Sample s);

/// Shifts the trajectory so its first point is the origin.
Sample preprocess_trajectory(Sample s);

/// Applies the domain's preprocessing to every sample.
Dataset preprocess(Dataset ds);

struct ChannelStats {
  Vector<double> mean;
  Vector<double> std;
  std::vector<bool> clamped;  // channel had zero variance; its std was set to 1
};

ChannelStats compute_stats(const Dataset& ds);

void apply_stats(Dataset& ds, const ChannelStats& stats);
Matrix<double> apply_stats(const Matrix<double>& values, const ChannelStats& stats);
Matrix<double> invert_stats(const Matrix<double>& values, const ChannelStats& stats);

/// Per-channel zero mean / unit variance using statistics of `ds` itself.
std::pair<Dataset, ChannelStats> standardize(Dataset ds);

/// Stratified split; each class keeps round(n_c * train_fraction) samples for
/// training, clamped so both parts get at least one. Original order is kept
/// within each part.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

}  // namespace awt
