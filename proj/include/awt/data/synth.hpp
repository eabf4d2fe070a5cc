#pragma once

#include "awt/data/io.hpp"
#include "awt/data/sample.hpp"

#include <cstdint>
#include <random>

namespace awt {

struct SynthConfig {
  int class_count = 5;
  int samples_per_class = 200;
  Index min_length = 48;  // trajectory samples
  Index max_length = 160;
  double trajectory_rate_hz = 200;
  double inertia_rate_hz = 60;
  double noise_std = 0.05;
  double bias_std = 1.0;
  double scale_jitter = 0.15;
  double rotation_jitter_deg = 10;
  double translation_jitter = 0.2;
  double warp_strength = 0.35;
  double z_noise = 0.03;
  // Optional imbalance: `minority_class` keeps this fraction of samples.
  int minority_class = -1;
  double minority_fraction = 0.1;
  std::uint64_t seed = 1;
};

void validate(const SynthConfig& cfg);

struct SynthData {
  Dataset trajectory;
  Dataset inertia;
  PairingManifest pairs;
};

/// Paired glyph trajectories and their inertial counterparts. Glyph templates
/// depend only on the class index, so datasets drawn with different seeds
/// share one alphabet.
SynthData synth_generate(const SynthConfig& cfg);

/// Control-point template of class `label` evaluated at `points` positions
/// along the curve, (2, points).
Matrix<double> glyph_template(int label, Index points);

/// Per-channel linear interpolation over normalized time.
Matrix<double> resample(const Matrix<double>& values, Index target_length);

struct OracleNoise {
  double noise_std = 0;
  double bias_std = 0;
};

/// Inertial channels implied by a trajectory: acceleration from the second
/// difference of position, z angular rate from the heading of the planar
/// velocity, x/y angular rates as correlated noise. The trajectory is first
/// resampled to `target_length` points spaced `dt` apart.
Sample kinematic_oracle(const Sample& trajectory, double dt, Index target_length, const OracleNoise& noise,
                        std::mt19937_64& rng);

}  // namespace awt
