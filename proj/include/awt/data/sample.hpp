#pragma once

#include "awt/numerics/tensor.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace awt {

enum class Domain { inertia, trajectory };

/// ax,ay,az,gx,gy,gz for inertia; x,y,z for trajectory.
constexpr Index channels_for(Domain d) { return d == Domain::inertia ? 6 : 3; }

constexpr Domain other(Domain d) { return d == Domain::inertia ? Domain::trajectory : Domain::inertia; }

std::string_view to_string(Domain d);
Domain parse_domain(std::string_view s);

inline constexpr Index kMinSampleLength = 16;

/// One variable-length recording, values laid out (channels, time).
struct Sample {
  std::string id;
  Domain domain = Domain::inertia;
  int label = 0;
  double rate_hz = 0;
  Matrix<double> values;

  Index channels() const { return values.rows(); }
  Index length() const { return values.cols(); }
};

/// Throws ValidationError unless channel count matches the domain, length is at
/// least `min_length` and every value is finite.
void validate_sample(const Sample& s, Index min_length = kMinSampleLength);

struct Dataset {
  Domain domain = Domain::inertia;
  double rate_hz = 0;
  std::vector<Sample> samples;
  std::vector<std::string> class_names;  // index = label

  int class_count() const { return static_cast<int>(class_names.size()); }
  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

}  // namespace awt
