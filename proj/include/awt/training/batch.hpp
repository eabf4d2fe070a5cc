#pragma once

#include "awt/data/sample.hpp"
#include "awt/error.hpp"

#include <span>
#include <vector>

namespace awt {

inline constexpr Index kLengthQuantum = 8;

constexpr Index round_up(Index v, Index quantum) { return (v + quantum - 1) / quantum * quantum; }

/// Zero-padded stack of same-domain samples. mask(i, l) holds iff l < lengths[i].
template <typename Scalar>
struct Batch {
  Tensor3<Scalar> values;
  std::vector<Index> lengths;
  std::vector<int> labels;
  Domain domain = Domain::inertia;
  double rate_hz = 0;

  Index size() const { return values.batch; }
  Index padded_length() const { return values.length; }

  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask() const {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> m(size(), padded_length());
    for (Index i = 0; i < size(); ++i)
      for (Index l = 0; l < padded_length(); ++l) m(i, l) = l < lengths[static_cast<std::size_t>(i)];
    return m;
  }
};

/// Pads to the longest sample rounded up to a multiple of 8.
template <typename Scalar>
Batch<Scalar> pad_and_mask(std::span<const Sample* const> samples) {
  if (samples.empty()) throw ValidationError("pad_and_mask: empty sample list");
  Batch<Scalar> out;
  out.domain = samples.front()->domain;
  out.rate_hz = samples.front()->rate_hz;
  const Index channels = samples.front()->channels();
  Index longest = 0;
  for (const Sample* s : samples) {
    if (s->domain != out.domain) throw ValidationError("pad_and_mask: mixed domains in one batch");
    if (s->channels() != channels) throw ValidationError("pad_and_mask: mixed channel counts in one batch");
    longest = std::max(longest, s->length());
  }
  const Index padded = round_up(std::max<Index>(longest, 1), kLengthQuantum);
  const Index n = static_cast<Index>(samples.size());
  out.values = Tensor3<Scalar>(channels, n, padded);
  for (Index i = 0; i < n; ++i) {
    const Sample& s = *samples[static_cast<std::size_t>(i)];
    out.values.data.middleCols(i * padded, s.length()) = s.values.template cast<Scalar>();
    out.lengths.push_back(s.length());
    out.labels.push_back(s.label);
  }
  return out;
}

template <typename Scalar>
Batch<Scalar> pad_and_mask(std::span<const Sample> samples) {
  std::vector<const Sample*> ptrs;
  ptrs.reserve(samples.size());
  for (const Sample& s : samples) ptrs.push_back(&s);
  return pad_and_mask<Scalar>(std::span<const Sample* const>(ptrs));
}

}  // namespace awt
