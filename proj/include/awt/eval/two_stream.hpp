#pragma once

#include "awt/eval/probe.hpp"
#include "awt/training/trainer.hpp"

#include <optional>

namespace awt {

/// Stream 1 reads the real sample, stream 2 its translation into the other
/// domain; pooled features are concatenated (128) into one affine softmax.
struct TwoStreamClassifier {
  Domain domain = Domain::inertia;  // domain of the real stream
  int class_count = 0;
  ProbeTrunk real_trunk;
  ProbeTrunk translated_trunk;
  AffineLayer<ProbeReal> head;

  std::vector<ParamBlock<ProbeReal>*> blocks();
};

/// A real sample paired with the translation the second stream reads.
struct StreamPair {
  const Sample* real = nullptr;
  const Sample* translated = nullptr;
};

TwoStreamClassifier train_two_stream(std::span<const StreamPair> train, int class_count, const ProbeConfig& cfg);

Classification evaluate_two_stream(const TwoStreamClassifier& model, std::span<const StreamPair> test);

struct TwoStreamResult {
  Classification two_stream;
  Classification single_stream;
  std::optional<Classification> control;  // translations paired with the wrong inputs

  double two_stream_acc() const { return two_stream.accuracy; }
  double single_stream_acc() const { return single_stream.accuracy; }
};

/// Trains the single-stream probe and the two-stream model on `train` with the
/// same seed and budget, translating with `translater` (rate-scaled) into the
/// other domain, and scores both on `test`.
TwoStreamResult two_stream_eval(const Model& translater, const Dataset& train, const Dataset& test,
                                double target_rate_hz, const ProbeConfig& cfg, bool with_control = true);

}  // namespace awt
