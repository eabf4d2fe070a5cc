#pragma once

#include "awt/model/layers.hpp"
#include "awt/training/batch.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace awt {

using ProbeReal = float;

/// Three k5 s2 convolutions (C -> 32 -> 64 -> 64) with leaky ReLU and a masked
/// global time average. Produces a flat (64, B) feature tensor.
struct ProbeTrunk {
  ConvLayer<ProbeReal> conv1, conv2, conv3;

  static constexpr Index kFeatures = 64;
};

ProbeTrunk make_probe_trunk(const std::string& prefix, Index channels, std::mt19937_64& rng);
void append_blocks(std::vector<ParamBlock<ProbeReal>*>& out, ProbeTrunk& trunk);
Var probe_features(Tape<ProbeReal>& tape, const ProbeTrunk& trunk, Var x, std::span<const Index> lengths);

struct ProbeClassifier {
  Domain domain = Domain::inertia;
  int class_count = 0;
  ProbeTrunk trunk;
  AffineLayer<ProbeReal> head;

  std::vector<ParamBlock<ProbeReal>*> blocks();
};

struct ProbeConfig {
  int epochs = 30;
  int batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

void validate(const ProbeConfig& cfg);

/// Trains a fresh probe with Adam on every sample of `train`. Deterministic per seed.
ProbeClassifier train_probe(const Dataset& train, const ProbeConfig& cfg);

struct Classification {
  double accuracy = 0;
  double mean_loss = 0;
  std::vector<double> per_class_accuracy;  // NaN for classes absent from the input
  std::vector<int> predictions;
  std::size_t count = 0;
};

/// Scores labelled predictions given (K, N) class probabilities.
Classification score_predictions(const Matrix<double>& probabilities, std::span<const int> labels, int class_count);

/// (K, N) softmax outputs of the probe for each sample.
Matrix<double> probe_probabilities(const ProbeClassifier& probe, std::span<const Sample* const> samples);

Classification evaluate_probe(const ProbeClassifier& probe, std::span<const Sample* const> samples);
Classification evaluate_probe(const ProbeClassifier& probe, const Dataset& ds);

std::vector<const Sample*> pointers(const Dataset& ds);
std::vector<const Sample*> pointers(const std::vector<Sample>& samples);

/// Fixed-size minibatches over a seeded permutation of [0, n).
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, int batch_size, std::mt19937_64& rng);

}  // namespace awt
