#include "awt/eval/probe.hpp"

#include "awt/error.hpp"
#include "awt/numerics/adam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace awt {

namespace {

constexpr ConvGeometry kProbeConv{5, 2, 2};
constexpr std::size_t kEvalChunk = 64;

std::vector<Index> next_lengths(std::span<const Index> lengths) {
  std::vector<Index> out;
  out.reserve(lengths.size());
  for (Index l : lengths) out.push_back(conv_output_length(l, kProbeConv));
  return out;
}

Var probe_logits(Tape<ProbeReal>& tape, const ProbeClassifier& p, const Batch<ProbeReal>& b) {
  const Var x = tape.constant(b.values);
  return apply_affine(tape, p.head, probe_features(tape, p.trunk, x, std::span<const Index>(b.lengths)));
}

}  // namespace

ProbeTrunk make_probe_trunk(const std::string& prefix, Index channels, std::mt19937_64& rng) {
  return ProbeTrunk{make_conv<ProbeReal>(prefix + ".conv1", channels, 32, kProbeConv, rng),
                    make_conv<ProbeReal>(prefix + ".conv2", 32, 64, kProbeConv, rng),
                    make_conv<ProbeReal>(prefix + ".conv3", 64, ProbeTrunk::kFeatures, kProbeConv, rng)};
}

void append_blocks(std::vector<ParamBlock<ProbeReal>*>& out, ProbeTrunk& trunk) {
  append_blocks(out, trunk.conv1);
  append_blocks(out, trunk.conv2);
  append_blocks(out, trunk.conv3);
}

Var probe_features(Tape<ProbeReal>& tape, const ProbeTrunk& trunk, Var x, std::span<const Index> lengths) {
  std::vector<Index> lens(lengths.begin(), lengths.end());
  Var h = x;
  for (const ConvLayer<ProbeReal>* layer : {&trunk.conv1, &trunk.conv2, &trunk.conv3}) {
    lens = next_lengths(lens);
    h = mask_time(tape, activate(tape, apply_conv(tape, *layer, h), Activation::leaky_relu),
                  std::span<const Index>(lens));
  }
  return masked_mean_time(tape, h, std::span<const Index>(lens));
}

std::vector<ParamBlock<ProbeReal>*> ProbeClassifier::blocks() {
  std::vector<ParamBlock<ProbeReal>*> out;
  append_blocks(out, trunk);
  append_blocks(out, head);
  return out;
}

void validate(const ProbeConfig& cfg) {
  if (cfg.epochs < 1) throw ValidationError("probe: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ValidationError("probe: batch_size must be >= 1");
  if (!(cfg.lr > 0)) throw ValidationError("probe: lr must be positive");
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, int batch_size, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

ProbeClassifier train_probe(const Dataset& train, const ProbeConfig& cfg) {
  validate(cfg);
  if (train.empty()) throw ValidationError("train_probe: empty dataset");
  if (train.class_count() < 2) throw ValidationError("train_probe: need at least two classes");
  std::mt19937_64 rng(cfg.seed);
  ProbeClassifier p;
  p.domain = train.domain;
  p.class_count = train.class_count();
  p.trunk = make_probe_trunk("probe", channels_for(train.domain), rng);
  p.head = make_affine<ProbeReal>("probe.head", ProbeTrunk::kFeatures, p.class_count, rng);
  const auto blocks = p.blocks();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& idx : shuffled_batches(train.size(), cfg.batch_size, rng)) {
      std::vector<const Sample*> batch;
      for (std::size_t i : idx) batch.push_back(&train.samples[i]);
      const Batch<ProbeReal> b = pad_and_mask<ProbeReal>(std::span<const Sample* const>(batch));
      Tape<ProbeReal> tape;
      const Var loss = softmax_xent(tape, probe_logits(tape, p, b), std::span<const int>(b.labels));
      if (!std::isfinite(tape.scalar(loss))) throw NumericError("train_probe: loss is not finite");
      tape.backward(loss);
      zero_grads(blocks);
      collect_grads(tape, blocks);
      adam_step(blocks, cfg.lr);
    }
  }
  return p;
}

Matrix<double> probe_probabilities(const ProbeClassifier& probe, std::span<const Sample* const> samples) {
  Matrix<double> out(probe.class_count, static_cast<Index>(samples.size()));
  for (std::size_t start = 0; start < samples.size(); start += kEvalChunk) {
    const auto chunk = samples.subspan(start, std::min(kEvalChunk, samples.size() - start));
    for (const Sample* s : chunk) {
      if (s->domain != probe.domain) throw ValidationError("probe: sample domain does not match the probe");
    }
    const Batch<ProbeReal> b = pad_and_mask<ProbeReal>(chunk);
    Tape<ProbeReal> tape = Tape<ProbeReal>::inference();
    const Matrix<double> logits = tape.data(probe_logits(tape, probe, b)).cast<double>();
    for (Index j = 0; j < logits.cols(); ++j) {
      const Vector<double> e = (logits.col(j).array() - logits.col(j).maxCoeff()).exp();
      out.col(static_cast<Index>(start) + j) = e / e.sum();
    }
  }
  return out;
}

Classification score_predictions(const Matrix<double>& probabilities, std::span<const int> labels, int class_count) {
  if (probabilities.cols() != static_cast<Index>(labels.size())) {
    throw ValidationError("score_predictions: probability and label counts differ");
  }
  Classification c;
  c.count = labels.size();
  std::vector<int> hits(static_cast<std::size_t>(class_count), 0), seen(static_cast<std::size_t>(class_count), 0);
  double correct = 0, loss = 0;
  for (Index j = 0; j < probabilities.cols(); ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= class_count || y >= probabilities.rows()) {
      throw ValidationError("score_predictions: label " + std::to_string(y) + " out of range");
    }
    Index best = 0;
    probabilities.col(j).maxCoeff(&best);
    c.predictions.push_back(static_cast<int>(best));
    ++seen[static_cast<std::size_t>(y)];
    if (best == y) {
      ++correct;
      ++hits[static_cast<std::size_t>(y)];
    }
    loss -= std::log(std::max(probabilities(y, j), std::numeric_limits<double>::min()));
  }
  const double n = std::max<double>(1, static_cast<double>(c.count));
  c.accuracy = correct / n;
  c.mean_loss = loss / n;
  for (int k = 0; k < class_count; ++k) {
    const auto i = static_cast<std::size_t>(k);
    c.per_class_accuracy.push_back(seen[i] ? static_cast<double>(hits[i]) / seen[i]
                                           : std::numeric_limits<double>::quiet_NaN());
  }
  return c;
}

Classification evaluate_probe(const ProbeClassifier& probe, std::span<const Sample* const> samples) {
  std::vector<int> labels;
  for (const Sample* s : samples) labels.push_back(s->label);
  return score_predictions(probe_probabilities(probe, samples), std::span<const int>(labels), probe.class_count);
}

std::vector<const Sample*> pointers(const std::vector<Sample>& samples) {
  std::vector<const Sample*> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(&s);
  return out;
}

std::vector<const Sample*> pointers(const Dataset& ds) { return pointers(ds.samples); }

Classification evaluate_probe(const ProbeClassifier& probe, const Dataset& ds) {
  const auto p = pointers(ds);
  return evaluate_probe(probe, std::span<const Sample* const>(p));
}

}  // namespace awt
