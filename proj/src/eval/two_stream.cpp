#include "awt/eval/two_stream.hpp"

#include "awt/error.hpp"
#include "awt/eval/evaluate.hpp"
#include "awt/numerics/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace awt {

namespace {

constexpr std::size_t kEvalChunk = 64;

Var two_stream_logits(Tape<ProbeReal>& tape, const TwoStreamClassifier& m, std::span<const StreamPair> pairs) {
  std::vector<const Sample*> real, translated;
  for (const StreamPair& p : pairs) {
    real.push_back(p.real);
    translated.push_back(p.translated);
  }
  const Batch<ProbeReal> br = pad_and_mask<ProbeReal>(std::span<const Sample* const>(real));
  const Batch<ProbeReal> bt = pad_and_mask<ProbeReal>(std::span<const Sample* const>(translated));
  const Var fr = probe_features(tape, m.real_trunk, tape.constant(br.values), std::span<const Index>(br.lengths));
  const Var ft = probe_features(tape, m.translated_trunk, tape.constant(bt.values), std::span<const Index>(bt.lengths));
  return apply_affine(tape, m.head, concat_channels(tape, fr, ft));
}

// Each translation moves to another sample's slot; no sample keeps its own.
std::vector<StreamPair> mismatched(std::span<const StreamPair> pairs, std::mt19937_64& rng) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<StreamPair> out(pairs.begin(), pairs.end());
  for (std::size_t i = 0; i < order.size(); ++i) out[order[i]].translated = pairs[order[(i + 1) % order.size()]].translated;
  return out;
}

std::vector<StreamPair> pair_up(const Dataset& real, const std::vector<Sample>& translated) {
  std::vector<StreamPair> out;
  for (std::size_t i = 0; i < real.size(); ++i) out.push_back({&real.samples[i], &translated[i]});
  return out;
}

}  // namespace

std::vector<ParamBlock<ProbeReal>*> TwoStreamClassifier::blocks() {
  std::vector<ParamBlock<ProbeReal>*> out;
  append_blocks(out, real_trunk);
  append_blocks(out, translated_trunk);
  append_blocks(out, head);
  return out;
}

TwoStreamClassifier train_two_stream(std::span<const StreamPair> train, int class_count, const ProbeConfig& cfg) {
  validate(cfg);
  if (train.empty()) throw ValidationError("train_two_stream: empty training set");
  if (class_count < 2) throw ValidationError("train_two_stream: need at least two classes");
  for (const StreamPair& p : train) {
    if (!p.real || !p.translated) throw ValidationError("train_two_stream: missing stream input");
    if (p.real->domain == p.translated->domain) throw ValidationError("train_two_stream: streams must differ in domain");
  }
  std::mt19937_64 rng(cfg.seed);
  TwoStreamClassifier m;
  m.domain = train.front().real->domain;
  m.class_count = class_count;
  m.real_trunk = make_probe_trunk("probe", channels_for(m.domain), rng);
  m.translated_trunk = make_probe_trunk("translated", channels_for(other(m.domain)), rng);
  m.head = make_affine<ProbeReal>("two_stream.head", 2 * ProbeTrunk::kFeatures, class_count, rng);
  const auto blocks = m.blocks();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& idx : shuffled_batches(train.size(), cfg.batch_size, rng)) {
      std::vector<StreamPair> batch;
      std::vector<int> labels;
      for (std::size_t i : idx) {
        batch.push_back(train[i]);
        labels.push_back(train[i].real->label);
      }
      Tape<ProbeReal> tape;
      const Var loss = softmax_xent(tape, two_stream_logits(tape, m, batch), std::span<const int>(labels));
      if (!std::isfinite(tape.scalar(loss))) throw NumericError("train_two_stream: loss is not finite");
      tape.backward(loss);
      zero_grads(blocks);
      collect_grads(tape, blocks);
      adam_step(blocks, cfg.lr);
    }
  }
  return m;
}

Classification evaluate_two_stream(const TwoStreamClassifier& model, std::span<const StreamPair> test) {
  Matrix<double> probs(model.class_count, static_cast<Index>(test.size()));
  std::vector<int> labels;
  for (std::size_t start = 0; start < test.size(); start += kEvalChunk) {
    const auto chunk = test.subspan(start, std::min(kEvalChunk, test.size() - start));
    Tape<ProbeReal> tape = Tape<ProbeReal>::inference();
    const Matrix<double> logits = tape.data(two_stream_logits(tape, model, chunk)).cast<double>();
    for (Index j = 0; j < logits.cols(); ++j) {
      const Vector<double> e = (logits.col(j).array() - logits.col(j).maxCoeff()).exp();
      probs.col(static_cast<Index>(start) + j) = e / e.sum();
      labels.push_back(chunk[static_cast<std::size_t>(j)].real->label);
    }
  }
  return score_predictions(probs, std::span<const int>(labels), model.class_count);
}

TwoStreamResult two_stream_eval(const Model& translater, const Dataset& train, const Dataset& test,
                                double target_rate_hz, const ProbeConfig& cfg, bool with_control) {
  if (train.domain != test.domain) throw ValidationError("two_stream_eval: train and test domains differ");
  const int k = train.class_count();
  const std::vector<Sample> train_t = translate_dataset(translater, train, target_rate_hz);
  const std::vector<Sample> test_t = translate_dataset(translater, test, target_rate_hz);
  const std::vector<StreamPair> train_pairs = pair_up(train, train_t);
  const std::vector<StreamPair> test_pairs = pair_up(test, test_t);

  TwoStreamResult out;
  out.single_stream = evaluate_probe(train_probe(train, cfg), test);
  out.two_stream = evaluate_two_stream(train_two_stream(train_pairs, k, cfg), test_pairs);
  if (with_control) {
    std::mt19937_64 rng(cfg.seed ^ 0xc0ffeeULL);
    const std::vector<StreamPair> bad_train = mismatched(train_pairs, rng);
    const std::vector<StreamPair> bad_test = mismatched(test_pairs, rng);
    out.control = evaluate_two_stream(train_two_stream(bad_train, k, cfg), bad_test);
  }
  return out;
}

}  // namespace awt
