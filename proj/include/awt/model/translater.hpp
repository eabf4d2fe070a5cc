#pragma once

#include "awt/data/sample.hpp"
#include "awt/error.hpp"
#include "awt/model/layers.hpp"
#include "awt/training/batch.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace awt {

inline constexpr Index kLatentDim = 64;

template <typename Scalar>
using LatentVector = Eigen::Matrix<Scalar, kLatentDim, 1>;

/// Architecture snapshot stored alongside the weights.
struct ModelConfig {
  int class_count = 0;
  Index conv1_width = 32;
  Index conv2_width = 64;
  Index conv3_width = 64;
  Index disc_hidden = 128;
  Index disc_outputs = 64;
};

/// Number of GRU steps the encoder produces for an input of `length` samples:
/// three stride-2 convolutions, each ceil(L / 2).
inline Index encoder_feature_length(Index length) {
  if (length < 1) throw ValidationError("encoder input length must be >= 1, got " + std::to_string(length));
  Index l = length;
  for (int i = 0; i < 3; ++i) l = (l + 1) / 2;
  return l;
}

/// Sequence length emitted by a decoder run for `steps` GRU steps.
constexpr Index decoder_output_length(Index steps) { return kLengthQuantum * steps; }

enum class DurationPolicy { source_length, rate_scaled };

/// Decoder steps for a cross-domain translation of a `length`-sample input.
inline Index translation_steps(Index length, double source_rate, double target_rate, DurationPolicy policy) {
  double desired = static_cast<double>(length);
  if (policy == DurationPolicy::rate_scaled) {
    if (!(target_rate > 0) || !(source_rate > 0)) throw ValidationError("rate-scaled translation needs positive rates");
    desired = std::round(static_cast<double>(length) * target_rate / source_rate);
  }
  return std::max<Index>(1, static_cast<Index>(std::llround(desired / static_cast<double>(kLengthQuantum))));
}

template <typename Scalar>
struct Encoder {
  ConvLayer<Scalar> conv1, conv2, conv3;
  GruLayer<Scalar> gru;
};

template <typename Scalar>
struct Decoder {
  GruLayer<Scalar> gru;
  ConvLayer<Scalar> up1, up2, up3;
  ConvLayer<Scalar> smooth;
  Index channels() const { return smooth.bias.value.rows(); }
};

template <typename Scalar>
struct Discriminator {
  AffineLayer<Scalar> hidden1, hidden2, hidden3, out;
};

/// Two domain autoencoders sharing a latent classifier and a latent discriminator.
template <typename Scalar>
struct Translater {
  ModelConfig config;
  std::uint64_t seed = 0;
  Encoder<Scalar> enc_inertia, enc_trajectory;
  Decoder<Scalar> dec_inertia, dec_trajectory;
  AffineLayer<Scalar> classifier;
  Discriminator<Scalar> disc;

  Encoder<Scalar>& encoder(Domain d) { return d == Domain::inertia ? enc_inertia : enc_trajectory; }
  const Encoder<Scalar>& encoder(Domain d) const { return d == Domain::inertia ? enc_inertia : enc_trajectory; }
  Decoder<Scalar>& decoder(Domain d) { return d == Domain::inertia ? dec_inertia : dec_trajectory; }
  const Decoder<Scalar>& decoder(Domain d) const { return d == Domain::inertia ? dec_inertia : dec_trajectory; }

  std::vector<ParamBlock<Scalar>*> encoder_blocks(Domain d) {
    std::vector<ParamBlock<Scalar>*> out;
    Encoder<Scalar>& e = encoder(d);
    append_blocks(out, e.conv1);
    append_blocks(out, e.conv2);
    append_blocks(out, e.conv3);
    append_blocks(out, e.gru);
    return out;
  }
  std::vector<ParamBlock<Scalar>*> decoder_blocks(Domain d) {
    std::vector<ParamBlock<Scalar>*> out;
    Decoder<Scalar>& dd = decoder(d);
    append_blocks(out, dd.gru);
    append_blocks(out, dd.up1);
    append_blocks(out, dd.up2);
    append_blocks(out, dd.up3);
    append_blocks(out, dd.smooth);
    return out;
  }
  std::vector<ParamBlock<Scalar>*> classifier_blocks() {
    std::vector<ParamBlock<Scalar>*> out;
    append_blocks(out, classifier);
    return out;
  }
  std::vector<ParamBlock<Scalar>*> disc_blocks() {
    std::vector<ParamBlock<Scalar>*> out;
    append_blocks(out, disc.hidden1);
    append_blocks(out, disc.hidden2);
    append_blocks(out, disc.hidden3);
    append_blocks(out, disc.out);
    return out;
  }
  /// Every block in a fixed order: e_I, d_I, e_T, d_T, C_f, D_f.
  std::vector<ParamBlock<Scalar>*> all_blocks() {
    std::vector<ParamBlock<Scalar>*> out;
    for (auto part : {encoder_blocks(Domain::inertia), decoder_blocks(Domain::inertia),
                      encoder_blocks(Domain::trajectory), decoder_blocks(Domain::trajectory), classifier_blocks(),
                      disc_blocks()}) {
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  std::vector<const ParamBlock<Scalar>*> all_blocks() const {
    auto blocks = const_cast<Translater*>(this)->all_blocks();
    return {blocks.begin(), blocks.end()};
  }

  Index parameter_count() const {
    Index n = 0;
    for (const auto* b : all_blocks()) n += b->size();
    return n;
  }
};

namespace detail {

template <typename Scalar>
Encoder<Scalar> make_encoder(const std::string& prefix, Index channels, const ModelConfig& c, std::mt19937_64& rng) {
  return {make_conv<Scalar>(prefix + ".conv1", channels, c.conv1_width, {7, 2, 3}, rng),
          make_conv<Scalar>(prefix + ".conv2", c.conv1_width, c.conv2_width, {5, 2, 2}, rng),
          make_conv<Scalar>(prefix + ".conv3", c.conv2_width, c.conv3_width, {3, 2, 1}, rng),
          make_gru<Scalar>(prefix + ".gru", c.conv3_width, kLatentDim, rng)};
}

template <typename Scalar>
Decoder<Scalar> make_decoder(const std::string& prefix, Index channels, const ModelConfig& c, std::mt19937_64& rng) {
  return {make_gru<Scalar>(prefix + ".gru", kLatentDim, kLatentDim, rng),
          make_conv_transpose<Scalar>(prefix + ".up1", kLatentDim, c.conv3_width, {4, 2, 1}, rng),
          make_conv_transpose<Scalar>(prefix + ".up2", c.conv3_width, c.conv1_width, {4, 2, 1}, rng),
          make_conv_transpose<Scalar>(prefix + ".up3", c.conv1_width, channels, {4, 2, 1}, rng),
          make_conv<Scalar>(prefix + ".smooth", channels, channels, {5, 1, 2}, rng)};
}

template <typename Scalar>
std::vector<Index> scaled(std::span<const Index> v, Index factor) {
  std::vector<Index> out(v.begin(), v.end());
  for (Index& x : out) x *= factor;
  return out;
}

}  // namespace detail

template <typename Scalar>
Translater<Scalar> init_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.class_count < 2) throw ValidationError("init_model: class_count must be >= 2");
  std::mt19937_64 rng(seed);
  Translater<Scalar> m;
  m.config = config;
  m.seed = seed;
  m.enc_inertia = detail::make_encoder<Scalar>("enc_I", channels_for(Domain::inertia), config, rng);
  m.dec_inertia = detail::make_decoder<Scalar>("dec_I", channels_for(Domain::inertia), config, rng);
  m.enc_trajectory = detail::make_encoder<Scalar>("enc_T", channels_for(Domain::trajectory), config, rng);
  m.dec_trajectory = detail::make_decoder<Scalar>("dec_T", channels_for(Domain::trajectory), config, rng);
  m.classifier = make_affine<Scalar>("cls", kLatentDim, config.class_count, rng);
  m.disc = {make_affine<Scalar>("disc.hidden1", kLatentDim, config.disc_hidden, rng),
            make_affine<Scalar>("disc.hidden2", config.disc_hidden, config.disc_hidden, rng),
            make_affine<Scalar>("disc.hidden3", config.disc_hidden, config.disc_hidden, rng),
            make_affine<Scalar>("disc.out", config.disc_hidden, config.disc_outputs, rng)};
  return m;
}

// ---------------------------------------------------------------------------
// Batched forward passes on a tape.

/// Latents (64, batch) taken from the GRU state at each sample's last valid
/// feature step. Feature maps are masked after every convolution so the result
/// does not depend on trailing padding.
template <typename Scalar>
Var encode(Tape<Scalar>& tape, const Encoder<Scalar>& enc, Var x, std::span<const Index> lengths) {
  std::vector<Index> len(lengths.begin(), lengths.end());
  Var h = x;
  for (const ConvLayer<Scalar>* layer : {&enc.conv1, &enc.conv2, &enc.conv3}) {
    for (Index& l : len) l = (l + 1) / 2;
    h = mask_time(tape, activate(tape, apply_conv(tape, *layer, h), Activation::leaky_relu), std::span<const Index>(len));
  }
  const Index batch = tape.value(x).batch;
  const Var h0 = tape.constant(Tensor3<Scalar>(enc.gru.hidden(), batch, 1));
  const Var seq = apply_gru(tape, enc.gru, h, h0).sequence;
  std::vector<Index> last(len.size());
  for (std::size_t i = 0; i < len.size(); ++i) last[i] = std::max<Index>(len[i], 1) - 1;
  return gather_time(tape, seq, std::span<const Index>(last));
}

/// Decodes latents (64, batch) into sequences of length 8 * steps[b]; the
/// output tensor spans 8 * max(steps) with everything past a sample's own
/// length zeroed.
template <typename Scalar>
Var decode(Tape<Scalar>& tape, const Decoder<Scalar>& dec, Var latent, std::span<const Index> steps) {
  Index longest = 0;
  for (Index s : steps) {
    if (s < 1) throw ValidationError("decode: step count must be >= 1");
    longest = std::max(longest, s);
  }
  const Index batch = tape.value(latent).batch;
  const Var h0 = tape.constant(Tensor3<Scalar>(dec.gru.hidden(), batch, 1));
  Var h = apply_gru(tape, dec.gru, repeat_time(tape, latent, longest), h0).sequence;
  h = mask_time(tape, h, steps);
  h = activate(tape, apply_conv_transpose(tape, dec.up1, h), Activation::leaky_relu);
  h = mask_time(tape, h, std::span<const Index>(detail::scaled<Scalar>(steps, 2)));
  h = activate(tape, apply_conv_transpose(tape, dec.up2, h), Activation::leaky_relu);
  h = mask_time(tape, h, std::span<const Index>(detail::scaled<Scalar>(steps, 4)));
  h = apply_conv_transpose(tape, dec.up3, h);
  const auto full = detail::scaled<Scalar>(steps, 8);
  h = mask_time(tape, h, std::span<const Index>(full));
  return mask_time(tape, apply_conv(tape, dec.smooth, h), std::span<const Index>(full));
}

template <typename Scalar>
Var classifier_logits(Tape<Scalar>& tape, const AffineLayer<Scalar>& cls, Var latent) {
  return apply_affine(tape, cls, latent);
}

/// 64 linear scores per latent.
template <typename Scalar>
Var discriminate(Tape<Scalar>& tape, const Discriminator<Scalar>& d, Var latent) {
  Var h = apply_affine(tape, d.hidden1, latent, Activation::leaky_relu);
  h = apply_affine(tape, d.hidden2, h, Activation::leaky_relu);
  h = apply_affine(tape, d.hidden3, h, Activation::leaky_relu);
  return apply_affine(tape, d.out, h);
}

// ---------------------------------------------------------------------------
// Sample-level inference. These are read-only over the parameters.

namespace detail {

template <typename Scalar>
void check_domain_channels(const Sample& s) {
  if (s.channels() != channels_for(s.domain)) {
    throw ValidationError("sample " + s.id + ": expected " + std::to_string(channels_for(s.domain)) + " channels, got " +
                          std::to_string(s.channels()));
  }
  if (s.length() < 1) throw ValidationError("sample " + s.id + ": empty sequence");
}

template <typename Scalar>
Matrix<double> to_double(const Matrix<Scalar>& m) {
  return m.template cast<double>();
}

}  // namespace detail

/// Latents for a batch of same-domain samples, one column per sample.
template <typename Scalar>
Matrix<Scalar> encode_samples(const Translater<Scalar>& model, std::span<const Sample* const> samples) {
  if (samples.empty()) return Matrix<Scalar>(kLatentDim, 0);
  for (const Sample* s : samples) detail::check_domain_channels<Scalar>(*s);
  const Batch<Scalar> batch = pad_and_mask<Scalar>(samples);
  Tape<Scalar> tape = Tape<Scalar>::inference();
  const Var x = tape.constant(batch.values);
  return tape.data(encode(tape, model.encoder(batch.domain), x, std::span<const Index>(batch.lengths)));
}

template <typename Scalar>
LatentVector<Scalar> encode(const Translater<Scalar>& model, const Sample& sample) {
  const Sample* p = &sample;
  return encode_samples(model, std::span<const Sample* const>(&p, 1)).col(0);
}

/// Decodes each latent column with its own step count into `domain`.
template <typename Scalar>
std::vector<Matrix<Scalar>> decode_latents(const Translater<Scalar>& model, const Matrix<Scalar>& latents, Domain domain,
                                           std::span<const Index> steps) {
  if (latents.rows() != kLatentDim) throw ValidationError("decode: latent dimension must be 64");
  if (static_cast<Index>(steps.size()) != latents.cols()) throw ValidationError("decode: one step count per latent");
  std::vector<Matrix<Scalar>> out;
  if (latents.cols() == 0) return out;
  Tape<Scalar> tape = Tape<Scalar>::inference();
  const Var z = tape.constant(Tensor3<Scalar>::flat(latents));
  const Tensor3<Scalar>& y = tape.value(decode(tape, model.decoder(domain), z, steps));
  for (Index b = 0; b < y.batch; ++b) out.push_back(y.sample(b).leftCols(decoder_output_length(steps[b])));
  return out;
}

template <typename Scalar>
Matrix<Scalar> decode(const Translater<Scalar>& model, const LatentVector<Scalar>& latent, Domain domain, Index steps) {
  if (steps < 1) throw ValidationError("decode: step count must be >= 1");
  const Matrix<Scalar> z = latent;
  return decode_latents(model, z, domain, std::span<const Index>(&steps, 1)).front();
}

/// Autoencodes each sample; output length is 8 * encoder_feature_length(L).
template <typename Scalar>
std::vector<Matrix<double>> reconstruct_samples(const Translater<Scalar>& model,
                                                std::span<const Sample* const> samples) {
  std::vector<Matrix<double>> out;
  if (samples.empty()) return out;
  const Matrix<Scalar> z = encode_samples(model, samples);
  std::vector<Index> steps;
  for (const Sample* s : samples) steps.push_back(encoder_feature_length(s->length()));
  for (auto& m : decode_latents(model, z, samples.front()->domain, std::span<const Index>(steps)))
    out.push_back(detail::to_double(m));
  return out;
}

template <typename Scalar>
Matrix<double> reconstruct(const Translater<Scalar>& model, const Sample& sample) {
  const Sample* p = &sample;
  return reconstruct_samples(model, std::span<const Sample* const>(&p, 1)).front();
}

/// Encodes with the source domain's encoder and decodes with the other
/// domain's decoder. `target_rate_hz` is used by the rate-scaled policy only.
template <typename Scalar>
std::vector<Matrix<double>> translate_samples(const Translater<Scalar>& model, std::span<const Sample* const> samples,
                                              DurationPolicy policy, double target_rate_hz) {
  std::vector<Matrix<double>> out;
  if (samples.empty()) return out;
  const Domain source = samples.front()->domain;
  const Matrix<Scalar> z = encode_samples(model, samples);
  std::vector<Index> steps;
  for (const Sample* s : samples) steps.push_back(translation_steps(s->length(), s->rate_hz, target_rate_hz, policy));
  for (auto& m : decode_latents(model, z, other(source), std::span<const Index>(steps)))
    out.push_back(detail::to_double(m));
  return out;
}

template <typename Scalar>
Matrix<double> translate(const Translater<Scalar>& model, const Sample& sample, DurationPolicy policy,
                         double target_rate_hz) {
  const Sample* p = &sample;
  return translate_samples(model, std::span<const Sample* const>(&p, 1), policy, target_rate_hz).front();
}

/// Softmax class probabilities for one latent.
template <typename Scalar>
Vector<Scalar> classify_latent(const Translater<Scalar>& model, const LatentVector<Scalar>& latent) {
  Tape<Scalar> tape = Tape<Scalar>::inference();
  const Var z = tape.constant(Tensor3<Scalar>::flat(Matrix<Scalar>(latent)));
  Vector<Scalar> logits = tape.data(classifier_logits(tape, model.classifier, z)).col(0);
  const Scalar m = logits.maxCoeff();
  Vector<Scalar> p = (logits.array() - m).exp().matrix();
  return p / p.sum();
}

template <typename Scalar>
Vector<Scalar> discriminate_latent(const Translater<Scalar>& model, const LatentVector<Scalar>& latent) {
  Tape<Scalar> tape = Tape<Scalar>::inference();
  const Var z = tape.constant(Tensor3<Scalar>::flat(Matrix<Scalar>(latent)));
  return tape.data(discriminate(tape, model.disc, z)).col(0);
}

}  // namespace awt
