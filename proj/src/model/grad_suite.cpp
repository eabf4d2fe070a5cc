#include "awt/model/grad_suite.hpp"

#include "awt/model/translater.hpp"

#include <chrono>

namespace awt {

namespace {

using T = Tape<double>;
using State = GradCase::State;

// Smooth scalar reduction for ops whose output is not already a loss.
Var reduce(T& t, Var y) { return squared_error_to(t, y, 0.25); }

// One column per sample.
Var flat(T& t, const ParamBlock<double>& b) { return t.parameter(b, b.value.cols(), 1); }

GradCase conv_case() {
  return {"conv1d", [](std::mt19937_64& rng) {
            State s;
            auto& x = s.add("x", 3, 2 * 11, rng);
            auto& w = s.add("w", 4, 3 * 5, rng, 0.5);
            auto& b = s.add("b", 4, 1, rng);
            s.loss = [&x, &w, &b](T& t) {
              return reduce(t, conv1d(t, t.parameter(x, 2, 11), t.parameter(w), t.parameter(b), {5, 2, 2}));
            };
            return s;
          }};
}

GradCase conv_transpose_case() {
  return {"conv1d_transpose", [](std::mt19937_64& rng) {
            State s;
            auto& x = s.add("x", 4, 2 * 6, rng);
            auto& w = s.add("w", 4, 3 * 4, rng, 0.5);
            auto& b = s.add("b", 3, 1, rng);
            s.loss = [&x, &w, &b](T& t) {
              return reduce(t, conv1d_transpose(t, t.parameter(x, 2, 6), t.parameter(w), t.parameter(b), {4, 2, 1}));
            };
            return s;
          }};
}

GradCase gru_case() {
  return {"gru_forward", [](std::mt19937_64& rng) {
            State s;
            auto& x = s.add("x", 3, 2 * 7, rng);
            auto& wi = s.add("w_input", 12, 3, rng, 0.7);
            auto& wh = s.add("w_hidden", 12, 4, rng, 0.7);
            auto& b = s.add("bias", 12, 1, rng, 0.5);
            auto& h0 = s.add("h0", 4, 2, rng, 0.5);
            s.loss = [&x, &wi, &wh, &b, &h0](T& t) {
              const GruOutput out = gru_forward(t, t.parameter(x, 2, 7), t.parameter(wi), t.parameter(wh),
                                                t.parameter(b), flat(t, h0));
              return add(t, reduce(t, out.sequence), reduce(t, out.last));
            };
            return s;
          }};
}

GradCase affine_case(Activation act, const std::string& name) {
  return {"affine_act/" + name, [act](std::mt19937_64& rng) {
            State s;
            auto& x = s.add("x", 4, 2, rng);
            auto& w = s.add("w", 3, 4, rng);
            auto& b = s.add("b", 3, 1, rng);
            s.loss = [&x, &w, &b, act](T& t) {
              return reduce(t, affine_act(t, flat(t, x), t.parameter(w), t.parameter(b), act));
            };
            return s;
          }};
}

GradCase softmax_case() {
  return {"softmax_xent", [](std::mt19937_64& rng) {
            State s;
            auto& logits = s.add("logits", 4, 2, rng, 2);
            s.loss = [&logits](T& t) {
              static constexpr int labels[] = {1, 3};
              return softmax_xent(t, flat(t, logits), std::span<const int>(labels));
            };
            return s;
          }};
}

GradCase l1_case() {
  return {"l1_loss", [](std::mt19937_64& rng) {
            State s;
            auto& a = s.add("a", 3, 2 * 9, rng);
            auto& b = s.add("b", 3, 2 * 9, rng);
            s.loss = [&a, &b](T& t) {
              static constexpr Index lengths[] = {9, 5};
              return l1_loss(t, t.parameter(a, 2, 9), t.parameter(b, 2, 9), std::span<const Index>(lengths));
            };
            return s;
          }};
}

GradCase sequence_ops_case() {
  return {"mask/gather/repeat/mean/concat", [](std::mt19937_64& rng) {
            State s;
            auto& x = s.add("x", 3, 2 * 8, rng);
            auto& y = s.add("y", 2, 2 * 8, rng);
            auto& z = s.add("z", 4, 2, rng);
            s.loss = [&x, &y, &z](T& t) {
              static constexpr Index lengths[] = {8, 5};
              static constexpr Index steps[] = {6, 2};
              const std::span<const Index> len(lengths);
              const Var xy = concat_channels(t, t.parameter(x, 2, 8), t.parameter(y, 2, 8));
              const Var masked = mask_time(t, xy, len);
              Var loss = reduce(t, masked_mean_time(t, masked, len));
              loss = add(t, loss, reduce(t, gather_time(t, masked, std::span<const Index>(steps))));
              return add(t, loss, reduce(t, activate(t, repeat_time(t, flat(t, z), 3), Activation::tanh)));
            };
            return s;
          }};
}

// Discriminator scores on latents of both domains through the LSGAN losses.
GradCase lsgan_case(bool generator) {
  return {generator ? "lsgan/encoder_side" : "lsgan/discriminator_side", [generator](std::mt19937_64& rng) {
            State s;
            auto& zi = s.add("z_inertia", 6, 2, rng);
            auto& zt = s.add("z_trajectory", 6, 2, rng);
            std::vector<ParamBlock<double>*> w;
            for (auto [i, o] : {std::pair<Index, Index>{6, 8}, {8, 8}, {8, 8}, {8, 5}}) {
              w.push_back(&s.add("w", o, i, rng));
              w.push_back(&s.add("b", o, 1, rng));
            }
            s.loss = [&zi, &zt, w, generator](T& t) {
              auto scores = [&](Var z) {
                for (std::size_t k = 0; k < w.size(); k += 2) {
                  const Activation act = k + 2 < w.size() ? Activation::leaky_relu : Activation::linear;
                  z = affine_act(t, z, t.parameter(*w[k]), t.parameter(*w[k + 1]), act);
                }
                return z;
              };
              const Var si = scores(flat(t, zi));
              const Var st = scores(flat(t, zt));
              return generator ? lsgan_gen_loss(t, si, st) : lsgan_disc_loss(t, si, st);
            };
            return s;
          }};
}

ModelConfig narrow_config() {
  ModelConfig mc;
  mc.class_count = 2;
  mc.conv1_width = 4;
  mc.conv2_width = 4;
  mc.conv3_width = 4;
  return mc;
}

// Full encoder on a padded batch, L1 of the latents against a random target.
GradCase encoder_case() {
  return {"encoder+l1", [](std::mt19937_64& rng) {
            auto enc = std::make_shared<Encoder<double>>(detail::make_encoder<double>("enc", 3, narrow_config(), rng));
            State s;
            auto& x = s.add("x", 3, 2 * 12, rng);
            auto& target = s.add("target", kLatentDim, 2, rng, 0.1);
            append_blocks(s.layer_blocks, enc->conv1);
            append_blocks(s.layer_blocks, enc->conv2);
            append_blocks(s.layer_blocks, enc->conv3);
            append_blocks(s.layer_blocks, enc->gru);
            s.loss = [&x, &target, e = enc.get()](T& t) {
              static constexpr Index lengths[] = {12, 9};
              static constexpr Index ones[] = {1, 1};
              const Var z = encode(t, *e, t.parameter(x, 2, 12), std::span<const Index>(lengths));
              return l1_loss(t, z, flat(t, target), std::span<const Index>(ones));
            };
            s.layers = std::move(enc);
            return s;
          }};
}

// Full decoder from free latents, L1 against a random target of the decoded length.
GradCase decoder_case() {
  return {"decoder+l1", [](std::mt19937_64& rng) {
            auto dec = std::make_shared<Decoder<double>>(detail::make_decoder<double>("dec", 3, narrow_config(), rng));
            State s;
            auto& z = s.add("z", kLatentDim, 2, rng, 0.5);
            auto& target = s.add("target", 3, 2 * 16, rng, 0.1);
            append_blocks(s.layer_blocks, dec->gru);
            append_blocks(s.layer_blocks, dec->up1);
            append_blocks(s.layer_blocks, dec->up2);
            append_blocks(s.layer_blocks, dec->up3);
            append_blocks(s.layer_blocks, dec->smooth);
            s.loss = [&z, &target, d = dec.get()](T& t) {
              static constexpr Index steps[] = {2, 1};
              static constexpr Index lengths[] = {16, 8};
              const Var y = decode(t, *d, flat(t, z), std::span<const Index>(steps));
              return l1_loss(t, y, t.parameter(target, 2, 16), std::span<const Index>(lengths));
            };
            s.layers = std::move(dec);
            return s;
          }};
}

}  // namespace

ParamBlock<double>& GradCase::State::add(const std::string& name, Index rows, Index cols, std::mt19937_64& rng,
                                         double scale) {
  auto block = std::make_unique<ParamBlock<double>>(name, rows, cols);
  std::normal_distribution<double> dist(0.0, scale);
  for (Index i = 0; i < block->value.size(); ++i) block->value.data()[i] = dist(rng);
  blocks.push_back(std::move(block));
  return *blocks.back();
}

std::vector<ParamBlock<double>*> GradCase::State::pointers() const {
  std::vector<ParamBlock<double>*> out;
  for (const auto& b : blocks) out.push_back(b.get());
  out.insert(out.end(), layer_blocks.begin(), layer_blocks.end());
  return out;
}

bool GradSuiteResult::passed() const {
  for (const GradCaseResult& c : cases)
    if (!c.passed) return false;
  return !cases.empty();
}

std::vector<GradCase> default_grad_cases() {
  return {conv_case(),
          conv_transpose_case(),
          gru_case(),
          affine_case(Activation::linear, "linear"),
          affine_case(Activation::leaky_relu, "leaky_relu"),
          affine_case(Activation::tanh, "tanh"),
          affine_case(Activation::sigmoid, "sigmoid"),
          softmax_case(),
          l1_case(),
          sequence_ops_case(),
          lsgan_case(false),
          lsgan_case(true),
          encoder_case(),
          decoder_case()};
}

GradSuiteResult run_gradient_suite(const std::vector<GradCase>& cases, std::uint64_t seed, double tolerance) {
  const auto start = std::chrono::steady_clock::now();
  GradSuiteResult out;
  std::uint64_t k = 0;
  for (const GradCase& c : cases) {
    std::mt19937_64 rng(seed * 1000003 + k++);
    State state = c.setup(rng);
    const GradCheckResult r = grad_check<double>(state.loss, state.pointers(), seed, 1e-4, 256, tolerance);
    out.cases.push_back({c.name, r.max_rel_error, r.coordinates, r.refined, r.max_rel_error < tolerance});
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

GradSuiteResult run_gradient_suite(std::uint64_t seed) { return run_gradient_suite(default_grad_cases(), seed); }

}  // namespace awt
