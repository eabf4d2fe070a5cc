#include "awt/model/translater.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace awt;
using awt::test::random_sample;

namespace {

ModelConfig five_classes() {
  ModelConfig c;
  c.class_count = 5;
  return c;
}

template <typename Scalar>
void zero_all(Translater<Scalar>& m) {
  for (auto* b : m.all_blocks()) b->value.setZero();
}

}  // namespace

TEST_CASE("parameter count depends on the configuration only") {
  const auto a = init_model<double>(five_classes(), 1);
  const auto b = init_model<double>(five_classes(), 99);
  CHECK(a.parameter_count() == b.parameter_count());
  CHECK(a.parameter_count() > 0);
  ModelConfig more = five_classes();
  more.class_count = 20;
  CHECK(init_model<double>(more, 1).parameter_count() - a.parameter_count() == 15 * (kLatentDim + 1));
  CHECK_THROWS_AS(init_model<double>(ModelConfig{}, 1), ValidationError);
}

TEST_CASE("initialization is deterministic in the seed") {
  const auto a = init_model<float>(five_classes(), 3);
  const auto b = init_model<float>(five_classes(), 3);
  const auto c = init_model<float>(five_classes(), 4);
  const auto ba = a.all_blocks(), bb = b.all_blocks(), bc = c.all_blocks();
  bool differs = false;
  for (std::size_t i = 0; i < ba.size(); ++i) {
    CHECK(ba[i]->name == bb[i]->name);
    CHECK(ba[i]->value == bb[i]->value);
    differs = differs || ba[i]->value != bc[i]->value;
  }
  CHECK(differs);
}

TEST_CASE("encoder feature length and decoder output length") {
  CHECK(encoder_feature_length(120) == 15);
  CHECK(encoder_feature_length(16) == 2);
  CHECK(encoder_feature_length(1) == 1);
  CHECK(encoder_feature_length(9) == 2);
  CHECK_THROWS_AS(encoder_feature_length(0), ValidationError);
  CHECK(decoder_output_length(50) == 400);
}

TEST_CASE("translation steps under both duration policies") {
  CHECK(translation_steps(120, 60, 200, DurationPolicy::rate_scaled) == 50);
  CHECK(translation_steps(400, 200, 60, DurationPolicy::rate_scaled) == 15);
  CHECK(translation_steps(120, 60, 200, DurationPolicy::source_length) == 15);
  CHECK(translation_steps(3, 60, 200, DurationPolicy::source_length) == 1);
}

TEST_CASE("encode output shape and padding invariance") {
  std::mt19937_64 rng(11);
  const auto model = init_model<double>(five_classes(), 2);
  const Sample shortest = random_sample(Domain::inertia, 37, rng);
  const Sample longer = random_sample(Domain::inertia, 101, rng);
  const LatentVector<double> alone = encode(model, shortest);
  const Sample* both[] = {&shortest, &longer};
  const Matrix<double> batched = encode_samples(model, std::span<const Sample* const>(both));
  CHECK(batched.rows() == kLatentDim);
  CHECK(batched.cols() == 2);
  CHECK(test::max_abs(batched.col(0) - alone) < 1e-6);

  const auto single = init_model<float>(five_classes(), 2);
  const Matrix<float> zf = encode_samples(single, std::span<const Sample* const>(both));
  CHECK((zf.col(0) - encode(single, shortest)).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("translate and reconstruct lengths and channel counts") {
  std::mt19937_64 rng(12);
  const auto model = init_model<double>(five_classes(), 2);
  const Sample in = random_sample(Domain::inertia, 120, rng);
  const Matrix<double> t = translate(model, in, DurationPolicy::rate_scaled, 200);
  CHECK(t.rows() == 3);
  CHECK(t.cols() == 400);
  CHECK(translate(model, in, DurationPolicy::source_length, 200).cols() == 120);
  CHECK(reconstruct(model, in).rows() == 6);
  CHECK(reconstruct(model, in).cols() == 8 * encoder_feature_length(120));

  const Sample tr = random_sample(Domain::trajectory, 400, rng);
  const Matrix<double> back = translate(model, tr, DurationPolicy::rate_scaled, 60);
  CHECK(back.rows() == 6);
  CHECK(back.cols() == 120);

  Sample wrong = in;
  wrong.values = Matrix<double>::Zero(4, 50);
  CHECK_THROWS_AS(encode(model, wrong), ValidationError);
}

TEST_CASE("decode respects per-sample step counts") {
  std::mt19937_64 rng(13);
  const auto model = init_model<double>(five_classes(), 5);
  const Matrix<double> z = test::random_matrix(kLatentDim, 2, rng);
  const Index steps[] = {3, 7};
  const auto out = decode_latents(model, z, Domain::trajectory, std::span<const Index>(steps));
  REQUIRE(out.size() == 2);
  CHECK(out[0].cols() == 24);
  CHECK(out[1].cols() == 56);
  const LatentVector<double> z0 = z.col(0);
  CHECK(test::max_abs(decode(model, z0, Domain::trajectory, 3) - out[0]) < 1e-9);
  CHECK_THROWS_AS(decode(model, z0, Domain::trajectory, 0), ValidationError);
}

TEST_CASE("classifier output is a distribution") {
  std::mt19937_64 rng(14);
  auto model = init_model<double>(five_classes(), 6);
  const LatentVector<double> z = test::random_matrix(kLatentDim, 1, rng);
  const Vector<double> p = classify_latent(model, z);
  CHECK(p.size() == 5);
  CHECK(std::abs(p.sum() - 1) < 1e-12);
  CHECK(p.minCoeff() > 0);
  CHECK(discriminate_latent(model, z).size() == 64);

  zero_all(model);
  const Vector<double> u = classify_latent(model, z);
  CHECK(test::max_abs(u - Vector<double>::Constant(5, 0.2)) < 1e-15);
  CHECK(discriminate_latent(model, z).isZero(0));
}

TEST_CASE("inference is read-only over the parameters") {
  std::mt19937_64 rng(15);
  const auto model = init_model<float>(five_classes(), 7);
  const auto before = model.all_blocks();
  std::vector<Matrix<float>> values;
  for (const auto* b : before) values.push_back(b->value);
  const Sample s = random_sample(Domain::trajectory, 64, rng);
  const Matrix<double> first = translate(model, s, DurationPolicy::rate_scaled, 60);
  const Matrix<double> second = translate(model, s, DurationPolicy::rate_scaled, 60);
  CHECK(first == second);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i]->value == values[i]);
}
