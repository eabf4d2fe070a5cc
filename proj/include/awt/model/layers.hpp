#pragma once

#include "awt/numerics/ops.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace awt {

template <typename Scalar>
struct ConvLayer {
  ParamBlock<Scalar> weight;
  ParamBlock<Scalar> bias;
  ConvGeometry geometry;
};

template <typename Scalar>
struct GruLayer {
  ParamBlock<Scalar> w_input;
  ParamBlock<Scalar> w_hidden;
  ParamBlock<Scalar> bias;

  Index hidden() const { return w_hidden.value.cols(); }
};

template <typename Scalar>
struct AffineLayer {
  ParamBlock<Scalar> weight;
  ParamBlock<Scalar> bias;
};

namespace detail {

// Uniform in +-sqrt(1 / fan_in).
template <typename Scalar>
void init_uniform(ParamBlock<Scalar>& p, Index fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = Scalar(dist(rng));
}

}  // namespace detail

template <typename Scalar>
ConvLayer<Scalar> make_conv(const std::string& name, Index c_in, Index c_out, ConvGeometry g, std::mt19937_64& rng) {
  ConvLayer<Scalar> l{ParamBlock<Scalar>(name + ".weight", c_out, c_in * g.kernel),
                      ParamBlock<Scalar>(name + ".bias", c_out, 1), g};
  detail::init_uniform(l.weight, c_in * g.kernel, rng);
  detail::init_uniform(l.bias, c_in * g.kernel, rng);
  return l;
}

template <typename Scalar>
ConvLayer<Scalar> make_conv_transpose(const std::string& name, Index c_in, Index c_out, ConvGeometry g,
                                      std::mt19937_64& rng) {
  ConvLayer<Scalar> l{ParamBlock<Scalar>(name + ".weight", c_in, c_out * g.kernel),
                      ParamBlock<Scalar>(name + ".bias", c_out, 1), g};
  detail::init_uniform(l.weight, c_in * g.kernel, rng);
  detail::init_uniform(l.bias, c_in * g.kernel, rng);
  return l;
}

template <typename Scalar>
GruLayer<Scalar> make_gru(const std::string& name, Index input, Index hidden, std::mt19937_64& rng) {
  GruLayer<Scalar> l{ParamBlock<Scalar>(name + ".w_input", 3 * hidden, input),
                     ParamBlock<Scalar>(name + ".w_hidden", 3 * hidden, hidden),
                     ParamBlock<Scalar>(name + ".bias", 3 * hidden, 1)};
  detail::init_uniform(l.w_input, input, rng);
  detail::init_uniform(l.w_hidden, hidden, rng);
  detail::init_uniform(l.bias, hidden, rng);
  return l;
}

template <typename Scalar>
AffineLayer<Scalar> make_affine(const std::string& name, Index in, Index out, std::mt19937_64& rng) {
  AffineLayer<Scalar> l{ParamBlock<Scalar>(name + ".weight", out, in), ParamBlock<Scalar>(name + ".bias", out, 1)};
  detail::init_uniform(l.weight, in, rng);
  detail::init_uniform(l.bias, in, rng);
  return l;
}

template <typename Scalar>
void append_blocks(std::vector<ParamBlock<Scalar>*>& out, ConvLayer<Scalar>& l) {
  out.insert(out.end(), {&l.weight, &l.bias});
}
template <typename Scalar>
void append_blocks(std::vector<ParamBlock<Scalar>*>& out, GruLayer<Scalar>& l) {
  out.insert(out.end(), {&l.w_input, &l.w_hidden, &l.bias});
}
template <typename Scalar>
void append_blocks(std::vector<ParamBlock<Scalar>*>& out, AffineLayer<Scalar>& l) {
  out.insert(out.end(), {&l.weight, &l.bias});
}

// Tape wrappers: bind a layer's blocks as parameter nodes and apply the op.

template <typename Scalar>
Var apply_conv(Tape<Scalar>& tape, const ConvLayer<Scalar>& l, Var x) {
  return conv1d(tape, x, tape.parameter(l.weight), tape.parameter(l.bias), l.geometry);
}

template <typename Scalar>
Var apply_conv_transpose(Tape<Scalar>& tape, const ConvLayer<Scalar>& l, Var x) {
  return conv1d_transpose(tape, x, tape.parameter(l.weight), tape.parameter(l.bias), l.geometry);
}

template <typename Scalar>
GruOutput apply_gru(Tape<Scalar>& tape, const GruLayer<Scalar>& l, Var x, Var h0) {
  return gru_forward(tape, x, tape.parameter(l.w_input), tape.parameter(l.w_hidden), tape.parameter(l.bias), h0);
}

template <typename Scalar>
Var apply_affine(Tape<Scalar>& tape, const AffineLayer<Scalar>& l, Var x, Activation act = Activation::linear) {
  return affine_act(tape, x, tape.parameter(l.weight), tape.parameter(l.bias), act);
}

}  // namespace awt
