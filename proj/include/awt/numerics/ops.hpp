#pragma once

#include "awt/numerics/tape.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace awt {

struct ConvGeometry {
  Index kernel = 1;
  Index stride = 1;
  Index pad = 0;
};

/// floor((L + 2 pad - kernel) / stride) + 1; throws when the window never fits.
inline Index conv_output_length(Index length, ConvGeometry g) {
  if (g.kernel < 1 || g.stride < 1 || g.pad < 0) throw std::invalid_argument("conv1d: bad geometry");
  if (length < 1) throw std::invalid_argument("conv1d: input length must be >= 1");
  if (length + 2 * g.pad < g.kernel) {
    throw std::invalid_argument("conv1d: input length " + std::to_string(length) +
                                " too short for kernel " + std::to_string(g.kernel));
  }
  return (length + 2 * g.pad - g.kernel) / g.stride + 1;
}

/// (L - 1) stride - 2 pad + kernel.
inline Index conv_transpose_output_length(Index length, ConvGeometry g) {
  if (g.kernel < 1 || g.stride < 1 || g.pad < 0) throw std::invalid_argument("conv1d_transpose: bad geometry");
  if (length < 1) throw std::invalid_argument("conv1d_transpose: input length must be >= 1");
  const Index out = (length - 1) * g.stride - 2 * g.pad + g.kernel;
  if (out < 1) throw std::invalid_argument("conv1d_transpose: non-positive output length");
  return out;
}

namespace detail {

// cols(j*C + c, b*out_len + o) = x(c, b*in_len + o*stride - pad + j), zero outside [0, in_len).
template <typename Scalar>
Matrix<Scalar> im2col(const Matrix<Scalar>& x, Index batch, Index in_len, Index out_len, ConvGeometry g) {
  const Index c = x.rows();
  Matrix<Scalar> cols(c * g.kernel, batch * out_len);
  for (Index b = 0; b < batch; ++b) {
    for (Index o = 0; o < out_len; ++o) {
      const Index col = b * out_len + o;
      for (Index j = 0; j < g.kernel; ++j) {
        const Index src = o * g.stride - g.pad + j;
        if (src < 0 || src >= in_len) {
          cols.block(j * c, col, c, 1).setZero();
        } else {
          cols.block(j * c, col, c, 1) = x.col(b * in_len + src);
        }
      }
    }
  }
  return cols;
}

// Adjoint of im2col: scatter-adds column blocks back into a (C, batch*in_len) map.
template <typename Scalar>
Matrix<Scalar> col2im(const Matrix<Scalar>& cols, Index channels, Index batch, Index in_len, Index out_len,
                      ConvGeometry g) {
  Matrix<Scalar> x = Matrix<Scalar>::Zero(channels, batch * in_len);
  for (Index b = 0; b < batch; ++b) {
    for (Index o = 0; o < out_len; ++o) {
      const Index col = b * out_len + o;
      for (Index j = 0; j < g.kernel; ++j) {
        const Index src = o * g.stride - g.pad + j;
        if (src < 0 || src >= in_len) continue;
        x.col(b * in_len + src) += cols.block(j * channels, col, channels, 1);
      }
    }
  }
  return x;
}

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  return ((-v.array()).exp() + Scalar(1)).inverse().matrix();
}

}  // namespace detail

/// Channel-mixing convolution along time.
/// weight: (C_out, C_in * kernel), column j*C_in + c multiplies input channel c at tap j.
/// bias: (C_out, 1).
template <typename Scalar>
Var conv1d(Tape<Scalar>& tape, Var x, Var weight, Var bias, ConvGeometry g) {
  const Tensor3<Scalar>& in = tape.value(x);
  const Matrix<Scalar>& w = tape.data(weight);
  const Index c_in = in.channels();
  if (w.cols() != c_in * g.kernel) throw std::invalid_argument("conv1d: weight shape does not match input channels");
  if (tape.data(bias).rows() != w.rows()) throw std::invalid_argument("conv1d: bias shape mismatch");
  const Index in_len = in.length;
  const Index out_len = conv_output_length(in_len, g);
  const Index batch = in.batch;

  Matrix<Scalar> cols = detail::im2col(in.data, batch, in_len, out_len, g);
  Matrix<Scalar> y = w * cols;
  y.colwise() += tape.data(bias).col(0);

  const bool rg = tape.requires_grad(x) || tape.requires_grad(weight) || tape.requires_grad(bias);
  return tape.push(Tensor3<Scalar>(std::move(y), batch, out_len), rg,
                   [=, cols = std::move(cols)](Tape<Scalar>& t, const Matrix<Scalar>& gy) {
                     if (t.requires_grad(weight)) t.accumulate(weight, gy * cols.transpose());
                     if (t.requires_grad(bias)) t.accumulate(bias, gy.rowwise().sum());
                     if (t.requires_grad(x)) {
                       Matrix<Scalar> gcols = t.data(weight).transpose() * gy;
                       t.accumulate(x, detail::col2im(gcols, c_in, batch, in_len, out_len, g));
                     }
                   });
}

/// Adjoint of conv1d with the same geometry (up-sampling for stride > 1).
/// weight: (C_in, C_out * kernel); bias: (C_out, 1).
template <typename Scalar>
Var conv1d_transpose(Tape<Scalar>& tape, Var x, Var weight, Var bias, ConvGeometry g) {
  const Tensor3<Scalar>& in = tape.value(x);
  const Matrix<Scalar>& w = tape.data(weight);
  if (w.rows() != in.channels() || w.cols() % g.kernel != 0) {
    throw std::invalid_argument("conv1d_transpose: weight shape does not match input channels");
  }
  const Index c_out = w.cols() / g.kernel;
  if (tape.data(bias).rows() != c_out) throw std::invalid_argument("conv1d_transpose: bias shape mismatch");
  const Index in_len = in.length;
  const Index out_len = conv_transpose_output_length(in_len, g);
  const Index batch = in.batch;

  Matrix<Scalar> cols = w.transpose() * in.data;
  Matrix<Scalar> y = detail::col2im(cols, c_out, batch, out_len, in_len, g);
  y.colwise() += tape.data(bias).col(0);

  const bool rg = tape.requires_grad(x) || tape.requires_grad(weight) || tape.requires_grad(bias);
  return tape.push(Tensor3<Scalar>(std::move(y), batch, out_len), rg,
                   [=](Tape<Scalar>& t, const Matrix<Scalar>& gy) {
                     if (t.requires_grad(bias)) t.accumulate(bias, gy.rowwise().sum());
                     if (!t.requires_grad(weight) && !t.requires_grad(x)) return;
                     Matrix<Scalar> gcols = detail::im2col(gy, batch, out_len, in_len, g);
                     if (t.requires_grad(weight)) t.accumulate(weight, t.data(x) * gcols.transpose());
                     if (t.requires_grad(x)) t.accumulate(x, t.data(weight) * gcols);
                   });
}

/// Single-layer GRU over every timestep.
///   z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
///   n = tanh(Wn x + Un (r*h) + bn), h' = (1 - z) h + z n.
/// w_input: (3H, C) rows [z; r; n]; w_hidden: (3H, H); bias: (3H, 1).
/// h0: (H, batch) flat tensor. Returns the (H, batch*T) sequence of hidden states.
template <typename Scalar>
Var gru(Tape<Scalar>& tape, Var x, Var w_input, Var w_hidden, Var bias, Var h0) {
  using Mat = Matrix<Scalar>;
  const Tensor3<Scalar>& in = tape.value(x);
  const Mat& wi = tape.data(w_input);
  const Mat& wh = tape.data(w_hidden);
  const Index hidden = wh.cols();
  const Index batch = in.batch;
  const Index steps = in.length;
  if (wi.rows() != 3 * hidden || wh.rows() != 3 * hidden || wi.cols() != in.channels()) {
    throw std::invalid_argument("gru: weight shape mismatch");
  }
  if (tape.data(bias).rows() != 3 * hidden) throw std::invalid_argument("gru: bias shape mismatch");
  const Tensor3<Scalar>& h_init = tape.value(h0);
  if (h_init.channels() != hidden || h_init.data.cols() != batch) {
    throw std::invalid_argument("gru: initial state must be (H, batch)");
  }

  // Time-major copies so each step is a contiguous column block.
  Mat xt(in.channels(), steps * batch);
  for (Index b = 0; b < batch; ++b)
    for (Index s = 0; s < steps; ++s) xt.col(s * batch + b) = in.data.col(b * steps + s);

  Mat pre = wi * xt;
  pre.colwise() += tape.data(bias).col(0);

  Mat h_prev(hidden, steps * batch), rh(hidden, steps * batch);
  Mat z(hidden, steps * batch), r(hidden, steps * batch), n(hidden, steps * batch);
  Mat out(hidden, batch * steps);
  Mat h = h_init.data;
  for (Index s = 0; s < steps; ++s) {
    const Index c0 = s * batch;
    Mat uh = wh.topRows(2 * hidden) * h;
    auto zs = z.middleCols(c0, batch);
    auto rs = r.middleCols(c0, batch);
    zs = detail::sigmoid(pre.block(0, c0, hidden, batch) + uh.topRows(hidden));
    rs = detail::sigmoid(pre.block(hidden, c0, hidden, batch) + uh.bottomRows(hidden));
    h_prev.middleCols(c0, batch) = h;
    rh.middleCols(c0, batch) = rs.cwiseProduct(h);
    n.middleCols(c0, batch) =
        (pre.block(2 * hidden, c0, hidden, batch) + wh.bottomRows(hidden) * rh.middleCols(c0, batch))
            .array()
            .tanh()
            .matrix();
    h = (Scalar(1) - zs.array()).matrix().cwiseProduct(h) + zs.cwiseProduct(n.middleCols(c0, batch));
    for (Index b = 0; b < batch; ++b) out.col(b * steps + s) = h.col(b);
  }

  const bool rg = tape.requires_grad(x) || tape.requires_grad(w_input) || tape.requires_grad(w_hidden) ||
                  tape.requires_grad(bias) || tape.requires_grad(h0);
  return tape.push(
      Tensor3<Scalar>(std::move(out), batch, steps), rg,
      [=, xt = std::move(xt), h_prev = std::move(h_prev), rh = std::move(rh), z = std::move(z),
       r = std::move(r), n = std::move(n)](Tape<Scalar>& t, const Mat& gy) {
        const Mat& wh_ = t.data(w_hidden);
        Mat gpre(3 * hidden, steps * batch);
        Mat dh = Mat::Zero(hidden, batch);
        for (Index s = steps; s-- > 0;) {
          const Index c0 = s * batch;
          for (Index b = 0; b < batch; ++b) dh.col(b) += gy.col(b * steps + s);
          const auto zs = z.middleCols(c0, batch).array();
          const auto rs = r.middleCols(c0, batch).array();
          const auto ns = n.middleCols(c0, batch).array();
          const auto hp = h_prev.middleCols(c0, batch).array();
          const auto dha = dh.array();

          Mat dpre_n = (dha * zs * (Scalar(1) - ns.square())).matrix();
          Mat drh = wh_.bottomRows(hidden).transpose() * dpre_n;
          Mat dh_prev = (dha * (Scalar(1) - zs) + drh.array() * rs).matrix();
          gpre.block(0, c0, hidden, batch) = (dha * (ns - hp) * zs * (Scalar(1) - zs)).matrix();
          gpre.block(hidden, c0, hidden, batch) = (drh.array() * hp * rs * (Scalar(1) - rs)).matrix();
          gpre.block(2 * hidden, c0, hidden, batch) = dpre_n;
          dh_prev.noalias() += wh_.topRows(2 * hidden).transpose() * gpre.block(0, c0, 2 * hidden, batch);
          dh = std::move(dh_prev);
        }
        if (t.requires_grad(h0)) t.accumulate(h0, dh);
        if (t.requires_grad(w_hidden)) {
          Mat& gwh = t.grad(w_hidden);
          gwh.topRows(2 * hidden).noalias() += gpre.topRows(2 * hidden) * h_prev.transpose();
          gwh.bottomRows(hidden).noalias() += gpre.bottomRows(hidden) * rh.transpose();
        }
        if (t.requires_grad(w_input)) t.accumulate(w_input, gpre * xt.transpose());
        if (t.requires_grad(bias)) t.accumulate(bias, gpre.rowwise().sum());
        if (t.requires_grad(x)) {
          Mat gxt = t.data(w_input).transpose() * gpre;
          Mat& gx = t.grad(x);
          for (Index b = 0; b < batch; ++b)
            for (Index s = 0; s < steps; ++s) gx.col(b * steps + s) += gxt.col(s * batch + b);
        }
      });
}

/// y = W x + b on a flat (n, batch) tensor. weight: (m, n); bias: (m, 1).
template <typename Scalar>
Var affine(Tape<Scalar>& tape, Var x, Var weight, Var bias) {
  const Tensor3<Scalar>& in = tape.value(x);
  const Matrix<Scalar>& w = tape.data(weight);
  if (in.length != 1) throw std::invalid_argument("affine: input must be flat (length 1)");
  if (w.cols() != in.channels()) {
    throw std::invalid_argument("affine: input width " + std::to_string(in.channels()) +
                                " does not match weight columns " + std::to_string(w.cols()));
  }
  if (tape.data(bias).rows() != w.rows()) throw std::invalid_argument("affine: bias shape mismatch");
  Matrix<Scalar> y = w * in.data;
  y.colwise() += tape.data(bias).col(0);
  const bool rg = tape.requires_grad(x) || tape.requires_grad(weight) || tape.requires_grad(bias);
  return tape.push(Tensor3<Scalar>::flat(std::move(y)), rg, [=](Tape<Scalar>& t, const Matrix<Scalar>& gy) {
    if (t.requires_grad(weight)) t.accumulate(weight, gy * t.data(x).transpose());
    if (t.requires_grad(bias)) t.accumulate(bias, gy.rowwise().sum());
    if (t.requires_grad(x)) t.accumulate(x, t.data(weight).transpose() * gy);
  });
}

enum class Activation { linear, leaky_relu, tanh, sigmoid };

inline constexpr double kLeakySlope = 0.2;

template <typename Scalar>
Scalar leaky_relu(Scalar v) {
  return v > Scalar(0) ? v : Scalar(kLeakySlope) * v;
}

/// Elementwise activation; linear returns `x` unchanged.
template <typename Scalar>
Var activate(Tape<Scalar>& tape, Var x, Activation act) {
  using Mat = Matrix<Scalar>;
  const Tensor3<Scalar>& in = tape.value(x);
  const Scalar slope(kLeakySlope);
  Mat y;
  switch (act) {
    case Activation::linear: return x;
    case Activation::leaky_relu:
      y = (in.data.array().max(Scalar(0)) + slope * in.data.array().min(Scalar(0))).matrix();
      break;
    case Activation::tanh: y = in.data.array().tanh().matrix(); break;
    case Activation::sigmoid: y = detail::sigmoid(in.data); break;
  }
  const Var self = tape.next_var();
  return tape.push(Tensor3<Scalar>(std::move(y), in.batch, in.length), tape.requires_grad(x),
                   [=](Tape<Scalar>& t, const Mat& gy) {
                     const auto ya = t.data(self).array();
                     const auto ga = gy.array();
                     switch (act) {
                       case Activation::leaky_relu:
                         t.accumulate(x, (t.data(x).array() > Scalar(0)).select(ga, slope * ga).matrix());
                         break;
                       case Activation::tanh: t.accumulate(x, (ga * (Scalar(1) - ya.square())).matrix()); break;
                       case Activation::sigmoid: t.accumulate(x, (ga * ya * (Scalar(1) - ya)).matrix()); break;
                       case Activation::linear: break;
                     }
                   });
}

template <typename Scalar>
Var affine_act(Tape<Scalar>& tape, Var x, Var weight, Var bias, Activation act) {
  return activate(tape, affine(tape, x, weight, bias), act);
}

/// Zeroes every timestep l >= lengths[b] of sample b.
template <typename Scalar>
Var mask_time(Tape<Scalar>& tape, Var x, std::span<const Index> lengths) {
  const Tensor3<Scalar>& in = tape.value(x);
  if (static_cast<Index>(lengths.size()) != in.batch) throw std::invalid_argument("mask_time: lengths size mismatch");
  std::vector<Index> lens(lengths.begin(), lengths.end());
  Matrix<Scalar> y = in.data;
  for (Index b = 0; b < in.batch; ++b) {
    const Index keep = std::clamp<Index>(lens[b], 0, in.length);
    y.middleCols(b * in.length + keep, in.length - keep).setZero();
  }
  const Index len = in.length;
  return tape.push(Tensor3<Scalar>(std::move(y), in.batch, in.length), tape.requires_grad(x),
                   [=, lens = std::move(lens)](Tape<Scalar>& t, const Matrix<Scalar>& gy) {
                     Matrix<Scalar>& gx = t.grad(x);
                     for (std::size_t b = 0; b < lens.size(); ++b) {
                       const Index keep = std::clamp<Index>(lens[b], 0, len);
                       gx.middleCols(static_cast<Index>(b) * len, keep) += gy.middleCols(static_cast<Index>(b) * len, keep);
                     }
                   });
}

/// Picks timestep steps[b] of each sample; result is flat (C, batch).
template <typename Scalar>
Var gather_time(Tape<Scalar>& tape, Var x, std::span<const Index> steps) {
  const Tensor3<Scalar>& in = tape.value(x);
  if (static_cast<Index>(steps.size()) != in.batch) throw std::invalid_argument("gather_time: steps size mismatch");
  std::vector<Index> st(steps.begin(), steps.end());
  Matrix<Scalar> y(in.channels(), in.batch);
  for (Index b = 0; b < in.batch; ++b) {
    if (st[b] < 0 || st[b] >= in.length) throw std::out_of_range("gather_time: step out of range");
    y.col(b) = in.data.col(b * in.length + st[b]);
  }
  const Index len = in.length;
  return tape.push(Tensor3<Scalar>::flat(std::move(y)), tape.requires_grad(x),
                   [=, st = std::move(st)](Tape<Scalar>& t, const Matrix<Scalar>& gy) {
                     Matrix<Scalar>& gx = t.grad(x);
                     for (std::size_t b = 0; b < st.size(); ++b) gx.col(static_cast<Index>(b) * len + st[b]) += gy.col(b);
                   });
}

/// Repeats a flat (C, batch) tensor `steps` times along time.
template <typename Scalar>
Var repeat_time(Tape<Scalar>& tape, Var x, Index steps) {
  const Tensor3<Scalar>& in = tape.value(x);
  if (in.length != 1) throw std::invalid_argument("repeat_time: input must be flat");
  if (steps < 1) throw std::invalid_argument("repeat_time: steps must be >= 1");
  const Index batch = in.batch;
  Matrix<Scalar> y(in.channels(), batch * steps);
  for (Index b = 0; b < batch; ++b) y.middleCols(b * steps, steps).colwise() = in.data.col(b);
  return tape.push(Tensor3<Scalar>(std::move(y), batch, steps), tape.requires_grad(x),
                   [=](Tape<Scalar>& t, const Matrix<Scalar>& gy) {
                     Matrix<Scalar>& gx = t.grad(x);
                     for (Index b = 0; b < batch; ++b) gx.col(b) += gy.middleCols(b * steps, steps).rowwise().sum();
                   });
}

/// Mean over the first lengths[b] timesteps of each sample; result is flat (C, batch).
template <typename Scalar>
Var masked_mean_time(Tape<Scalar>& tape, Var x, std::span<const Index> lengths) {
  const Tensor3<Scalar>& in = tape.value(x);
  if (static_cast<Index>(lengths.size()) != in.batch) throw std::invalid_argument("masked_mean_time: lengths size mismatch");
  std::vector<Index> lens(lengths.begin(), lengths.end());
  Matrix<Scalar> y(in.channels(), in.batch);
  for (Index b = 0; b < in.batch; ++b) {
    const Index keep = std::clamp<Index>(lens[b], 1, in.length);
    lens[b] = keep;
    y.col(b) = in.data.middleCols(b * in.length, keep).rowwise().sum() / Scalar(keep);
  }
  const Index len = in.length;
  return tape.push(Tensor3<Scalar>::flat(std::move(y)), tape.requires_grad(x),
                   [=, lens = std::move(lens)](Tape<Scalar>& t, const Matrix<Scalar>& gy) {
                     Matrix<Scalar>& gx = t.grad(x);
                     for (std::size_t b = 0; b < lens.size(); ++b) {
                       const Index keep = lens[b];
                       gx.middleCols(static_cast<Index>(b) * len, keep).colwise() += gy.col(b) / Scalar(keep);
                     }
                   });
}

/// Stacks two tensors of equal (batch, length) along channels.
template <typename Scalar>
Var concat_channels(Tape<Scalar>& tape, Var a, Var b) {
  const Tensor3<Scalar>& ta = tape.value(a);
  const Tensor3<Scalar>& tb = tape.value(b);
  if (ta.batch != tb.batch || ta.length != tb.length) throw std::invalid_argument("concat_channels: shape mismatch");
  const Index ca = ta.channels();
  Matrix<Scalar> y(ca + tb.channels(), ta.data.cols());
  y.topRows(ca) = ta.data;
  y.bottomRows(tb.channels()) = tb.data;
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.push(Tensor3<Scalar>(std::move(y), ta.batch, ta.length), rg, [=](Tape<Scalar>& t, const Matrix<Scalar>& gy) {
    if (t.requires_grad(a)) t.accumulate(a, gy.topRows(ca));
    if (t.requires_grad(b)) t.accumulate(b, gy.bottomRows(gy.rows() - ca));
  });
}

/// Sum of two scalar nodes.
template <typename Scalar>
Var add(Tape<Scalar>& tape, Var a, Var b) {
  if (tape.data(a).rows() != tape.data(b).rows() || tape.data(a).cols() != tape.data(b).cols()) {
    throw std::invalid_argument("add: shape mismatch");
  }
  Matrix<Scalar> y = tape.data(a) + tape.data(b);
  const Tensor3<Scalar>& ta = tape.value(a);
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.push(Tensor3<Scalar>(std::move(y), ta.batch, ta.length), rg, [=](Tape<Scalar>& t, const Matrix<Scalar>& gy) {
    if (t.requires_grad(a)) t.accumulate(a, gy);
    if (t.requires_grad(b)) t.accumulate(b, gy);
  });
}

struct GruOutput {
  Var sequence;
  Var last;
};

/// GRU over the whole input plus its final state; the final state is `h0`
/// itself when the input has no timesteps.
template <typename Scalar>
GruOutput gru_forward(Tape<Scalar>& tape, Var x, Var w_input, Var w_hidden, Var bias, Var h0) {
  const Var seq = gru(tape, x, w_input, w_hidden, bias, h0);
  const Tensor3<Scalar>& s = tape.value(seq);
  if (s.length == 0) return {seq, h0};
  const std::vector<Index> last(static_cast<std::size_t>(s.batch), s.length - 1);
  return {seq, gather_time(tape, seq, std::span<const Index>(last))};
}

// ---------------------------------------------------------------------------
// Losses. Every loss returns a 1x1 node.

/// Mean over the batch of -log softmax(logits)[label]. logits: flat (K, batch).
template <typename Scalar>
Var softmax_xent(Tape<Scalar>& tape, Var logits, std::span<const int> labels) {
  using Mat = Matrix<Scalar>;
  const Mat& z = tape.data(logits);
  const Index k = z.rows();
  const Index batch = z.cols();
  if (k < 2) throw std::invalid_argument("softmax_xent: need at least 2 classes");
  if (static_cast<Index>(labels.size()) != batch) throw std::invalid_argument("softmax_xent: label count mismatch");
  Mat probs(k, batch);
  Scalar loss = 0;
  std::vector<int> lab(labels.begin(), labels.end());
  for (Index b = 0; b < batch; ++b) {
    if (lab[b] < 0 || lab[b] >= k) {
      throw std::out_of_range("softmax_xent: label " + std::to_string(lab[b]) + " outside [0, " + std::to_string(k) + ")");
    }
    const Scalar m = z.col(b).maxCoeff();
    const Scalar lse = m + std::log((z.col(b).array() - m).exp().sum());
    probs.col(b) = (z.col(b).array() - lse).exp().matrix();
    loss += lse - z(lab[b], b);
  }
  loss /= Scalar(batch);
  Mat out(1, 1);
  out(0, 0) = loss;
  return tape.push(Tensor3<Scalar>::flat(std::move(out)), tape.requires_grad(logits),
                   [=, probs = std::move(probs), lab = std::move(lab)](Tape<Scalar>& t, const Mat& gy) {
                     Mat g = probs;
                     for (Index b = 0; b < batch; ++b) g(lab[b], b) -= Scalar(1);
                     t.accumulate(logits, g * (gy(0, 0) / Scalar(batch)));
                   });
}

/// Mean |a - b| over channels and the first lengths[i] timesteps of each sample.
/// The subgradient at a == b is 0.
template <typename Scalar>
Var l1_loss(Tape<Scalar>& tape, Var a, Var b, std::span<const Index> lengths) {
  using Mat = Matrix<Scalar>;
  const Tensor3<Scalar>& ta = tape.value(a);
  const Tensor3<Scalar>& tb = tape.value(b);
  if (ta.channels() != tb.channels() || ta.batch != tb.batch || ta.length != tb.length) {
    throw std::invalid_argument("l1_loss: shape mismatch");
  }
  if (static_cast<Index>(lengths.size()) != ta.batch) throw std::invalid_argument("l1_loss: lengths size mismatch");
  const Index len = ta.length;
  Mat sign = Mat::Zero(ta.channels(), ta.data.cols());
  Scalar total = 0;
  Index count = 0;
  for (Index i = 0; i < ta.batch; ++i) {
    const Index keep = std::clamp<Index>(lengths[i], 0, len);
    const auto d = (ta.data.middleCols(i * len, keep) - tb.data.middleCols(i * len, keep)).array();
    total += d.abs().sum();
    sign.middleCols(i * len, keep) = d.sign().matrix();
    count += keep * ta.channels();
  }
  if (count == 0) throw std::invalid_argument("l1_loss: mask selects no elements");
  Mat out(1, 1);
  out(0, 0) = total / Scalar(count);
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.push(Tensor3<Scalar>::flat(std::move(out)), rg,
                   [=, sign = std::move(sign)](Tape<Scalar>& t, const Mat& gy) {
                     const Scalar s = gy(0, 0) / Scalar(count);
                     if (t.requires_grad(a)) t.accumulate(a, sign * s);
                     if (t.requires_grad(b)) t.accumulate(b, -(sign * s));
                   });
}

/// Mean over every element of (scores - target)^2.
template <typename Scalar>
Var squared_error_to(Tape<Scalar>& tape, Var scores, Scalar target) {
  using Mat = Matrix<Scalar>;
  const Mat& s = tape.data(scores);
  const Index count = s.size();
  if (count == 0) throw std::invalid_argument("squared_error_to: empty scores");
  Mat out(1, 1);
  out(0, 0) = (s.array() - target).square().sum() / Scalar(count);
  return tape.push(Tensor3<Scalar>::flat(std::move(out)), tape.requires_grad(scores),
                   [=](Tape<Scalar>& t, const Mat& gy) {
                     t.accumulate(scores, ((t.data(scores).array() - target) * (Scalar(2) * gy(0, 0) / Scalar(count))).matrix());
                   });
}

/// Least-squares adversarial losses over the discriminator's per-sample score
/// vectors. Inertial latents are labelled 1 and trajectory latents 0; the
/// encoder objective swaps the targets.
template <typename Scalar>
struct LsganLosses {
  Scalar d_loss;
  Scalar g_loss;
};

template <typename Scalar>
LsganLosses<Scalar> lsgan_losses(const Matrix<Scalar>& scores_inertia, const Matrix<Scalar>& scores_trajectory) {
  auto msq = [](const Matrix<Scalar>& s, Scalar target) {
    return (s.array() - target).square().sum() / Scalar(s.size());
  };
  return {msq(scores_inertia, 1) + msq(scores_trajectory, 0), msq(scores_inertia, 0) + msq(scores_trajectory, 1)};
}

template <typename Scalar>
Var lsgan_disc_loss(Tape<Scalar>& tape, Var scores_inertia, Var scores_trajectory) {
  return add(tape, squared_error_to(tape, scores_inertia, Scalar(1)), squared_error_to(tape, scores_trajectory, Scalar(0)));
}

template <typename Scalar>
Var lsgan_gen_loss(Tape<Scalar>& tape, Var scores_inertia, Var scores_trajectory) {
  return add(tape, squared_error_to(tape, scores_inertia, Scalar(0)), squared_error_to(tape, scores_trajectory, Scalar(1)));
}

}  // namespace awt
