#include "awt/model/grad_suite.hpp"
#include "awt/numerics/adam.hpp"
#include "awt/numerics/grad_check.hpp"
#include "awt/numerics/ops.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace awt;
using awt::test::random_matrix;

namespace {

using T = Tape<double>;
using Mat = Matrix<double>;

// Direct evaluation of the convolution sum.
Mat conv_oracle(const Mat& x, Index batch, Index len, const Mat& w, const Mat& b, ConvGeometry g) {
  const Index c_in = x.rows(), c_out = w.rows();
  const Index out_len = (len + 2 * g.pad - g.kernel) / g.stride + 1;
  Mat y(c_out, batch * out_len);
  for (Index bb = 0; bb < batch; ++bb)
    for (Index t = 0; t < out_len; ++t)
      for (Index o = 0; o < c_out; ++o) {
        double acc = b(o, 0);
        for (Index j = 0; j < g.kernel; ++j) {
          const Index src = t * g.stride - g.pad + j;
          if (src < 0 || src >= len) continue;
          for (Index c = 0; c < c_in; ++c) acc += w(o, j * c_in + c) * x(c, bb * len + src);
        }
        y(o, bb * out_len + t) = acc;
      }
  return y;
}

double sigmoid(double v) { return 1 / (1 + std::exp(-v)); }

// Step-by-step GRU with the stated gate equations.
Mat gru_oracle(const Mat& x, Index batch, Index len, const Mat& wi, const Mat& wh, const Mat& bias, const Mat& h0) {
  const Index h = wh.cols();
  Mat seq(h, batch * len);
  for (Index b = 0; b < batch; ++b) {
    Eigen::VectorXd state = h0.col(b);
    for (Index t = 0; t < len; ++t) {
      const Eigen::VectorXd xin = x.col(b * len + t);
      Eigen::VectorXd next(h);
      Eigen::VectorXd r(h), z(h);
      for (Index i = 0; i < h; ++i) {
        z(i) = sigmoid(wi.row(i).dot(xin) + wh.row(i).dot(state) + bias(i, 0));
        r(i) = sigmoid(wi.row(h + i).dot(xin) + wh.row(h + i).dot(state) + bias(h + i, 0));
      }
      const Eigen::VectorXd rh = r.cwiseProduct(state);
      for (Index i = 0; i < h; ++i) {
        const double n = std::tanh(wi.row(2 * h + i).dot(xin) + wh.row(2 * h + i).dot(rh) + bias(2 * h + i, 0));
        next(i) = (1 - z(i)) * state(i) + z(i) * n;
      }
      state = next;
      seq.col(b * len + t) = state;
    }
  }
  return seq;
}

Var flipped_identity(T& t, Var x) {
  return t.push(t.value(x), t.requires_grad(x), [x](T& tape, const Mat& g) { tape.accumulate(x, -g); });
}

}  // namespace

TEST_CASE("conv1d length arithmetic and rejection") {
  CHECK(conv_output_length(100, {5, 2, 0}) == 48);
  CHECK(conv_output_length(120, {7, 2, 3}) == 60);
  CHECK_THROWS_AS(conv_output_length(3, {5, 1, 0}), std::invalid_argument);
  CHECK(conv_transpose_output_length(50, {4, 2, 1}) == 100);
  CHECK_THROWS_AS(conv_transpose_output_length(1, {1, 1, 1}), std::invalid_argument);
}

TEST_CASE("conv1d identity kernel returns its input") {
  std::mt19937_64 rng(1);
  const Mat x = random_matrix(1, 2 * 9, rng);
  T t;
  const Var y = conv1d(t, t.constant(Tensor3<double>(x, 2, 9)), t.constant(Tensor3<double>::flat(Mat::Ones(1, 1))),
                       t.constant(Tensor3<double>::flat(Mat::Zero(1, 1))), {1, 1, 0});
  CHECK(test::max_abs(t.data(y) - x) == 0.0);
}

TEST_CASE("conv1d matches the direct convolution sum") {
  std::mt19937_64 rng(2);
  for (ConvGeometry g : {ConvGeometry{7, 2, 3}, ConvGeometry{5, 2, 2}, ConvGeometry{3, 1, 0}, ConvGeometry{4, 3, 1}}) {
    const Index len = 13;
    const Mat x = random_matrix(3, 2 * len, rng), w = random_matrix(4, 3 * g.kernel, rng), b = random_matrix(4, 1, rng);
    T t;
    const Var y = conv1d(t, t.constant(Tensor3<double>(x, 2, len)), t.constant(Tensor3<double>::flat(w)),
                         t.constant(Tensor3<double>::flat(b)), g);
    CHECK(test::max_abs(t.data(y) - conv_oracle(x, 2, len, w, b, g)) < 1e-12);
    CHECK(t.value(y).length == conv_output_length(len, g));
  }
}

TEST_CASE("conv1d_transpose is the adjoint of conv1d") {
  std::mt19937_64 rng(3);
  for (ConvGeometry g : {ConvGeometry{4, 2, 1}, ConvGeometry{5, 2, 2}, ConvGeometry{3, 1, 1}}) {
    const Index len = 12, batch = 2, c_in = 3, c_out = 4;
    const Index out_len = conv_output_length(len, g);
    if (conv_transpose_output_length(out_len, g) != len) continue;
    const Mat w = random_matrix(c_out, c_in * g.kernel, rng);
    const Mat x = random_matrix(c_in, batch * len, rng), y = random_matrix(c_out, batch * out_len, rng);
    T t;
    const Var cx = conv1d(t, t.constant(Tensor3<double>(x, batch, len)), t.constant(Tensor3<double>::flat(w)),
                          t.constant(Tensor3<double>::flat(Mat::Zero(c_out, 1))), g);
    const Var ty = conv1d_transpose(t, t.constant(Tensor3<double>(y, batch, out_len)),
                                    t.constant(Tensor3<double>::flat(w)),
                                    t.constant(Tensor3<double>::flat(Mat::Zero(c_in, 1))), g);
    const double lhs = (t.data(cx).array() * y.array()).sum();
    const double rhs = (x.array() * t.data(ty).array()).sum();
    CHECK(std::abs(lhs - rhs) <= 1e-6 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("stride-2 conv then matching transpose restores even lengths") {
  for (Index len : {16, 24, 50, 120}) {
    const ConvGeometry down{4, 2, 1};
    CHECK(conv_transpose_output_length(conv_output_length(len, down), down) == len);
  }
}

TEST_CASE("gru with zero weights halves the state every step") {
  const Index h = 3, len = 4;
  const Mat v = (Mat(h, 1) << 1.0, -2.0, 0.5).finished();
  T t;
  const Var x = t.constant(Tensor3<double>(Mat::Zero(2, len), 1, len));
  const GruOutput out = gru_forward(t, x, t.constant(Tensor3<double>::flat(Mat::Zero(3 * h, 2))),
                                    t.constant(Tensor3<double>::flat(Mat::Zero(3 * h, h))),
                                    t.constant(Tensor3<double>::flat(Mat::Zero(3 * h, 1))),
                                    t.constant(Tensor3<double>::flat(v)));
  for (Index s = 0; s < len; ++s) {
    CHECK(test::max_abs(t.data(out.sequence).col(s) - std::pow(0.5, s + 1) * v) < 1e-15);
  }
  CHECK(test::max_abs(t.data(out.last) - std::pow(0.5, len) * v) < 1e-15);
}

TEST_CASE("gru with an empty input returns h0") {
  const Mat h0 = (Mat(2, 1) << 0.3, -0.7).finished();
  T t;
  const Var x = t.constant(Tensor3<double>(Mat(1, 0), 1, 0));
  const GruOutput out = gru_forward(t, x, t.constant(Tensor3<double>::flat(Mat::Ones(6, 1))),
                                    t.constant(Tensor3<double>::flat(Mat::Ones(6, 2))),
                                    t.constant(Tensor3<double>::flat(Mat::Ones(6, 1))),
                                    t.constant(Tensor3<double>::flat(h0)));
  CHECK(t.data(out.sequence).cols() == 0);
  CHECK(t.data(out.last) == h0);
}

TEST_CASE("gru matches a step-by-step oracle") {
  std::mt19937_64 rng(4);
  const Index h = 5, c = 3, batch = 2, len = 6;
  const Mat x = random_matrix(c, batch * len, rng), wi = random_matrix(3 * h, c, rng, 0.5),
            wh = random_matrix(3 * h, h, rng, 0.5), b = random_matrix(3 * h, 1, rng, 0.5),
            h0 = random_matrix(h, batch, rng, 0.5);
  T t;
  const GruOutput out =
      gru_forward(t, t.constant(Tensor3<double>(x, batch, len)), t.constant(Tensor3<double>::flat(wi)),
                  t.constant(Tensor3<double>::flat(wh)), t.constant(Tensor3<double>::flat(b)),
                  t.constant(Tensor3<double>::flat(h0)));
  const Mat expected = gru_oracle(x, batch, len, wi, wh, b, h0);
  CHECK(test::max_abs(t.data(out.sequence) - expected) < 1e-12);
  CHECK(test::max_abs(t.data(out.last).col(1) - expected.col(2 * len - 1)) < 1e-12);
}

TEST_CASE("affine_act identity and leaky slope") {
  std::mt19937_64 rng(5);
  const Mat x = random_matrix(4, 3, rng);
  T t;
  const Var y = affine_act(t, t.constant(Tensor3<double>::flat(x)), t.constant(Tensor3<double>::flat(Mat::Identity(4, 4))),
                           t.constant(Tensor3<double>::flat(Mat::Zero(4, 1))), Activation::linear);
  CHECK(t.data(y) == x);
  const Mat v = (Mat(2, 1) << -1.0, 2.0).finished();
  const Var l = affine_act(t, t.constant(Tensor3<double>::flat(v)), t.constant(Tensor3<double>::flat(Mat::Identity(2, 2))),
                           t.constant(Tensor3<double>::flat(Mat::Zero(2, 1))), Activation::leaky_relu);
  CHECK(t.data(l)(0, 0) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(t.data(l)(1, 0) == 2.0);
}

TEST_CASE("softmax_xent analytic and brute-force values") {
  T t;
  std::vector<int> labels(3, 7);
  const Var u = softmax_xent(t, t.constant(Tensor3<double>::flat(Mat::Zero(62, 3))), std::span<const int>(labels));
  CHECK(std::abs(t.scalar(u) - std::log(62.0)) < 1e-12);

  Mat peaked = Mat::Zero(4, 1);
  peaked(2, 0) = 200;
  const int two[] = {2};
  CHECK(t.scalar(softmax_xent(t, t.constant(Tensor3<double>::flat(peaked)), std::span<const int>(two))) < 1e-12);

  std::mt19937_64 rng(6);
  const Mat z = random_matrix(5, 4, rng, 3);
  const int lab[] = {0, 4, 2, 2};
  double expected = 0;
  for (Index b = 0; b < 4; ++b) {
    double sum = 0;
    for (Index k = 0; k < 5; ++k) sum += std::exp(z(k, b));
    expected += std::log(sum) - z(lab[b], b);
  }
  expected /= 4;
  CHECK(std::abs(t.scalar(softmax_xent(t, t.constant(Tensor3<double>::flat(z)), std::span<const int>(lab))) -
                 expected) < 1e-10);
  const int bad[] = {0, 5, 1, 1};
  CHECK_THROWS_AS(softmax_xent(t, t.constant(Tensor3<double>::flat(z)), std::span<const int>(bad)), std::out_of_range);
}

TEST_CASE("l1_loss masked mean matches a loop oracle") {
  std::mt19937_64 rng(7);
  const Index c = 3, batch = 3, len = 8;
  const Mat a = random_matrix(c, batch * len, rng), b = random_matrix(c, batch * len, rng);
  const Index lengths[] = {8, 3, 5};
  double sum = 0;
  double count = 0;
  for (Index bb = 0; bb < batch; ++bb)
    for (Index l = 0; l < lengths[bb]; ++l)
      for (Index ch = 0; ch < c; ++ch) {
        sum += std::abs(a(ch, bb * len + l) - b(ch, bb * len + l));
        ++count;
      }
  T t;
  const Var ta = t.constant(Tensor3<double>(a, batch, len)), tb = t.constant(Tensor3<double>(b, batch, len));
  CHECK(std::abs(t.scalar(l1_loss(t, ta, tb, std::span<const Index>(lengths))) - sum / count) < 1e-12);
  CHECK(t.scalar(l1_loss(t, ta, ta, std::span<const Index>(lengths))) == 0.0);
  const Var shifted = t.constant(Tensor3<double>((a.array() - 0.75).matrix(), batch, len));
  CHECK(std::abs(t.scalar(l1_loss(t, ta, shifted, std::span<const Index>(lengths))) - 0.75) < 1e-12);
  const Index none[] = {0, 0, 0};
  CHECK_THROWS_AS(l1_loss(t, ta, tb, std::span<const Index>(none)), std::invalid_argument);
}

TEST_CASE("lsgan losses: equilibrium, perfect discriminator and loop oracle") {
  const Mat half = Mat::Constant(64, 5, 0.5);
  const auto eq = lsgan_losses<double>(half, half);
  CHECK(std::abs(eq.d_loss - 0.5) < 1e-9);
  const auto perfect = lsgan_losses<double>(Mat::Ones(64, 3), Mat::Zero(64, 4));
  CHECK(perfect.d_loss == 0.0);
  CHECK(perfect.g_loss == 2.0);

  std::mt19937_64 rng(8);
  const Mat si = random_matrix(64, 3, rng), st = random_matrix(64, 2, rng);
  double d_i = 0, d_t = 0, g_i = 0, g_t = 0;
  for (Index i = 0; i < si.size(); ++i) {
    d_i += (si.data()[i] - 1) * (si.data()[i] - 1);
    g_i += si.data()[i] * si.data()[i];
  }
  for (Index i = 0; i < st.size(); ++i) {
    d_t += st.data()[i] * st.data()[i];
    g_t += (st.data()[i] - 1) * (st.data()[i] - 1);
  }
  const double n_i = static_cast<double>(si.size()), n_t = static_cast<double>(st.size());
  const auto r = lsgan_losses<double>(si, st);
  CHECK(std::abs(r.d_loss - (d_i / n_i + d_t / n_t)) < 1e-12);
  CHECK(std::abs(r.g_loss - (g_i / n_i + g_t / n_t)) < 1e-12);

  T t;
  const Var vi = t.constant(Tensor3<double>::flat(si)), vt = t.constant(Tensor3<double>::flat(st));
  CHECK(std::abs(t.scalar(lsgan_disc_loss(t, vi, vt)) - r.d_loss) < 1e-12);
  CHECK(std::abs(t.scalar(lsgan_gen_loss(t, vi, vt)) - r.g_loss) < 1e-12);
}

TEST_CASE("adam first step, zero gradient and a three-step scalar trace") {
  const double lr = 2e-4;
  ParamBlock<double> p("p", 2, 2);
  p.value << 1, -1, 0.5, 2;
  const Mat start = p.value;
  p.grad << 3, -0.01, 1e3, 7;
  adam_step<double>({&p}, lr);
  const Mat delta = (p.value - start).cwiseAbs();
  CHECK(delta.minCoeff() >= 0.999 * lr);
  CHECK(delta.maxCoeff() <= lr);
  CHECK(p.grad.isZero(0));

  ParamBlock<double> still("s", 1, 3);
  still.value << 1, 2, 3;
  const Mat before = still.value;
  adam_step<double>({&still}, lr);
  CHECK(still.value == before);

  ParamBlock<double> s("x", 1, 1);
  s.value(0, 0) = 0.3;
  const double grads[] = {0.5, -1.25, 2.0};
  double w = 0.3, m = 0, v = 0;
  for (int k = 1; k <= 3; ++k) {
    const double g = grads[k - 1];
    s.grad(0, 0) = g;
    adam_step<double>({&s}, 0.01);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, k)), vh = v / (1 - std::pow(0.999, k));
    w -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(std::abs(s.value(0, 0) - w) < 1e-10);
  }
  CHECK(s.adam_t == 3);
}

TEST_CASE("grad_check on a linear closure is exact") {
  std::mt19937_64 rng(9);
  ParamBlock<double> w("w", 3, 4);
  w.value = random_matrix(3, 4, rng);
  const Mat x = random_matrix(4, 2, rng);
  const std::function<Var(T&)> loss = [&](T& t) {
    const Var y = affine(t, t.constant(Tensor3<double>::flat(x)), t.parameter(w),
                         t.constant(Tensor3<double>::flat(Mat::Zero(3, 1))));
    // sum of outputs through a fixed linear read-out
    return affine(t, t.push(Tensor3<double>::flat(Eigen::Map<const Mat>(t.data(y).data(), 6, 1)), t.requires_grad(y),
                            [y](T& tape, const Mat& g) { tape.accumulate(y, Eigen::Map<const Mat>(g.data(), 3, 2)); }),
                  t.constant(Tensor3<double>::flat(Mat::Ones(1, 6))), t.constant(Tensor3<double>::flat(Mat::Zero(1, 1))));
  };
  const GradCheckResult r = grad_check<double>(loss, {&w});
  CHECK(r.coordinates == 12);
  CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("gradient suite passes for several seeds") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const GradSuiteResult r = run_gradient_suite(seed);
    CHECK(r.passed());
    for (const auto& c : r.cases) {
      INFO(c.name);
      CHECK(c.max_rel_error < kGradTolerance);
      CHECK(c.coordinates > 0);
    }
  }
}

TEST_CASE("gradient suite samples at least 200 coordinates on large cases") {
  const GradSuiteResult r = run_gradient_suite(1);
  std::size_t largest = 0;
  for (const auto& c : r.cases) largest = std::max(largest, c.coordinates);
  CHECK(largest >= 200);
}

TEST_CASE("a sign error in a backward rule fails the gradient suite") {
  std::vector<GradCase> cases = default_grad_cases();
  cases.push_back({"conv1d/flipped", [](std::mt19937_64& rng) {
                     GradCase::State s;
                     auto& x = s.add("x", 2, 2 * 9, rng);
                     auto& w = s.add("w", 3, 2 * 3, rng);
                     auto& b = s.add("b", 3, 1, rng);
                     s.loss = [&x, &w, &b](T& t) {
                       const Var y = conv1d(t, t.parameter(x, 2, 9), t.parameter(w), t.parameter(b), {3, 1, 1});
                       return squared_error_to(t, flipped_identity(t, y), 0.25);
                     };
                     return s;
                   }});
  const GradSuiteResult r = run_gradient_suite(cases, 1);
  CHECK_FALSE(r.passed());
  CHECK_FALSE(r.cases.back().passed);
  CHECK(r.cases.back().max_rel_error > 0.5);
  for (std::size_t i = 0; i + 1 < r.cases.size(); ++i) CHECK(r.cases[i].passed);
}

TEST_CASE("tape tracking modes") {
  ParamBlock<double> a("a", 2, 1), b("b", 2, 1);
  a.value << 1, 2;
  b.value << 3, 4;
  Tape<double> listed(std::vector<const ParamBlock<double>*>{&a});
  const Var l = squared_error_to(listed, add(listed, listed.parameter(a), listed.parameter(b)), 0.0);
  listed.backward(l);
  CHECK(listed.parameter_grad(a).has_value());
  CHECK_FALSE(listed.parameter_grad(b).has_value());

  Tape<double> inf = Tape<double>::inference();
  const Var li = squared_error_to(inf, inf.parameter(a), 0.0);
  CHECK_FALSE(inf.requires_grad(li));
  inf.backward(li);
  CHECK_FALSE(inf.parameter_grad(a).has_value());
}

TEST_CASE("forward ops keep finite inputs finite") {
  std::mt19937_64 rng(10);
  T t;
  const Var x = t.constant(Tensor3<double>(random_matrix(3, 2 * 10, rng, 50), 2, 10));
  const Var y = conv1d(t, x, t.constant(Tensor3<double>::flat(random_matrix(4, 9, rng))),
                       t.constant(Tensor3<double>::flat(random_matrix(4, 1, rng))), {3, 1, 1});
  for (Activation act : {Activation::leaky_relu, Activation::tanh, Activation::sigmoid}) {
    CHECK(t.value(activate(t, y, act)).all_finite());
  }
}
