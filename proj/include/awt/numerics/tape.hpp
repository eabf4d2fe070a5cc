#pragma once

#include "awt/numerics/tensor.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace awt {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Reverse-mode recorder. Each op appends a node holding its forward value and
/// a backward rule that pulls the node's gradient into its inputs. Parameter
/// nodes keep a pointer to their block so gradients can be collected after
/// `backward`; the block itself is never written by the tape.
template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using Backward = std::function<void(Tape&, const Mat&)>;

  enum class Mode { inference, track_all, track_listed };

  /// Records gradients for every parameter block that enters the tape.
  Tape() : mode_(Mode::track_all) {}

  /// Records gradients only for the listed blocks; others enter as constants.
  explicit Tape(std::vector<const ParamBlock<Scalar>*> tracked)
      : mode_(Mode::track_listed), tracked_(std::move(tracked)) {
    std::sort(tracked_.begin(), tracked_.end());
  }

  static Tape inference() {
    Tape t;
    t.mode_ = Mode::inference;
    return t;
  }

  Tape(Tape&&) = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor3<Scalar> value) { return push(std::move(value), false, {}); }

  Var variable(Tensor3<Scalar> value) { return push(std::move(value), true, {}); }

  Var parameter(const ParamBlock<Scalar>& block) { return parameter(block, 1, block.value.cols()); }

  /// Binds a block whose columns hold a (batch, length) sequence batch.
  Var parameter(const ParamBlock<Scalar>& block, Index batch, Index length) {
    const bool track = is_tracked(&block);
    Var v = push(Tensor3<Scalar>(block.value, batch, length), track, {});
    if (track) params_.emplace_back(&block, v);
    return v;
  }

  /// Appends an op result. `backward` is dropped when no input needs a gradient.
  Var push(Tensor3<Scalar> value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Mat(), requires_grad,
                          requires_grad ? std::move(backward) : Backward()});
    return Var{nodes_.size() - 1};
  }

  const Tensor3<Scalar>& value(Var v) const { return nodes_.at(v.id).value; }
  const Mat& data(Var v) const { return nodes_.at(v.id).value.data; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  Scalar scalar(Var v) const {
    const auto& d = data(v);
    if (d.size() != 1) throw std::invalid_argument("Tape::scalar: node is not a scalar");
    return d(0, 0);
  }

  /// Gradient accumulator for `v`, allocated as zeros on first access.
  Mat& grad(Var v) {
    Node& n = nodes_.at(v.id);
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.data.rows(), n.value.data.cols());
    return n.grad;
  }

  /// Adds `e` to the gradient of `v`; the first contribution is assigned
  /// directly instead of being added to a zero-filled buffer.
  template <typename Derived>
  void accumulate(Var v, const Eigen::MatrixBase<Derived>& e) {
    Node& n = nodes_.at(v.id);
    if (n.grad.size() == 0) {
      n.grad = e;
    } else {
      n.grad.noalias() += e;
    }
  }

  bool has_grad(Var v) const { return nodes_.at(v.id).grad.size() != 0; }

  /// Seeds d(loss)/d(loss) = 1 and runs every backward rule in reverse order.
  void backward(Var loss) {
    if (data(loss).size() != 1) throw std::invalid_argument("Tape::backward: loss must be scalar");
    if (!requires_grad(loss)) return;
    grad(loss)(0, 0) += Scalar(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && n.grad.size() != 0) n.backward(*this, n.grad);
    }
  }

  /// Gradient collected for `block`, or nullopt when the block was not tracked.
  /// Blocks entering the tape more than once have their gradients summed.
  std::optional<Mat> parameter_grad(const ParamBlock<Scalar>& block) const {
    std::optional<Mat> out;
    for (const auto& [ptr, var] : params_) {
      if (ptr != &block) continue;
      const Node& n = nodes_[var.id];
      Mat g = n.grad.size() ? n.grad : Mat::Zero(block.value.rows(), block.value.cols());
      if (out) *out += g; else out = std::move(g);
    }
    return out;
  }

  std::size_t size() const { return nodes_.size(); }

  /// True when every recorded value and every allocated gradient is finite.
  bool all_finite() const {
    for (const Node& n : nodes_) {
      if (!finite(n.value.data) || !finite(n.grad)) return false;
    }
    return true;
  }

  /// Handle the next pushed node will receive.
  Var next_var() const { return Var{nodes_.size()}; }

 private:
  struct Node {
    Tensor3<Scalar> value;
    Mat grad;
    bool requires_grad = false;
    Backward backward;
  };

  // x * 0 is zero for finite x and NaN otherwise, so one vectorized sum
  // decides the whole matrix.
  static bool finite(const Mat& m) { return m.size() == 0 || (m.array() * Scalar(0)).sum() == Scalar(0); }

  bool is_tracked(const ParamBlock<Scalar>* block) const {
    switch (mode_) {
      case Mode::inference: return false;
      case Mode::track_all: return true;
      case Mode::track_listed: return std::binary_search(tracked_.begin(), tracked_.end(), block);
    }
    return false;
  }

  Mode mode_;
  std::vector<const ParamBlock<Scalar>*> tracked_;
  std::vector<Node> nodes_;
  std::vector<std::pair<const ParamBlock<Scalar>*, Var>> params_;
};

/// Copies tape gradients into the listed blocks' `grad` fields (accumulating).
template <typename Scalar>
void collect_grads(const Tape<Scalar>& tape, const std::vector<ParamBlock<Scalar>*>& blocks) {
  for (ParamBlock<Scalar>* b : blocks) {
    if (auto g = tape.parameter_grad(*b)) {
      if (b->grad.size() != b->value.size()) b->zero_grad();
      b->grad += *g;
    }
  }
}

}  // namespace awt
