#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace awt {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Batch of multichannel sequences.
///
/// Stored as a (channels, batch * length) matrix whose column `b * length + l`
/// is the channel vector of sample `b` at time `l`. A flat (batch, n) array is
/// the special case length == 1, one column per sample.
template <typename Scalar>
struct Tensor3 {
  Matrix<Scalar> data;
  Index batch = 0;
  Index length = 0;

  Tensor3() = default;
  Tensor3(Index channels, Index batch_, Index length_)
      : data(Matrix<Scalar>::Zero(channels, batch_ * length_)), batch(batch_), length(length_) {}
  Tensor3(Matrix<Scalar> data_, Index batch_, Index length_)
      : data(std::move(data_)), batch(batch_), length(length_) {
    if (data.cols() != batch * length) {
      throw std::invalid_argument("Tensor3: column count " + std::to_string(data.cols()) +
                                  " != batch*length " + std::to_string(batch * length));
    }
  }

  static Tensor3 flat(Matrix<Scalar> columns) {
    const Index b = columns.cols();
    return Tensor3(std::move(columns), b, 1);
  }

  Index channels() const { return data.rows(); }

  auto sample(Index b) { return data.middleCols(b * length, length); }
  auto sample(Index b) const { return data.middleCols(b * length, length); }

  bool all_finite() const { return data.allFinite(); }
};

/// Trainable weights plus their gradient and Adam moment accumulators.
template <typename Scalar>
struct ParamBlock {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  Matrix<Scalar> adam_m;
  Matrix<Scalar> adam_v;
  std::int64_t adam_t = 0;

  ParamBlock() = default;
  ParamBlock(std::string name_, Index rows, Index cols)
      : name(std::move(name_)),
        value(Matrix<Scalar>::Zero(rows, cols)),
        grad(Matrix<Scalar>::Zero(rows, cols)),
        adam_m(Matrix<Scalar>::Zero(rows, cols)),
        adam_v(Matrix<Scalar>::Zero(rows, cols)) {}

  Index size() const { return value.size(); }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

}  // namespace awt
