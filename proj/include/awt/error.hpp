#pragma once

#include <stdexcept>
#include <string>

namespace awt {

/// Malformed input data, configuration or checkpoint.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or activation during training or evaluation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace awt
