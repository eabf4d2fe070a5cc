#pragma once

#include "awt/numerics/tape.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace awt {

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t coordinates = 0;
  std::size_t refined = 0;  // coordinates re-measured with smaller steps
};

/// Compares tape gradients with central differences.
///
/// `loss` records a scalar loss on the given tape, reading the blocks' current
/// values. Every coordinate is checked when the blocks hold at most
/// `max_coordinates` values; otherwise a seeded random subsample of that many.
/// Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
///
/// A central difference whose interval straddles a kink of a piecewise-linear
/// op (leaky ReLU, L1) is wrong at that step size only. Coordinates whose error
/// exceeds `refine_above` are therefore re-measured at delta / 10 and
/// delta / 100 and keep the smallest error; an incorrect backward rule fails at
/// every step size.
template <typename Scalar>
GradCheckResult grad_check(const std::function<Var(Tape<Scalar>&)>& loss,
                           const std::vector<ParamBlock<Scalar>*>& blocks, std::uint64_t seed = 0,
                           double delta = 1e-4, std::size_t max_coordinates = 256,
                           double refine_above = std::numeric_limits<double>::infinity()) {
  std::vector<Matrix<Scalar>> analytic;
  {
    Tape<Scalar> tape;
    const Var l = loss(tape);
    tape.backward(l);
    for (const auto* b : blocks) {
      auto g = tape.parameter_grad(*b);
      analytic.push_back(g ? *g : Matrix<Scalar>::Zero(b->value.rows(), b->value.cols()));
    }
  }

  std::vector<std::pair<std::size_t, Index>> coords;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    for (Index j = 0; j < blocks[i]->value.size(); ++j) coords.emplace_back(i, j);
  if (coords.size() > max_coordinates) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coordinates);
  }

  auto eval = [&] {
    Tape<Scalar> tape = Tape<Scalar>::inference();
    return static_cast<double>(tape.scalar(loss(tape)));
  };

  GradCheckResult out;
  for (const auto& [bi, j] : coords) {
    Scalar& w = blocks[bi]->value.data()[j];
    const Scalar saved = w;
    const double exact = static_cast<double>(analytic[bi].data()[j]);
    auto error_at = [&](double step) {
      w = saved + Scalar(step);
      const double up = eval();
      w = saved - Scalar(step);
      const double down = eval();
      w = saved;
      const double numeric = (up - down) / (2 * step);
      return std::abs(exact - numeric) / std::max({std::abs(exact), std::abs(numeric), 1e-8});
    };
    double err = error_at(delta);
    if (err > refine_above) {
      ++out.refined;
      err = std::min({err, error_at(delta / 10), error_at(delta / 100)});
    }
    out.max_rel_error = std::max(out.max_rel_error, err);
    ++out.coordinates;
  }
  return out;
}

}  // namespace awt
