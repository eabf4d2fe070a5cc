#pragma once

#include "awt/data/sample.hpp"

#include <span>
#include <vector>

namespace awt {

inline constexpr Index kMmdLength = 64;

/// Resamples every sequence to kMmdLength steps and flattens it channel-major.
Matrix<double> mmd_features(std::span<const Matrix<double>> set);

/// Biased squared MMD with an RBF kernel whose bandwidth is the median pairwise
/// distance over the pooled set. Both sets must be non-empty with equal channel
/// counts; the result is clamped at zero.
double mmd_score(std::span<const Matrix<double>> a, std::span<const Matrix<double>> b);

double mmd_score(const Dataset& a, const Dataset& b);

std::vector<Matrix<double>> values_of(const Dataset& ds);

}  // namespace awt
