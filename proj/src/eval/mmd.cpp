#include "awt/eval/mmd.hpp"

#include "awt/data/synth.hpp"
#include "awt/error.hpp"

#include <algorithm>
#include <cmath>

namespace awt {

Matrix<double> mmd_features(std::span<const Matrix<double>> set) {
  if (set.empty()) return {};
  const Index channels = set.front().rows();
  Matrix<double> out(channels * kMmdLength, static_cast<Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set[i].rows() != channels) throw ValidationError("mmd_score: channel count mismatch within a set");
    const Matrix<double> r = resample(set[i], kMmdLength);
    out.col(static_cast<Index>(i)) = Eigen::Map<const Vector<double>>(r.data(), r.size());
  }
  return out;
}

double mmd_score(std::span<const Matrix<double>> a, std::span<const Matrix<double>> b) {
  if (a.empty() || b.empty()) throw ValidationError("mmd_score: both sets must be non-empty");
  if (a.front().rows() != b.front().rows()) {
    throw ValidationError("mmd_score: channel mismatch (" + std::to_string(a.front().rows()) + " vs " +
                          std::to_string(b.front().rows()) + ")");
  }
  const Matrix<double> fa = mmd_features(a);
  const Matrix<double> fb = mmd_features(b);
  const Index na = fa.cols(), nb = fb.cols(), n = na + nb;
  Matrix<double> pooled(fa.rows(), n);
  pooled << fa, fb;

  Matrix<double> d2(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double v = (pooled.col(i) - pooled.col(j)).squaredNorm();
      d2(i, j) = v;
      d2(j, i) = v;
    }
  }
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index j = 1; j < n; ++j)
    for (Index i = 0; i < j; ++i) dist.push_back(std::sqrt(d2(i, j)));
  double bandwidth = 1.0;
  if (!dist.empty()) {
    const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    double median = *mid;
    if (dist.size() % 2 == 0) median = 0.5 * (median + *std::max_element(dist.begin(), mid));
    if (median > 0) bandwidth = median;
  }
  const Matrix<double> k = (-d2.array() / (2 * bandwidth * bandwidth)).exp().matrix();
  const double kaa = k.topLeftCorner(na, na).sum() / static_cast<double>(na * na);
  const double kbb = k.bottomRightCorner(nb, nb).sum() / static_cast<double>(nb * nb);
  const double kab = k.topRightCorner(na, nb).sum() / static_cast<double>(na * nb);
  return std::max(0.0, kaa + kbb - 2 * kab);
}

std::vector<Matrix<double>> values_of(const Dataset& ds) {
  std::vector<Matrix<double>> out;
  out.reserve(ds.size());
  for (const Sample& s : ds.samples) out.push_back(s.values);
  return out;
}

double mmd_score(const Dataset& a, const Dataset& b) {
  const auto va = values_of(a), vb = values_of(b);
  return mmd_score(std::span<const Matrix<double>>(va), std::span<const Matrix<double>>(vb));
}

}  // namespace awt
