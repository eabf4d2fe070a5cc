#include "awt/data/preprocess.hpp"

#include "awt/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace awt {

Sample preprocess_inertial(Sample s) {
  if (s.domain != Domain::inertia) throw ValidationError("preprocess_inertial: sample '" + s.id + "' is not inertial");
  const Index len = s.length();
  const Index half = kMovingAverageWindow / 2;
  Matrix<double> out(s.channels(), len);
  for (Index t = 0; t < len; ++t) {
    const Index lo = std::max<Index>(0, t - half);
    const Index hi = std::min<Index>(len - 1, t + half);
    out.col(t) = s.values.middleCols(lo, hi - lo + 1).rowwise().sum() / static_cast<double>(hi - lo + 1);
  }
  s.values = std::move(out);
  return s;
}

Sample preprocess_trajectory(Sample s) {
  if (s.domain != Domain::trajectory) {
    throw ValidationError("preprocess_trajectory: sample '" + s.id + "' is not a trajectory");
  }
  if (s.length() == 0) return s;
  const Vector<double> origin = s.values.col(0);
  s.values.colwise() -= origin;
  return s;
}

Dataset preprocess(Dataset ds) {
  for (Sample& s : ds.samples) {
    s = ds.domain == Domain::inertia ? preprocess_inertial(std::move(s)) : preprocess_trajectory(std::move(s));
  }
  return ds;
}

ChannelStats compute_stats(const Dataset& ds) {
  if (ds.empty()) throw ValidationError("standardize: empty dataset");
  const Index channels = ds.samples.front().channels();
  Vector<double> sum = Vector<double>::Zero(channels);
  double count = 0;
  for (const Sample& s : ds.samples) {
    sum += s.values.rowwise().sum();
    count += static_cast<double>(s.length());
  }
  ChannelStats st;
  st.mean = sum / count;
  Vector<double> sq = Vector<double>::Zero(channels);
  for (const Sample& s : ds.samples) sq += (s.values.colwise() - st.mean).cwiseAbs2().rowwise().sum();
  st.std = (sq / count).cwiseSqrt();
  st.clamped.assign(static_cast<std::size_t>(channels), false);
  for (Index c = 0; c < channels; ++c) {
    if (!(st.std(c) > 1e-12)) {
      st.std(c) = 1.0;
      st.clamped[static_cast<std::size_t>(c)] = true;
    }
  }
  return st;
}

Matrix<double> apply_stats(const Matrix<double>& values, const ChannelStats& stats) {
  if (values.rows() != stats.mean.size()) throw ValidationError("standardize: channel count mismatch");
  return (values.colwise() - stats.mean).array().colwise() / stats.std.array();
}

Matrix<double> invert_stats(const Matrix<double>& values, const ChannelStats& stats) {
  if (values.rows() != stats.mean.size()) throw ValidationError("standardize: channel count mismatch");
  Matrix<double> out = values.array().colwise() * stats.std.array();
  return out.colwise() + stats.mean;
}

void apply_stats(Dataset& ds, const ChannelStats& stats) {
  for (Sample& s : ds.samples) s.values = apply_stats(s.values, stats);
}

std::pair<Dataset, ChannelStats> standardize(Dataset ds) {
  ChannelStats st = compute_stats(ds);
  apply_stats(ds, st);
  return {std::move(ds), std::move(st)};
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0 && train_fraction < 1)) throw ValidationError("split: train fraction must be in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) by_class[ds.samples[i].label].push_back(i);
  std::vector<bool> in_train(ds.samples.size(), false);
  std::mt19937_64 rng(seed);
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2) {
      throw ValidationError("split: class " + std::to_string(label) + " has fewer than 2 samples");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<long>(idx.size());
    const long keep = std::clamp<long>(std::lround(static_cast<double>(n) * train_fraction), 1, n - 1);
    for (long k = 0; k < keep; ++k) in_train[idx[static_cast<std::size_t>(k)]] = true;
  }
  Dataset train, test;
  for (Dataset* d : {&train, &test}) {
    d->domain = ds.domain;
    d->rate_hz = ds.rate_hz;
    d->class_names = ds.class_names;
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) (in_train[i] ? train : test).samples.push_back(ds.samples[i]);
  return {std::move(train), std::move(test)};
}

}  // namespace awt
