#pragma once

#include "awt/data/sample.hpp"
#include "awt/numerics/tensor.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace awt::test {

inline Matrix<double> random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

inline Sample random_sample(Domain d, Index length, std::mt19937_64& rng, int label = 0, double rate = 0) {
  Sample s;
  s.id = std::string(to_string(d)) + "-" + std::to_string(rng() % 100000);
  s.domain = d;
  s.label = label;
  s.rate_hz = rate > 0 ? rate : (d == Domain::inertia ? 60.0 : 200.0);
  s.values = random_matrix(channels_for(d), length, rng);
  return s;
}

inline double max_abs(const Matrix<double>& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

/// Fresh empty directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("awt-test-" + tag + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace awt::test
