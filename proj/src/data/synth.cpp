#include "awt/data/synth.hpp"

#include "awt/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace awt {

namespace {

constexpr Index kTemplateDensity = 512;

std::mt19937_64 class_rng(std::uint64_t base, int label) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(label), 0x5eedu};
  return std::mt19937_64(seq);
}

// Uniform cubic B-spline segment: C2 and approximating, so curvature stays bounded.
Eigen::Vector2d bspline(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                        const Eigen::Vector2d& p3, double t) {
  const double u = 1 - t, t2 = t * t, t3 = t2 * t;
  return (u * u * u * p0 + (3 * t3 - 6 * t2 + 4) * p1 + (-3 * t3 + 3 * t2 + 3 * t + 1) * p2 + t3 * p3) / 6.0;
}

// Resamples a dense polyline to `points` positions evenly spaced in arc length.
Matrix<double> arc_length_resample(const Matrix<double>& dense, Index points) {
  const Index n = dense.cols();
  std::vector<double> s(static_cast<std::size_t>(n), 0.0);
  for (Index i = 1; i < n; ++i) s[i] = s[i - 1] + (dense.col(i) - dense.col(i - 1)).norm();
  const double total = s.back();
  Matrix<double> out(dense.rows(), points);
  Index seg = 0;
  for (Index k = 0; k < points; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(points - 1);
    while (seg < n - 2 && s[seg + 1] < target) ++seg;
    const double span = s[seg + 1] - s[seg];
    const double a = span > 0 ? std::clamp((target - s[seg]) / span, 0.0, 1.0) : 0.0;
    out.col(k) = (1 - a) * dense.col(seg) + a * dense.col(seg + 1);
  }
  return out;
}

// Linear lookup into a (C, N) polyline at fractional position u in [0, 1].
Vector<double> lookup(const Matrix<double>& curve, double u) {
  const double pos = std::clamp(u, 0.0, 1.0) * static_cast<double>(curve.cols() - 1);
  const auto i = std::min<Index>(static_cast<Index>(pos), curve.cols() - 2);
  const double a = pos - static_cast<double>(i);
  return (1 - a) * curve.col(i) + a * curve.col(i + 1);
}

std::string class_name_for(int label) {
  return label < 26 ? std::string(1, static_cast<char>('a' + label)) : "g" + std::to_string(label);
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.class_count < 2) throw ValidationError("synth: class_count must be >= 2");
  if (cfg.samples_per_class < 2) throw ValidationError("synth: samples_per_class must be >= 2");
  if (cfg.min_length < kMinSampleLength) throw ValidationError("synth: min_length must be >= 16");
  if (cfg.max_length < cfg.min_length) throw ValidationError("synth: max_length < min_length");
  if (!(cfg.trajectory_rate_hz > 0) || !(cfg.inertia_rate_hz > 0)) throw ValidationError("synth: rates must be positive");
  if (cfg.noise_std < 0 || cfg.bias_std < 0 || cfg.z_noise < 0) throw ValidationError("synth: noise must be >= 0");
  if (cfg.minority_class >= cfg.class_count) throw ValidationError("synth: minority_class out of range");
  if (!(cfg.minority_fraction > 0 && cfg.minority_fraction <= 1)) throw ValidationError("synth: minority_fraction must be in (0, 1]");
}

Matrix<double> glyph_template(int label, Index points) {
  if (points < 2) throw ValidationError("glyph_template: need at least 2 points");
  std::mt19937_64 rng = class_rng(0x9e3779b97f4a7c15ULL, label);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  const bool closed = label % 3 == 2;
  const int count = closed ? 5 : 6;
  std::vector<Eigen::Vector2d> ctrl;
  // Rejection keeps control points apart so strokes do not collapse.
  while (static_cast<int>(ctrl.size()) < count) {
    Eigen::Vector2d p(coord(rng), coord(rng));
    bool ok = true;
    for (const auto& q : ctrl) ok = ok && (p - q).norm() > 0.6;
    if (ok) ctrl.push_back(p);
  }
  // Open strokes repeat their end points so the curve starts and ends on them.
  std::vector<Eigen::Vector2d> pts;
  if (closed) {
    pts = ctrl;
    pts.insert(pts.end(), ctrl.begin(), ctrl.begin() + 3);
  } else {
    pts = {ctrl.front(), ctrl.front()};
    pts.insert(pts.end(), ctrl.begin(), ctrl.end());
    pts.insert(pts.end(), {ctrl.back(), ctrl.back()});
  }
  const Index segments = static_cast<Index>(pts.size()) - 3;
  const Index per_segment = 64;
  Matrix<double> dense(2, segments * per_segment + 1);
  for (Index seg = 0; seg < segments; ++seg) {
    const auto i = static_cast<std::size_t>(seg);
    for (Index k = 0; k <= per_segment; ++k) {
      dense.col(seg * per_segment + k) =
          bspline(pts[i], pts[i + 1], pts[i + 2], pts[i + 3], static_cast<double>(k) / per_segment);
    }
  }
  return arc_length_resample(dense, points);
}

Matrix<double> resample(const Matrix<double>& values, Index target_length) {
  const Index len = values.cols();
  if (len < 2 || target_length < 2) throw ValidationError("resample: lengths must be >= 2");
  if (target_length == len) return values;
  Matrix<double> out(values.rows(), target_length);
  for (Index k = 0; k < target_length; ++k) {
    const double pos = static_cast<double>(k) * static_cast<double>(len - 1) / static_cast<double>(target_length - 1);
    const auto i = std::min<Index>(static_cast<Index>(pos), len - 2);
    const double a = pos - static_cast<double>(i);
    out.col(k) = (1 - a) * values.col(i) + a * values.col(i + 1);
  }
  return out;
}

Sample kinematic_oracle(const Sample& trajectory, double dt, Index target_length, const OracleNoise& noise,
                        std::mt19937_64& rng) {
  if (trajectory.domain != Domain::trajectory || trajectory.channels() != 3) {
    throw ValidationError("kinematic_oracle: input must be a 3-channel trajectory");
  }
  if (trajectory.length() < 3 || target_length < 3) throw ValidationError("kinematic_oracle: need at least 3 samples");
  if (!(dt > 0)) throw ValidationError("kinematic_oracle: dt must be positive");
  const Matrix<double> p = resample(trajectory.values, target_length);
  const Index n = target_length;
  const double inv_dt2 = 1.0 / (dt * dt);

  Sample out;
  out.id = trajectory.id;
  out.domain = Domain::inertia;
  out.label = trajectory.label;
  out.rate_hz = 1.0 / dt;
  out.values = Matrix<double>::Zero(6, n);

  for (Index t = 0; t < n; ++t) {
    const Index c = std::clamp<Index>(t, 1, n - 2);
    out.values.block(0, t, 3, 1) = (p.col(c + 1) - 2 * p.col(c) + p.col(c - 1)) * inv_dt2;
  }

  std::vector<double> heading(static_cast<std::size_t>(n), 0.0);
  double previous = 0.0;
  for (Index t = 0; t < n; ++t) {
    const Index lo = std::max<Index>(t - 1, 0), hi = std::min<Index>(t + 1, n - 1);
    const Eigen::Vector2d v = (p.block(0, hi, 2, 1) - p.block(0, lo, 2, 1)) / (static_cast<double>(hi - lo) * dt);
    double h = v.norm() > 1e-12 ? std::atan2(v.y(), v.x()) : previous;
    if (t > 0) {
      while (h - previous > std::numbers::pi) h -= 2 * std::numbers::pi;
      while (h - previous < -std::numbers::pi) h += 2 * std::numbers::pi;
    }
    heading[static_cast<std::size_t>(t)] = previous = h;
  }
  for (Index t = 0; t < n; ++t) {
    const Index lo = std::max<Index>(t - 1, 0), hi = std::min<Index>(t + 1, n - 1);
    out.values(5, t) = (heading[static_cast<std::size_t>(hi)] - heading[static_cast<std::size_t>(lo)]) /
                       (static_cast<double>(hi - lo) * dt);
  }

  if (noise.noise_std > 0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    constexpr double phi = 0.9;
    const double innovation = std::sqrt(1 - phi * phi) * noise.noise_std;
    for (Index ch : {Index(3), Index(4)}) {
      double e = gauss(rng) * noise.noise_std;
      for (Index t = 0; t < n; ++t) {
        out.values(ch, t) += e;
        e = phi * e + innovation * gauss(rng);
      }
    }
    for (Index i = 0; i < out.values.size(); ++i) out.values.data()[i] += noise.noise_std * gauss(rng);
  }
  if (noise.bias_std > 0) {
    std::normal_distribution<double> gauss(0.0, noise.bias_std);
    for (Index ch = 0; ch < 6; ++ch) out.values.row(ch).array() += gauss(rng);
  }
  return out;
}

SynthData synth_generate(const SynthConfig& cfg) {
  validate(cfg);
  SynthData out;
  out.trajectory.domain = Domain::trajectory;
  out.trajectory.rate_hz = cfg.trajectory_rate_hz;
  out.inertia.domain = Domain::inertia;
  out.inertia.rate_hz = cfg.inertia_rate_hz;
  for (int k = 0; k < cfg.class_count; ++k) {
    out.trajectory.class_names.push_back(class_name_for(k));
    out.inertia.class_names.push_back(class_name_for(k));
  }

  const double dt_inertia = 1.0 / cfg.inertia_rate_hz;
  const OracleNoise noise{cfg.noise_std, cfg.bias_std};
  for (int k = 0; k < cfg.class_count; ++k) {
    std::mt19937_64 rng = class_rng(cfg.seed, k);
    const Matrix<double> glyph = glyph_template(k, kTemplateDensity);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
    std::uniform_int_distribution<Index> duration(cfg.min_length, cfg.max_length);

    int count = cfg.samples_per_class;
    if (k == cfg.minority_class) {
      count = std::max(2, static_cast<int>(std::lround(cfg.samples_per_class * cfg.minority_fraction)));
    }
    for (int i = 0; i < count; ++i) {
      const Index len = duration(rng);
      const double scale = 1 + cfg.scale_jitter * unit(rng);
      const double angle = cfg.rotation_jitter_deg * std::numbers::pi / 180.0 * unit(rng);
      const Eigen::Vector2d shift(cfg.translation_jitter * unit(rng), cfg.translation_jitter * unit(rng));
      const double a1 = unit(rng), a2 = unit(rng), f1 = phase(rng), f2 = phase(rng);
      const double z1 = unit(rng), z2 = unit(rng), g1 = phase(rng), g2 = phase(rng);

      // Monotone time warp from a positive speed profile.
      std::vector<double> progress(static_cast<std::size_t>(len), 0.0);
      for (Index t = 1; t < len; ++t) {
        const double tau = static_cast<double>(t) / static_cast<double>(len - 1);
        const double speed = std::max(
            0.3, 1 + cfg.warp_strength * (a1 * std::sin(2 * std::numbers::pi * tau + f1) +
                                          0.5 * a2 * std::sin(4 * std::numbers::pi * tau + f2)));
        progress[static_cast<std::size_t>(t)] = progress[static_cast<std::size_t>(t - 1)] + speed;
      }
      const double total = progress.back();

      Eigen::Matrix2d rot;
      rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
      Sample traj;
      traj.id = "traj-" + std::to_string(k) + "-" + std::to_string(i);
      traj.domain = Domain::trajectory;
      traj.label = k;
      traj.rate_hz = cfg.trajectory_rate_hz;
      traj.values.resize(3, len);
      for (Index t = 0; t < len; ++t) {
        const double u = progress[static_cast<std::size_t>(t)] / total;
        const Eigen::Vector2d xy = scale * (rot * lookup(glyph, u)) + shift;
        const double tau = static_cast<double>(t) / static_cast<double>(len - 1);
        traj.values(0, t) = xy.x();
        traj.values(1, t) = xy.y();
        traj.values(2, t) = cfg.z_noise * (z1 * std::sin(2 * std::numbers::pi * tau + g1) +
                                           0.5 * z2 * std::sin(3 * std::numbers::pi * tau + g2));
      }

      const Index inertia_len = std::max<Index>(
          kMinSampleLength,
          static_cast<Index>(std::lround(static_cast<double>(len) * cfg.inertia_rate_hz / cfg.trajectory_rate_hz)));
      Sample imu = kinematic_oracle(traj, dt_inertia, inertia_len, noise, rng);
      imu.id = "iner-" + std::to_string(k) + "-" + std::to_string(i);
      imu.rate_hz = cfg.inertia_rate_hz;

      out.pairs.pairs.push_back({traj.id, imu.id});
      out.trajectory.samples.push_back(std::move(traj));
      out.inertia.samples.push_back(std::move(imu));
    }
  }
  return out;
}

}  // namespace awt
