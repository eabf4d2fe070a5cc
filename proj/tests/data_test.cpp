#include "awt/data/io.hpp"
#include "awt/data/preprocess.hpp"
#include "awt/data/synth.hpp"
#include "awt/error.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <fstream>
#include <map>
#include <numbers>
#include <set>

using namespace awt;
using awt::test::random_sample;

namespace {

Dataset labelled(Domain d, const std::vector<int>& counts, std::mt19937_64& rng) {
  Dataset ds;
  ds.domain = d;
  ds.rate_hz = d == Domain::inertia ? 60 : 200;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    ds.class_names.push_back("c" + std::to_string(k));
    for (int i = 0; i < counts[k]; ++i) {
      Sample s = random_sample(d, 20 + static_cast<Index>(rng() % 20), rng, static_cast<int>(k));
      s.id = "s" + std::to_string(k) + "_" + std::to_string(i);
      ds.samples.push_back(s);
    }
  }
  return ds;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string record(const std::string& id, const std::string& domain, int label, const std::string& name, int channels,
                   int rows = 16, double rate = 60) {
  std::string data = "[";
  for (int r = 0; r < rows; ++r) {
    data += r ? ",[" : "[";
    for (int c = 0; c < channels; ++c) data += (c ? "," : "") + std::to_string(r + c);
    data += "]";
  }
  data += "]";
  return "{\"id\":\"" + id + "\",\"domain\":\"" + domain + "\",\"label\":" + std::to_string(label) +
         ",\"class_name\":\"" + name + "\",\"rate_hz\":" + std::to_string(rate) + ",\"data\":" + data + "}\n";
}

Sample circle(double r, double omega, double rate, Index n) {
  Sample s;
  s.domain = Domain::trajectory;
  s.rate_hz = rate;
  s.values.resize(3, n);
  for (Index t = 0; t < n; ++t) {
    const double a = omega * static_cast<double>(t) / rate;
    s.values.col(t) << r * std::cos(a), r * std::sin(a), 0.0;
  }
  return s;
}

double correlation(const Matrix<double>& a, const Matrix<double>& b) {
  const Eigen::ArrayXd x = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()).array();
  const Eigen::ArrayXd y = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()).array();
  const Eigen::ArrayXd dx = x - x.mean(), dy = y - y.mean();
  return (dx * dy).sum() / std::sqrt((dx * dx).sum() * (dy * dy).sum());
}

}  // namespace

TEST_CASE("dataset save then load preserves every value") {
  std::mt19937_64 rng(1);
  Dataset ds = labelled(Domain::inertia, {3, 2}, rng);
  ds.samples[0].values(0, 0) = 0.1 + 0.2;
  ds.samples[1].values(2, 3) = 1e-300;
  test::TempDir dir("io");
  save_dataset(ds, dir / "i.jsonl");
  const Dataset back = load_dataset(dir / "i.jsonl", Domain::inertia);
  REQUIRE(back.size() == ds.size());
  CHECK(back.class_names == ds.class_names);
  CHECK(back.rate_hz == 60);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.samples[i].id == ds.samples[i].id);
    CHECK(back.samples[i].label == ds.samples[i].label);
    CHECK(back.samples[i].values == ds.samples[i].values);
  }
}

TEST_CASE("dataset loader rejects malformed files") {
  test::TempDir dir("io-bad");
  const auto expect_error = [&](const std::string& text, Domain d, const std::string& fragment) {
    write_text(dir / "f.jsonl", text);
    try {
      load_dataset(dir / "f.jsonl", d);
      FAIL("expected an error containing " << fragment);
    } catch (const ValidationError& e) {
      INFO(std::string(e.what()));
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  expect_error("", Domain::inertia, "empty");
  expect_error(record("a", "inertia", 0, "x", 3), Domain::inertia, "channels");
  expect_error(record("a", "trajectory", 0, "x", 3, 16, 200), Domain::inertia, "domain");
  expect_error(record("a", "inertia", 0, "x", 6) + "{not json\n", Domain::inertia, "f.jsonl:2:");
  expect_error(record("a", "inertia", 0, "x", 6) + record("b", "inertia", 2, "z", 6), Domain::inertia, "dense");
  expect_error(record("a", "inertia", 0, "x", 6) + record("b", "inertia", 0, "y", 6), Domain::inertia, "named both");
  expect_error(record("a", "inertia", 0, "x", 6) + record("a", "inertia", 0, "x", 6), Domain::inertia, "duplicate");
  expect_error(record("a", "inertia", 0, "x", 6) + record("b", "inertia", 0, "x", 6, 16, 100), Domain::inertia,
               "rate");
  CHECK_THROWS_AS(load_dataset(dir / "missing.jsonl", Domain::inertia), ValidationError);
}

TEST_CASE("manifest round trip") {
  PairingManifest m;
  m.pairs = {{"t1", "i1"}, {"t2", "i2"}};
  test::TempDir dir("manifest");
  save_manifest(m, dir / "pairs.json");
  const PairingManifest back = load_manifest(dir / "pairs.json");
  REQUIRE(back.pairs.size() == 2);
  CHECK(back.pairs[1].trajectory_id == "t2");
  CHECK(back.pairs[1].inertia_id == "i2");
  write_text(dir / "bad.json", "{}");
  CHECK_THROWS_AS(load_manifest(dir / "bad.json"), ValidationError);
}

TEST_CASE("moving average boundary widths and constants") {
  Sample s;
  s.domain = Domain::inertia;
  s.values = Matrix<double>::Zero(6, 5);
  s.values(0, 2) = 1;
  const Sample out = preprocess_inertial(s);
  const double expected[] = {1.0 / 3, 1.0 / 4, 1.0 / 5, 1.0 / 4, 1.0 / 3};
  for (Index t = 0; t < 5; ++t) CHECK(std::abs(out.values(0, t) - expected[t]) < 1e-15);

  // loop oracle over the clipped-window rule
  std::mt19937_64 rng(2);
  Sample r = random_sample(Domain::inertia, 23, rng);
  const Sample smoothed = preprocess_inertial(r);
  for (Index c = 0; c < 6; ++c)
    for (Index t = 0; t < 23; ++t) {
      double sum = 0;
      int n = 0;
      for (Index k = t - 2; k <= t + 2; ++k)
        if (k >= 0 && k < 23) {
          sum += r.values(c, k);
          ++n;
        }
      CHECK(std::abs(smoothed.values(c, t) - sum / n) < 1e-12);
    }

  Sample c = s;
  c.values.setConstant(2.5);
  CHECK(test::max_abs(preprocess_inertial(c).values.array() - 2.5) < 1e-15);

  Sample ramp = s;
  for (Index t = 0; t < 5; ++t) ramp.values.col(t).setConstant(static_cast<double>(t));
  CHECK(std::abs(preprocess_inertial(ramp).values(0, 2) - 2.0) < 1e-15);

  Sample wrong = s;
  wrong.domain = Domain::trajectory;
  CHECK_THROWS_AS(preprocess_inertial(wrong), ValidationError);
}

TEST_CASE("trajectory preprocessing moves the start to the origin") {
  Sample s;
  s.domain = Domain::trajectory;
  s.values = (Matrix<double>(3, 2) << 3, 4, 5, 6, 1, 1).finished();
  const Sample out = preprocess_trajectory(s);
  CHECK(out.values == (Matrix<double>(3, 2) << 0, 1, 0, 1, 0, 0).finished());
  CHECK(preprocess_trajectory(out).values == out.values);
  Sample wrong = s;
  wrong.domain = Domain::inertia;
  CHECK_THROWS_AS(preprocess_trajectory(wrong), ValidationError);
}

TEST_CASE("standardize, clamp and invert") {
  std::mt19937_64 rng(3);
  Dataset ds = labelled(Domain::trajectory, {4, 4}, rng);
  for (Sample& s : ds.samples) s.values.row(2).setConstant(1.5);
  ds = preprocess(ds);
  const Dataset original = ds;
  const auto [scaled, stats] = standardize(ds);
  CHECK(stats.clamped[2]);
  CHECK_FALSE(stats.clamped[0]);
  for (Index c = 0; c < 3; ++c) {
    double sum = 0, sq = 0, n = 0;
    for (const Sample& s : scaled.samples) {
      sum += s.values.row(c).sum();
      sq += s.values.row(c).squaredNorm();
      n += static_cast<double>(s.length());
    }
    CHECK(std::abs(sum / n) < 1e-6);
    if (c < 2) CHECK(std::abs(sq / n - 1) < 1e-6);
  }
  for (const Sample& s : scaled.samples) CHECK(s.values.row(2).isZero(0));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(test::max_abs(invert_stats(scaled.samples[i].values, stats) - original.samples[i].values) < 1e-6);
    // zero-origin property survives the round trip
    CHECK(invert_stats(scaled.samples[i].values, stats).col(0).norm() < 1e-6);
  }
  CHECK_THROWS_AS(standardize(Dataset{}), ValidationError);
}

TEST_CASE("stratified split") {
  std::mt19937_64 rng(4);
  const Dataset ds = labelled(Domain::inertia, {50, 50}, rng);
  const auto [train, test] = split(ds, 0.8, 9);
  CHECK(train.size() == 80);
  CHECK(test.size() == 20);
  std::set<std::string> train_ids;
  for (const Sample& s : train.samples) train_ids.insert(s.id);
  for (const Sample& s : test.samples) CHECK(train_ids.count(s.id) == 0);

  const Dataset uneven = labelled(Domain::inertia, {7, 13, 3}, rng);
  const auto [tr, te] = split(uneven, 0.8, 2);
  std::map<int, int> per_class;
  for (const Sample& s : tr.samples) ++per_class[s.label];
  CHECK(std::abs(per_class[0] - 0.8 * 7) <= 1);
  CHECK(std::abs(per_class[1] - 0.8 * 13) <= 1);
  CHECK(std::abs(per_class[2] - 0.8 * 3) <= 1);
  CHECK(tr.size() + te.size() == uneven.size());

  const auto [again, _] = split(uneven, 0.8, 2);
  for (std::size_t i = 0; i < tr.size(); ++i) CHECK(again.samples[i].id == tr.samples[i].id);
  const auto [other_seed, __] = split(ds, 0.8, 10);
  bool differs = false;
  for (std::size_t i = 0; i < train.size(); ++i) differs = differs || other_seed.samples[i].id != train.samples[i].id;
  CHECK(differs);

  CHECK_THROWS_AS(split(labelled(Domain::inertia, {5, 1}, rng), 0.8, 1), ValidationError);
}

TEST_CASE("resample properties") {
  std::mt19937_64 rng(5);
  const Matrix<double> x = test::random_matrix(3, 17, rng);
  CHECK(test::max_abs(resample(x, 17) - x) < 1e-12);

  Matrix<double> ramp(1, 10);
  for (Index t = 0; t < 10; ++t) ramp(0, t) = 2.0 * static_cast<double>(t) - 1;
  for (Index n : {2, 5, 33}) {
    const Matrix<double> r = resample(ramp, n);
    for (Index k = 0; k < n; ++k) {
      CHECK(std::abs(r(0, k) - (-1 + 18.0 * static_cast<double>(k) / static_cast<double>(n - 1))) < 1e-12);
    }
  }

  // down-then-up error is bounded by the total variation divided by the short length
  const Matrix<double> y = test::random_matrix(2, 60, rng);
  const Matrix<double> back = resample(resample(y, 20), 60);
  for (Index c = 0; c < 2; ++c) {
    const double tv = (y.row(c).rightCols(59) - y.row(c).leftCols(59)).cwiseAbs().sum();
    CHECK((back.row(c) - y.row(c)).cwiseAbs().maxCoeff() <= tv / 20 + 1e-12);
  }
  CHECK_THROWS_AS(resample(Matrix<double>::Zero(2, 1), 5), ValidationError);
}

TEST_CASE("kinematic oracle on a circle") {
  const double r = 2.0, omega = 3.0, rate = 200;
  const Index n = 200;
  const Sample c = circle(r, omega, rate, n);
  std::mt19937_64 rng(6);
  const double dt = 1.0 / rate;
  const Sample out = kinematic_oracle(c, dt, n, {}, rng);
  CHECK(out.channels() == 6);
  CHECK(out.domain == Domain::inertia);
  for (Index t = 1; t + 1 < n; ++t) {
    const double mag = out.values.block(0, t, 3, 1).norm();
    CHECK(std::abs(mag - r * omega * omega) < 10 * r * std::pow(omega, 4) * dt * dt);
    // heading at the two end points comes from one-sided velocities
    if (t >= 2 && t + 2 < n) CHECK(std::abs(out.values(5, t) - omega) < 10 * omega * omega * dt);
  }
  CHECK(out.values.row(3).isZero(0));
  CHECK(out.values.row(4).isZero(0));
}

TEST_CASE("kinematic oracle on a straight line gives bias plus noise") {
  Sample line;
  line.domain = Domain::trajectory;
  line.values.resize(3, 50);
  for (Index t = 0; t < 50; ++t) line.values.col(t) << 0.1 * static_cast<double>(t), -0.05 * static_cast<double>(t), 0;
  std::mt19937_64 rng(7);
  const Sample clean = kinematic_oracle(line, 0.01, 50, {}, rng);
  CHECK(test::max_abs(clean.values.topRows(3)) < 1e-9);
  CHECK(test::max_abs(clean.values.row(5)) < 1e-9);
  const Sample noisy = kinematic_oracle(line, 0.01, 50, {0.0, 0.5}, rng);
  for (Index ch = 0; ch < 3; ++ch) {
    CHECK((noisy.values.row(ch).array() - noisy.values(ch, 0)).abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("kinematic oracle acceleration is linear in the trajectory") {
  std::mt19937_64 rng(8);
  Sample a = circle(1.0, 2.0, 100, 40), b = circle(0.5, -5.0, 100, 40);
  b.values.row(2) = test::random_matrix(1, 40, rng);
  Sample sum = a;
  sum.values = 2.0 * a.values - 3.0 * b.values;
  const auto acc = [&](const Sample& s) { return Matrix<double>(kinematic_oracle(s, 0.01, 55, {}, rng).values.topRows(3)); };
  CHECK(test::max_abs(acc(sum) - (2.0 * acc(a) - 3.0 * acc(b))) < 1e-10 * (1 + test::max_abs(acc(sum))));
  CHECK(kinematic_oracle(a, 0.01, 55, {}, rng).values == kinematic_oracle(a, 0.01, 55, {}, rng).values);
  CHECK_THROWS_AS(kinematic_oracle(a, 0.0, 55, {}, rng), ValidationError);
}

TEST_CASE("synthetic data: counts, pairing, determinism and shape similarity") {
  SynthConfig cfg;
  cfg.class_count = 4;
  cfg.samples_per_class = 12;
  const SynthData d = synth_generate(cfg);
  REQUIRE(d.trajectory.size() == 48);
  REQUIRE(d.inertia.size() == 48);
  std::map<int, int> per_class;
  for (const Sample& s : d.trajectory.samples) ++per_class[s.label];
  for (int k = 0; k < 4; ++k) CHECK(per_class[k] == 12);

  std::set<std::string> traj_ids, inertia_ids;
  for (const auto& p : d.pairs.pairs) {
    CHECK(traj_ids.insert(p.trajectory_id).second);
    CHECK(inertia_ids.insert(p.inertia_id).second);
  }
  CHECK(traj_ids.size() == 48);
  for (const Sample& s : d.trajectory.samples) CHECK(traj_ids.count(s.id) == 1);
  for (const Sample& s : d.inertia.samples) {
    CHECK(inertia_ids.count(s.id) == 1);
    CHECK_NOTHROW(validate_sample(s));
    CHECK(s.rate_hz == cfg.inertia_rate_hz);
  }
  for (const Sample& s : d.trajectory.samples) {
    CHECK(s.length() >= cfg.min_length);
    CHECK(s.length() <= cfg.max_length);
  }

  const SynthData again = synth_generate(cfg);
  for (std::size_t i = 0; i < 48; ++i) {
    CHECK(again.trajectory.samples[i].values == d.trajectory.samples[i].values);
    CHECK(again.inertia.samples[i].values == d.inertia.samples[i].values);
  }
  cfg.seed = 2;
  CHECK(synth_generate(cfg).trajectory.samples[0].values != d.trajectory.samples[0].values);

  // same-class planar shapes agree after resampling; samples still differ
  std::vector<const Sample*> class0;
  for (const Sample& s : d.trajectory.samples)
    if (s.label == 0) class0.push_back(&s);
  const Matrix<double> a = resample(class0[0]->values.topRows(2), 64);
  const Matrix<double> b = resample(class0[1]->values.topRows(2), 64);
  CHECK(correlation(a, b) > 0.7);
  CHECK(test::max_abs(a - b) > 1e-3);
}

TEST_CASE("synthetic minority class keeps the requested fraction") {
  SynthConfig cfg;
  cfg.class_count = 3;
  cfg.samples_per_class = 40;
  cfg.minority_class = 1;
  cfg.minority_fraction = 0.25;
  const SynthData d = synth_generate(cfg);
  std::map<int, int> per_class;
  for (const Sample& s : d.inertia.samples) ++per_class[s.label];
  CHECK(per_class[0] == 40);
  CHECK(per_class[1] == 10);
  CHECK(per_class[2] == 40);
  cfg.class_count = 1;
  CHECK_THROWS_AS(synth_generate(cfg), ValidationError);
}
