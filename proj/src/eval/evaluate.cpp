#include "awt/eval/evaluate.hpp"

#include "awt/data/synth.hpp"
#include "awt/error.hpp"
#include "awt/eval/mmd.hpp"
#include "awt/numerics/adam.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace awt {

namespace {

constexpr std::size_t kChunk = 64;

std::vector<int> labels_of(const Dataset& ds) {
  std::vector<int> out;
  for (const Sample& s : ds.samples) out.push_back(s.label);
  return out;
}

}  // namespace

std::vector<Sample> translate_dataset(const Model& model, const Dataset& source, double target_rate_hz,
                                      DurationPolicy policy) {
  std::vector<Sample> out;
  out.reserve(source.size());
  const auto ptrs = pointers(source);
  const std::span<const Sample* const> all(ptrs);
  for (std::size_t start = 0; start < all.size(); start += kChunk) {
    const auto chunk = all.subspan(start, std::min(kChunk, all.size() - start));
    auto values = translate_samples(model, chunk, policy, target_rate_hz);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      Sample s;
      s.id = chunk[i]->id;
      s.domain = other(source.domain);
      s.label = chunk[i]->label;
      s.rate_hz = target_rate_hz;
      s.values = std::move(values[i]);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<Sample> naive_translation(const Dataset& source, double target_rate_hz) {
  const Domain target = other(source.domain);
  const Index channels = channels_for(target);
  std::vector<Sample> out;
  for (const Sample& src : source.samples) {
    const Index steps = translation_steps(src.length(), src.rate_hz, target_rate_hz, DurationPolicy::rate_scaled);
    const Matrix<double> r = resample(src.values, std::max<Index>(2, decoder_output_length(steps)));
    Sample s;
    s.id = src.id;
    s.domain = target;
    s.label = src.label;
    s.rate_hz = target_rate_hz;
    s.values = Matrix<double>::Zero(channels, r.cols());
    const Index shared = std::min(channels, r.rows());
    s.values.topRows(shared) = r.topRows(shared);
    out.push_back(std::move(s));
  }
  return out;
}

TranslatedEval eval_translated(const ProbeClassifier& probe, const Model& model, const Dataset& source_test,
                               double target_rate_hz, const PairedTargets* paired) {
  if (probe.domain != other(source_test.domain)) {
    throw ValidationError("eval_translated: probe domain must be the translation target domain");
  }
  TranslatedEval out;
  out.source = source_test.domain;
  const std::vector<Sample> translated = translate_dataset(model, source_test, target_rate_hz);
  const auto ptrs = pointers(translated);
  out.result = evaluate_probe(probe, std::span<const Sample* const>(ptrs));

  if (paired && paired->manifest && paired->targets) {
    std::map<std::string, const Sample*> by_id;
    for (const Sample& s : paired->targets->samples) by_id[s.id] = &s;
    std::map<std::string, std::string> partner;
    for (const auto& p : paired->manifest->pairs) {
      if (source_test.domain == Domain::inertia) partner[p.inertia_id] = p.trajectory_id;
      else partner[p.trajectory_id] = p.inertia_id;
    }
    double total = 0;
    for (const Sample& t : translated) {
      const auto p = partner.find(t.id);
      if (p == partner.end()) continue;
      const auto target = by_id.find(p->second);
      if (target == by_id.end()) continue;
      const Matrix<double>& truth = target->second->values;
      const Matrix<double> aligned = resample(t.values, truth.cols());
      total += (aligned - truth).cwiseAbs().mean();
      ++out.paired_count;
    }
    if (out.paired_count) out.paired_l1 = total / static_cast<double>(out.paired_count);
  }
  return out;
}

double linear_probe_cv(const Matrix<double>& features, std::span<const int> labels, int class_count,
                       const LinearProbeConfig& cfg) {
  const Index n = features.cols();
  if (n != static_cast<Index>(labels.size())) throw ValidationError("linear_probe_cv: label count mismatch");
  if (cfg.folds < 2 || n < cfg.folds) throw ValidationError("linear_probe_cv: need at least `folds` samples");
  std::mt19937_64 rng(cfg.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  double correct = 0;
  for (int fold = 0; fold < cfg.folds; ++fold) {
    std::vector<Index> train, test;
    for (std::size_t i = 0; i < order.size(); ++i) {
      (static_cast<int>(i % static_cast<std::size_t>(cfg.folds)) == fold ? test : train).push_back(order[i]);
    }
    Matrix<double> xtr(features.rows(), static_cast<Index>(train.size()));
    std::vector<int> ytr;
    for (std::size_t i = 0; i < train.size(); ++i) {
      xtr.col(static_cast<Index>(i)) = features.col(train[i]);
      ytr.push_back(labels[static_cast<std::size_t>(train[i])]);
    }
    const Vector<double> mean = xtr.rowwise().mean();
    Vector<double> sd = ((xtr.colwise() - mean).array().square().rowwise().mean()).sqrt().matrix();
    for (Index r = 0; r < sd.size(); ++r) sd(r) = sd(r) > 1e-12 ? sd(r) : 1.0;
    const auto normalize = [&](const Matrix<double>& m) -> Matrix<double> {
      return ((m.colwise() - mean).array().colwise() / sd.array()).matrix();
    };
    const Matrix<double> xn = normalize(xtr);

    ParamBlock<double> w("probe.weight", class_count, features.rows());
    ParamBlock<double> b("probe.bias", class_count, 1);
    std::vector<ParamBlock<double>*> blocks{&w, &b};
    for (int step = 0; step < cfg.steps; ++step) {
      Tape<double> tape;
      const Var logits = affine(tape, tape.constant(Tensor3<double>::flat(xn)), tape.parameter(w), tape.parameter(b));
      const Var loss = softmax_xent(tape, logits, std::span<const int>(ytr));
      tape.backward(loss);
      zero_grads(blocks);
      collect_grads(tape, blocks);
      adam_step(blocks, cfg.lr);
    }
    for (Index t : test) {
      const Vector<double> x = normalize(features.col(t));
      Index best = 0;
      (w.value * x + b.value).col(0).maxCoeff(&best);
      correct += best == labels[static_cast<std::size_t>(t)] ? 1 : 0;
    }
  }
  return correct / static_cast<double>(n);
}

double centroid_accuracy(const Matrix<double>& inertia_latents, std::span<const int> inertia_labels,
                         const Matrix<double>& trajectory_latents, std::span<const int> trajectory_labels,
                         int class_count) {
  Matrix<double> centroids = Matrix<double>::Zero(inertia_latents.rows(), class_count);
  std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
  for (Index i = 0; i < inertia_latents.cols(); ++i) {
    const int y = inertia_labels[static_cast<std::size_t>(i)];
    centroids.col(y) += inertia_latents.col(i);
    ++counts[static_cast<std::size_t>(y)];
  }
  std::vector<int> present;
  for (int k = 0; k < class_count; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) continue;
    centroids.col(k) /= counts[static_cast<std::size_t>(k)];
    present.push_back(k);
  }
  if (present.empty() || trajectory_latents.cols() == 0) return 0;
  double correct = 0;
  for (Index i = 0; i < trajectory_latents.cols(); ++i) {
    int best = present.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (int k : present) {
      const double d = (centroids.col(k) - trajectory_latents.col(i)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    correct += best == trajectory_labels[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  return correct / static_cast<double>(trajectory_latents.cols());
}

Matrix<double> latents(const Model& model, const Dataset& ds) {
  Matrix<double> out(kLatentDim, static_cast<Index>(ds.size()));
  const auto ptrs = pointers(ds);
  const std::span<const Sample* const> all(ptrs);
  for (std::size_t start = 0; start < all.size(); start += kChunk) {
    const auto chunk = all.subspan(start, std::min(kChunk, all.size() - start));
    out.middleCols(static_cast<Index>(start), static_cast<Index>(chunk.size())) =
        encode_samples(model, chunk).cast<double>();
  }
  return out;
}

LatentProbes latent_probes(const Model& model, const Dataset& test_inertia, const Dataset& test_trajectory,
                           const LinearProbeConfig& cfg) {
  if (test_inertia.empty() || test_trajectory.empty()) throw ValidationError("latent_probes: empty test set");
  const int k = model.config.class_count;
  const Matrix<double> li = latents(model, test_inertia);
  const Matrix<double> lt = latents(model, test_trajectory);
  const std::vector<int> yi = labels_of(test_inertia), yt = labels_of(test_trajectory);

  Matrix<double> pooled(kLatentDim, li.cols() + lt.cols());
  pooled << li, lt;
  std::vector<int> classes = yi, domains(yi.size(), 0);
  classes.insert(classes.end(), yt.begin(), yt.end());
  domains.insert(domains.end(), yt.size(), 1);

  LatentProbes out;
  out.class_probe_acc = linear_probe_cv(pooled, classes, k, cfg);
  out.domain_probe_acc = linear_probe_cv(pooled, domains, 2, cfg);
  out.class_probe_inertia = linear_probe_cv(li, yi, k, cfg);
  out.class_probe_trajectory = linear_probe_cv(lt, yt, k, cfg);
  out.centroid_acc = centroid_accuracy(li, yi, lt, yt, k);
  return out;
}

ProbeSet train_probes(const PreparedData& data, const ProbeConfig& cfg) {
  return ProbeSet{train_probe(data.inertia.train, cfg), train_probe(data.trajectory.train, cfg)};
}

MmdScores mmd_scores(const Model& model, const PreparedData& data) {
  const Dataset& ti = data.inertia.test;
  const Dataset& tt = data.trajectory.test;
  const auto real_i = values_of(ti), real_t = values_of(tt);
  const auto score = [](const std::vector<Sample>& a, const std::vector<Matrix<double>>& b) {
    std::vector<Matrix<double>> va;
    for (const Sample& s : a) va.push_back(s.values);
    return mmd_score(std::span<const Matrix<double>>(va), std::span<const Matrix<double>>(b));
  };
  MmdScores out;
  out.i2t = score(translate_dataset(model, ti, tt.rate_hz), real_t);
  out.i2t_naive = score(naive_translation(ti, tt.rate_hz), real_t);
  out.t2i = score(translate_dataset(model, tt, ti.rate_hz), real_i);
  out.t2i_naive = score(naive_translation(tt, ti.rate_hz), real_i);
  return out;
}

ArmReport evaluate_arm(const std::string& arm, const Model& model, const PreparedData& data, const ProbeSet& probes,
                       const LinearProbeConfig& lp, const PairingManifest* manifest) {
  ArmReport r;
  r.arm = arm;
  r.latent = latent_probes(model, data.inertia.test, data.trajectory.test, lp);
  const PairedTargets to_t{manifest, &data.trajectory.test};
  const PairedTargets to_i{manifest, &data.inertia.test};
  r.i2t = eval_translated(probes.trajectory, model, data.inertia.test, data.trajectory.test.rate_hz,
                          manifest ? &to_t : nullptr);
  r.t2i = eval_translated(probes.inertia, model, data.trajectory.test, data.inertia.test.rate_hz,
                          manifest ? &to_i : nullptr);
  r.real_inertia = evaluate_probe(probes.inertia, data.inertia.test);
  r.real_trajectory = evaluate_probe(probes.trajectory, data.trajectory.test);
  r.mmd = mmd_scores(model, data);
  return r;
}

TrainConfig arm_config(const TrainConfig& base, const std::string& arm) {
  TrainConfig c = base;
  if (arm == "full") {
    c.enable_cls = c.enable_gan = true;
  } else if (arm == "no_cls") {
    c.enable_cls = false;
    c.enable_gan = true;
  } else if (arm == "no_gan") {
    c.enable_cls = true;
    c.enable_gan = false;
  } else {
    throw ValidationError("unknown ablation arm '" + arm + "' (expected full, no_cls or no_gan)");
  }
  return c;
}

std::vector<ArmReport> ablation_suite(const TrainConfig& base, const PreparedData& data, const ProbeSet& probes,
                                      const LinearProbeConfig& lp, const ArmCallback& on_step) {
  std::vector<ArmReport> out;
  for (const std::string arm : {"full", "no_cls", "no_gan"}) {
    const TrainConfig cfg = arm_config(base, arm);
    TrainResult trained = train(cfg, data.inertia.train, data.trajectory.train, [&](const LossReport& r) {
      if (on_step) on_step(arm, r);
    });
    ArmReport report = evaluate_arm(arm, trained.model, data, probes, lp);
    report.config = cfg;
    report.log = std::move(trained.log);
    out.push_back(std::move(report));
  }
  return out;
}

}  // namespace awt
