#pragma once

#include "awt/data/io.hpp"
#include "awt/eval/probe.hpp"
#include "awt/training/pipeline.hpp"
#include "awt/training/trainer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace awt {

/// Translates every sample of `source` into the other domain. Labels and ids
/// carry over; the output rate is `target_rate_hz`.
std::vector<Sample> translate_dataset(const Model& model, const Dataset& source, double target_rate_hz,
                                      DurationPolicy policy = DurationPolicy::rate_scaled);

/// Baseline "translation" without a model: the source channels are resampled to
/// the rate-scaled length, truncated or zero-extended to the target channel count.
std::vector<Sample> naive_translation(const Dataset& source, double target_rate_hz);

/// Ground truth used only for evaluation: the manifest plus the target-domain
/// samples (in the same standardized space the translater decodes into).
struct PairedTargets {
  const PairingManifest* manifest = nullptr;
  const Dataset* targets = nullptr;
};

struct TranslatedEval {
  Domain source = Domain::inertia;
  Classification result;
  std::optional<double> paired_l1;  // mean |translated - true counterpart| after resampling
  std::size_t paired_count = 0;
};

/// Feeds translations of `source_test` to a probe of the target domain.
TranslatedEval eval_translated(const ProbeClassifier& probe, const Model& model, const Dataset& source_test,
                               double target_rate_hz, const PairedTargets* paired = nullptr);

struct LinearProbeConfig {
  int folds = 5;
  int steps = 300;
  double lr = 0.05;
  std::uint64_t seed = 1;
};

/// k-fold accuracy of an affine softmax classifier on columns of `features`.
/// Features are standardized with training-fold statistics; folds follow a
/// seeded permutation.
double linear_probe_cv(const Matrix<double>& features, std::span<const int> labels, int class_count,
                       const LinearProbeConfig& cfg);

/// Classifies each trajectory latent by the nearest inertial class centroid.
double centroid_accuracy(const Matrix<double>& inertia_latents, std::span<const int> inertia_labels,
                         const Matrix<double>& trajectory_latents, std::span<const int> trajectory_labels,
                         int class_count);

struct LatentProbes {
  double class_probe_acc = 0;  // pooled latents of both domains
  double domain_probe_acc = 0;
  double class_probe_inertia = 0;
  double class_probe_trajectory = 0;
  double centroid_acc = 0;

  double per_domain_class_probe_acc() const { return 0.5 * (class_probe_inertia + class_probe_trajectory); }
};

LatentProbes latent_probes(const Model& model, const Dataset& test_inertia, const Dataset& test_trajectory,
                           const LinearProbeConfig& cfg = {});

Matrix<double> latents(const Model& model, const Dataset& ds);

struct ProbeSet {
  ProbeClassifier inertia;
  ProbeClassifier trajectory;

  const ProbeClassifier& for_domain(Domain d) const { return d == Domain::inertia ? inertia : trajectory; }
};

/// Probes trained on the real training splits of both domains.
ProbeSet train_probes(const PreparedData& data, const ProbeConfig& cfg);

struct MmdScores {
  double i2t = 0;        // translated inertia vs real trajectories
  double i2t_naive = 0;  // resampled inertia vs real trajectories
  double t2i = 0;
  double t2i_naive = 0;
};

MmdScores mmd_scores(const Model& model, const PreparedData& data);

struct ArmReport {
  std::string arm;
  TrainConfig config;
  MetricsLog log;
  LatentProbes latent;
  TranslatedEval i2t, t2i;
  Classification real_inertia, real_trajectory;
  MmdScores mmd;
};

/// Runs every evaluation that needs only a trained model and the probes.
ArmReport evaluate_arm(const std::string& arm, const Model& model, const PreparedData& data, const ProbeSet& probes,
                       const LinearProbeConfig& lp = {}, const PairingManifest* manifest = nullptr);

using ArmCallback = std::function<void(const std::string& arm, const LossReport&)>;

/// Trains and evaluates the full, no-cls and no-gan arms with a shared seed.
std::vector<ArmReport> ablation_suite(const TrainConfig& base, const PreparedData& data, const ProbeSet& probes,
                                      const LinearProbeConfig& lp = {}, const ArmCallback& on_step = {});

/// TrainConfig of a named arm ("full", "no_cls", "no_gan") derived from `base`.
TrainConfig arm_config(const TrainConfig& base, const std::string& arm);

}  // namespace awt
