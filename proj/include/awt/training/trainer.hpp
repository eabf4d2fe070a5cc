#pragma once

#include "awt/data/sample.hpp"
#include "awt/model/translater.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace awt {

using Real = float;
using Model = Translater<Real>;

struct TrainConfig {
  double lr = 2e-4;
  int batch_size = 64;
  int epochs = 1;
  int max_steps = 0;  // 0: run every epoch to completion
  int disc_updates_per_iter = 3;
  std::uint64_t seed = 1;  // model initialization
  std::optional<std::uint64_t> shuffle_seed;  // batch order; defaults to `seed`
  bool enable_cls = true;
  bool enable_gan = true;
  bool check_finite = true;
  DurationPolicy policy = DurationPolicy::rate_scaled;

  std::uint64_t effective_shuffle_seed() const { return shuffle_seed.value_or(seed); }
};

void validate(const TrainConfig& cfg);

struct LossReport {
  std::int64_t step = 0;
  double l_rec = 0;
  double l_cls = 0;
  double l_gan_g = 0;
  double l_gan_d = 0;
};

/// One record per iteration. Serialized as comma-separated
/// `step,l_rec,l_cls,l_gan_g,l_gan_d` lines with no header.
struct MetricsLog {
  std::vector<LossReport> records;
  void write(std::ostream& out) const;
};

std::string format_record(const LossReport& r);

/// Independent per-domain shuffles. One epoch is one pass over the larger
/// domain; the smaller one wraps around and is reshuffled when exhausted.
/// Batches of the two domains are aligned by position only.
class UnpairedBatcher {
 public:
  UnpairedBatcher(const Dataset& inertia, const Dataset& trajectory, int batch_size, std::uint64_t seed);

  std::size_t batches_per_epoch() const { return batches_per_epoch_; }

  using Pair = std::pair<std::vector<const Sample*>, std::vector<const Sample*>>;
  /// Next (inertia, trajectory) batch pair.
  Pair next();

 private:
  struct Stream {
    const Dataset* data = nullptr;
    std::vector<std::size_t> order;
    std::size_t pos = 0;
    std::mt19937_64 rng;
    const Sample* take();
  };
  Stream inertia_, trajectory_;
  std::size_t batch_size_;
  std::size_t longest_;
  std::size_t batches_per_epoch_;
  std::size_t in_epoch_ = 0;
};

/// L_rec: masked L1 reconstruction summed over both domains; updates the two
/// autoencoders only.
double rec_step(Model& model, const Batch<Real>& inertia, const Batch<Real>& trajectory, const TrainConfig& cfg);

/// L_cls: shared-classifier cross-entropy summed over both domains; updates
/// both encoders and the classifier.
double cls_step(Model& model, const Batch<Real>& inertia, const Batch<Real>& trajectory, const TrainConfig& cfg);

/// Encoder side of the least-squares game: each encoder is pushed towards the
/// other domain's target. Updates both encoders only.
double gan_gen_step(Model& model, const Batch<Real>& inertia, const Batch<Real>& trajectory, const TrainConfig& cfg);

/// Discriminator side; latents are computed without gradient flow into the
/// encoders. Updates the discriminator only.
double gan_disc_step(Model& model, const Batch<Real>& inertia, const Batch<Real>& trajectory, const TrainConfig& cfg);

/// Discriminator update on precomputed latents (64, B).
double gan_disc_update(Model& model, const Matrix<Real>& latents_inertia, const Matrix<Real>& latents_trajectory,
                       const TrainConfig& cfg);

/// Latents without recording gradients.
Matrix<Real> latents_of(const Model& model, const Batch<Real>& batch);

struct TrainResult {
  Model model;
  MetricsLog log;
};

using StepCallback = std::function<void(const LossReport&)>;

/// Alternating optimization: per iteration one rec step, one cls step, one
/// encoder adversarial step, then `disc_updates_per_iter` discriminator
/// updates. Throws NumericError on any non-finite loss.
TrainResult train(const TrainConfig& cfg, const Dataset& inertia, const Dataset& trajectory,
                  const StepCallback& on_step = {});

}  // namespace awt
