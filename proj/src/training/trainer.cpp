#include "awt/training/trainer.hpp"

#include "awt/error.hpp"
#include "awt/numerics/adam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace awt {

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (cfg.disc_updates_per_iter < 1) throw ValidationError("train: disc_updates_per_iter must be >= 1");
  if (cfg.epochs < 0 || cfg.max_steps < 0) throw ValidationError("train: epochs and max_steps must be >= 0");
  if (!(cfg.lr > 0)) throw ValidationError("train: lr must be positive");
}

std::string format_record(const LossReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g", static_cast<long long>(r.step), r.l_rec, r.l_cls,
                r.l_gan_g, r.l_gan_d);
  return buf;
}

void MetricsLog::write(std::ostream& out) const {
  for (const LossReport& r : records) out << format_record(r) << '\n';
}

// ---------------------------------------------------------------------------

const Sample* UnpairedBatcher::Stream::take() {
  if (pos == order.size()) {
    std::shuffle(order.begin(), order.end(), rng);
    pos = 0;
  }
  return &data->samples[order[pos++]];
}

UnpairedBatcher::UnpairedBatcher(const Dataset& inertia, const Dataset& trajectory, int batch_size,
                                 std::uint64_t seed)
    : batch_size_(static_cast<std::size_t>(batch_size)) {
  if (inertia.empty() || trajectory.empty()) throw ValidationError("make_unpaired_batches: empty dataset");
  if (batch_size < 1) throw ValidationError("make_unpaired_batches: batch_size must be >= 1");
  std::uint32_t i = 0;
  for (auto [stream, ds] : {std::pair{&inertia_, &inertia}, std::pair{&trajectory_, &trajectory}}) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), ++i};
    stream->data = ds;
    stream->rng.seed(seq);
    stream->order.resize(ds->size());
    for (std::size_t k = 0; k < ds->size(); ++k) stream->order[k] = k;
    stream->pos = ds->size();  // forces a shuffle on first draw
  }
  longest_ = std::max(inertia.size(), trajectory.size());
  batches_per_epoch_ = (longest_ + batch_size_ - 1) / batch_size_;
}

UnpairedBatcher::Pair UnpairedBatcher::next() {
  // Keep the longer domain on an exact one-pass schedule.
  const std::size_t used = in_epoch_ * batch_size_;
  const std::size_t count = std::min(batch_size_, longest_ - used);
  Pair out;
  out.first.reserve(count);
  out.second.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.first.push_back(inertia_.take());
    out.second.push_back(trajectory_.take());
  }
  in_epoch_ = (in_epoch_ + 1) % batches_per_epoch_;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Training allocates and frees many large temporaries per step; keeping them
// on the heap instead of fresh mmaps avoids most page-fault overhead.
void tune_allocator() {
#if defined(__GLIBC__)
  static const bool once = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)once;
#endif
}

using Blocks = std::vector<ParamBlock<Real>*>;

Blocks concat(std::initializer_list<Blocks> parts) {
  Blocks out;
  for (const Blocks& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<const ParamBlock<Real>*> as_const(const Blocks& b) { return {b.begin(), b.end()}; }

void check_finite(double loss, const char* what) {
  if (!std::isfinite(loss)) throw NumericError(std::string(what) + " is not finite");
}

// Runs backward, moves gradients into `blocks` and applies one Adam update.
double finish_step(Tape<Real>& tape, Var loss, const Blocks& blocks, const TrainConfig& cfg, const char* what) {
  const double value = tape.scalar(loss);
  check_finite(value, what);
  tape.backward(loss);
  if (cfg.check_finite && !tape.all_finite()) throw NumericError(std::string(what) + ": non-finite activation or gradient");
  zero_grads(blocks);
  collect_grads(tape, blocks);
  adam_step(blocks, cfg.lr);
  return value;
}

std::span<const Index> lengths_of(const Batch<Real>& b) { return {b.lengths.data(), b.lengths.size()}; }
std::span<const int> labels_of(const Batch<Real>& b) { return {b.labels.data(), b.labels.size()}; }

Var encode_batch(Tape<Real>& tape, const Model& model, const Batch<Real>& b) {
  return encode(tape, model.encoder(b.domain), tape.constant(b.values), lengths_of(b));
}

}  // namespace

double rec_step(Model& model, const Batch<Real>& inertia, const Batch<Real>& trajectory, const TrainConfig& cfg) {
  const Blocks blocks = concat({model.encoder_blocks(Domain::inertia), model.decoder_blocks(Domain::inertia),
                                model.encoder_blocks(Domain::trajectory), model.decoder_blocks(Domain::trajectory)});
  Tape<Real> tape(as_const(blocks));
  std::optional<Var> total;
  for (const Batch<Real>* b : {&inertia, &trajectory}) {
    const Var x = tape.constant(b->values);
    const Var z = encode(tape, model.encoder(b->domain), x, lengths_of(*b));
    std::vector<Index> steps;
    for (Index len : b->lengths) steps.push_back(encoder_feature_length(len));
    const Var y = decode(tape, model.decoder(b->domain), z, std::span<const Index>(steps));
    // The decoder spans 8 * max(steps) == padded length, so shapes agree.
    const Var l = l1_loss(tape, y, x, lengths_of(*b));
    total = total ? add(tape, *total, l) : l;
  }
  return finish_step(tape, *total, blocks, cfg, "l_rec");
}

double cls_step(Model& model, const Batch<Real>& inertia, const Batch<Real>& trajectory, const TrainConfig& cfg) {
  const Blocks blocks = concat({model.encoder_blocks(Domain::inertia), model.encoder_blocks(Domain::trajectory),
                                model.classifier_blocks()});
  for (const Batch<Real>* b : {&inertia, &trajectory}) {
    for (int y : b->labels) {
      if (y < 0 || y >= model.config.class_count) {
        throw ValidationError("cls_step: label " + std::to_string(y) + " outside [0, " +
                              std::to_string(model.config.class_count) + ")");
      }
    }
  }
  Tape<Real> tape(as_const(blocks));
  const Var li = softmax_xent(tape, classifier_logits(tape, model.classifier, encode_batch(tape, model, inertia)),
                              labels_of(inertia));
  const Var lt = softmax_xent(tape, classifier_logits(tape, model.classifier, encode_batch(tape, model, trajectory)),
                              labels_of(trajectory));
  return finish_step(tape, add(tape, li, lt), blocks, cfg, "l_cls");
}

double gan_gen_step(Model& model, const Batch<Real>& inertia, const Batch<Real>& trajectory, const TrainConfig& cfg) {
  const Blocks blocks = concat({model.encoder_blocks(Domain::inertia), model.encoder_blocks(Domain::trajectory)});
  Tape<Real> tape(as_const(blocks));
  const Var si = discriminate(tape, model.disc, encode_batch(tape, model, inertia));
  const Var st = discriminate(tape, model.disc, encode_batch(tape, model, trajectory));
  return finish_step(tape, lsgan_gen_loss(tape, si, st), blocks, cfg, "l_gan_g");
}

Matrix<Real> latents_of(const Model& model, const Batch<Real>& batch) {
  Tape<Real> tape = Tape<Real>::inference();
  return tape.data(encode_batch(tape, model, batch));
}

double gan_disc_update(Model& model, const Matrix<Real>& latents_inertia, const Matrix<Real>& latents_trajectory,
                       const TrainConfig& cfg) {
  const Blocks blocks = model.disc_blocks();
  Tape<Real> tape(as_const(blocks));
  const Var si = discriminate(tape, model.disc, tape.constant(Tensor3<Real>::flat(latents_inertia)));
  const Var st = discriminate(tape, model.disc, tape.constant(Tensor3<Real>::flat(latents_trajectory)));
  return finish_step(tape, lsgan_disc_loss(tape, si, st), blocks, cfg, "l_gan_d");
}

double gan_disc_step(Model& model, const Batch<Real>& inertia, const Batch<Real>& trajectory, const TrainConfig& cfg) {
  return gan_disc_update(model, latents_of(model, inertia), latents_of(model, trajectory), cfg);
}

TrainResult train(const TrainConfig& cfg, const Dataset& inertia, const Dataset& trajectory,
                  const StepCallback& on_step) {
  validate(cfg);
  tune_allocator();
  if (inertia.domain != Domain::inertia || trajectory.domain != Domain::trajectory) {
    throw ValidationError("train: datasets must be (inertia, trajectory)");
  }
  if (inertia.empty() || trajectory.empty()) throw ValidationError("train: empty dataset");
  if (inertia.class_count() != trajectory.class_count()) {
    throw ValidationError("train: class counts differ between domains (" + std::to_string(inertia.class_count()) +
                          " vs " + std::to_string(trajectory.class_count()) + ")");
  }
  ModelConfig mc;
  mc.class_count = inertia.class_count();
  TrainResult out{init_model<Real>(mc, cfg.seed), {}};
  Model& model = out.model;

  UnpairedBatcher batches(inertia, trajectory, cfg.batch_size, cfg.effective_shuffle_seed());
  const std::int64_t per_epoch = static_cast<std::int64_t>(batches.batches_per_epoch());
  std::int64_t total = per_epoch * cfg.epochs;
  if (cfg.max_steps > 0) total = std::min<std::int64_t>(total, cfg.max_steps);

  for (std::int64_t step = 0; step < total; ++step) {
    const auto [bi, bt] = batches.next();
    const Batch<Real> xi = pad_and_mask<Real>(std::span<const Sample* const>(bi));
    const Batch<Real> xt = pad_and_mask<Real>(std::span<const Sample* const>(bt));
    LossReport r;
    r.step = step;
    r.l_rec = rec_step(model, xi, xt, cfg);
    if (cfg.enable_cls) r.l_cls = cls_step(model, xi, xt, cfg);
    if (cfg.enable_gan) {
      r.l_gan_g = gan_gen_step(model, xi, xt, cfg);
      const Matrix<Real> zi = latents_of(model, xi);
      const Matrix<Real> zt = latents_of(model, xt);
      for (int k = 0; k < cfg.disc_updates_per_iter; ++k) r.l_gan_d = gan_disc_update(model, zi, zt, cfg);
    }
    out.log.records.push_back(r);
    if (on_step) on_step(r);
  }
  return out;
}

}  // namespace awt
