#include "awt/training/pipeline.hpp"

namespace awt {

DomainSplit prepare_domain(const Dataset& raw, std::uint64_t split_seed, double train_fraction) {
  auto [train, test] = split(preprocess(raw), train_fraction, split_seed);
  DomainSplit out{std::move(train), std::move(test), {}};
  out.stats = compute_stats(out.train);
  apply_stats(out.train, out.stats);
  apply_stats(out.test, out.stats);
  return out;
}

PreparedData prepare(const Dataset& inertia, const Dataset& trajectory, std::uint64_t split_seed,
                     double train_fraction) {
  return {prepare_domain(inertia, split_seed, train_fraction), prepare_domain(trajectory, split_seed, train_fraction),
          split_seed, train_fraction};
}

Dataset prepare_with(const Dataset& raw, const ChannelStats& stats) {
  Dataset out = preprocess(raw);
  apply_stats(out, stats);
  return out;
}

Checkpoint make_checkpoint(Model model, const PreparedData& data) {
  Checkpoint ck{std::move(model), data.inertia.stats, data.trajectory.stats, data.inertia.train.rate_hz,
                data.trajectory.train.rate_hz, data.trajectory.train.class_names, data.split_seed,
                data.train_fraction};
  return ck;
}

}  // namespace awt
