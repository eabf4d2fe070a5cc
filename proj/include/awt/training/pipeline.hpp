#pragma once

#include "awt/data/preprocess.hpp"
#include "awt/training/checkpoint.hpp"

namespace awt {

struct DomainSplit {
  Dataset train;
  Dataset test;
  ChannelStats stats;  // computed on `train`, applied to both parts
};

/// preprocess -> stratified split -> standardize with training statistics.
DomainSplit prepare_domain(const Dataset& raw, std::uint64_t split_seed, double train_fraction = 0.8);

struct PreparedData {
  DomainSplit inertia;
  DomainSplit trajectory;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;

  const DomainSplit& domain(Domain d) const { return d == Domain::inertia ? inertia : trajectory; }
};

PreparedData prepare(const Dataset& inertia, const Dataset& trajectory, std::uint64_t split_seed,
                     double train_fraction = 0.8);

/// Preprocesses and standardizes `raw` with existing statistics.
Dataset prepare_with(const Dataset& raw, const ChannelStats& stats);

Checkpoint make_checkpoint(Model model, const PreparedData& data);

}  // namespace awt
