// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/codec/interleave.h"

#include <fmt/format.h>

#include "sfc/core/error.h"
#include "sfc/core/ops.h"

namespace sfc::codec {

std::vector<std::int64_t> InterleavePlan::ScanOrder() const {
  const auto f = static_cast<std::int64_t>(feature_slots.size());
  std::vector<std::int64_t> at_slot(length);
  for (std::int64_t i = 0; i < f; ++i) at_slot[feature_slots[i]] = i;
  for (std::size_t k = 0; k < query_slots.size(); ++k) at_slot[query_slots[k]] = f + k;
  if (direction == ScanDirection::kBackward) return {at_slot.rbegin(), at_slot.rend()};
  return at_slot;
}

std::string InterleavePlan::ToString() const {
  const char* names[] = {"tail", "band_start_end", "band_middle"};
  std::string s = fmt::format("{} {} {}:", names[static_cast<int>(strategy)],
                              stage == CodecStage::kEncoder ? "encoder" : "decoder",
                              direction == ScanDirection::kForward ? "fwd" : "bwd");
  const auto f = static_cast<std::int64_t>(feature_slots.size());
  for (std::int64_t src : ScanOrder()) {
    s += src < f ? fmt::format(" f{}", src) : fmt::format(" q{}", src - f);
  }
  return s;
}

InterleavePlan BuildInterleavePlan(const bands::BandConfig& bands, InterleaveStrategy strategy,
                                   ScanDirection direction, CodecStage stage,
                                   bool literal_start_index) {
  bands::Validate(bands);
  const std::int64_t nf = bands.num_bins, nk = bands.num_bands();
  if (strategy != InterleaveStrategy::kTail && !bands.IsPartition()) {
    throw ConfigError("interleave: band-based strategies need non-overlapping contiguous bands");
  }
  // after[k]: number of features (in frequency order) preceding token k.
  std::vector<std::int64_t> after(nk);
  const bool forward = direction == ScanDirection::kForward;
  const bool encoder = stage == CodecStage::kEncoder;
  for (std::int64_t k = 0; k < nk; ++k) {
    const auto& b = bands.bands[k];
    switch (strategy) {
      case InterleaveStrategy::kTail:
        // Scan-order tail for encoders, head for decoders.
        after[k] = (forward == encoder) ? nf : 0;
        break;
      case InterleaveStrategy::kBandStartEnd: {
        // Encoder fwd and decoder bwd sit after the band's last bin; the
        // other two sit before its first bin.
        const bool at_end = forward == encoder;
        after[k] = at_end ? b.end : b.start + (literal_start_index ? 1 : 0);
        break;
      }
      case InterleaveStrategy::kBandMiddle:
        after[k] = (b.start + 1 + b.end) / 2;
        break;
    }
  }
  InterleavePlan plan;
  plan.length = nf + nk;
  plan.strategy = strategy;
  plan.direction = direction;
  plan.stage = stage;
  std::int64_t slot = 0, k = 0;
  for (std::int64_t f = 0; f <= nf; ++f) {
    while (k < nk && after[k] == f) {
      plan.query_slots.push_back(slot++);
      ++k;
    }
    if (f < nf) plan.feature_slots.push_back(slot++);
  }
  if (k != nk) throw ConfigError("interleave: token positions out of order");
  return plan;
}

Tensor Interleave(const Tensor& features, const Tensor& tokens, const InterleavePlan& plan) {
  const auto nf = static_cast<std::int64_t>(plan.feature_slots.size());
  const auto nk = static_cast<std::int64_t>(plan.query_slots.size());
  if (features.rank() != 3 || tokens.rank() != 3 || features.dim(1) != nf ||
      tokens.dim(1) != nk || tokens.dim(2) != features.dim(2) ||
      (tokens.dim(0) != features.dim(0) && tokens.dim(0) != 1)) {
    throw ShapeError(fmt::format("interleave: features {} tokens {} for plan F={} K={}",
                                 ShapeToString(features.shape()), ShapeToString(tokens.shape()),
                                 nf, nk));
  }
  Tensor t = tokens;
  if (tokens.dim(0) != features.dim(0)) {
    t = ops::Add(Tensor::Zeros({features.dim(0), nk, features.dim(2)}, tokens.dtype()), tokens);
  }
  return ops::IndexSelect(ops::Concat({features, t}, 1), 1, plan.ScanOrder());
}

Extracted Extract(const Tensor& sequence, const InterleavePlan& plan) {
  if (sequence.rank() != 3 || sequence.dim(1) != plan.length) {
    throw ShapeError(fmt::format("extract: sequence {} for plan length {}",
                                 ShapeToString(sequence.shape()), plan.length));
  }
  const auto nf = static_cast<std::int64_t>(plan.feature_slots.size());
  std::vector<std::int64_t> order = plan.ScanOrder();
  std::vector<std::int64_t> fpos(nf), qpos(plan.query_slots.size());
  for (std::int64_t j = 0; j < plan.length; ++j) {
    if (order[j] < nf) fpos[order[j]] = j;
    else qpos[order[j] - nf] = j;
  }
  return {ops::IndexSelect(sequence, 1, fpos), ops::IndexSelect(sequence, 1, qpos)};
}

}  // namespace sfc::codec
