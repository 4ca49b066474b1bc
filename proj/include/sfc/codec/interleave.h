// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfc/bands/bands.h"
#include "sfc/core/tensor.h"

namespace sfc::codec {

enum class InterleaveStrategy { kTail, kBandStartEnd, kBandMiddle };
enum class ScanDirection { kForward, kBackward };
enum class CodecStage { kEncoder, kDecoder };

// Placement of F feature tokens and K band tokens in one sequence of length
// F + K. Slots index the frequency-ordered list; a backward scan reads it
// from the last slot to the first.
struct InterleavePlan {
  std::int64_t length = 0;
  std::vector<std::int64_t> query_slots;    // K entries, increasing
  std::vector<std::int64_t> feature_slots;  // F entries, increasing
  InterleaveStrategy strategy = InterleaveStrategy::kTail;
  ScanDirection direction = ScanDirection::kForward;
  CodecStage stage = CodecStage::kEncoder;

  // Source index at each scan step: i < F is feature i, F + k is token k.
  std::vector<std::int64_t> ScanOrder() const;
  std::string ToString() const;
};

// Band-based strategies need the bands to partition [0, F) in order.
//   BandStartEnd: in scan order, an encoder token follows the last feature of
//     its band; a decoder token precedes the first one.
//   BandMiddle: the token sits after the feature at the one-based inclusive
//     midpoint floor((s + 1 + e) / 2), identical for every direction and stage.
//   Tail: encoder tokens follow all features in scan order; decoder tokens
//     precede them.
// `literal_start_index` places tokens that belong at a band start one slot
// later (just after the band's first feature), matching the index formula
// I(k) = s + k taken verbatim.
InterleavePlan BuildInterleavePlan(const bands::BandConfig& bands, InterleaveStrategy strategy,
                                   ScanDirection direction, CodecStage stage,
                                   bool literal_start_index = false);

// features (B, F, C) and tokens (B or 1, K, C) -> scan-ordered (B, F+K, C).
Tensor Interleave(const Tensor& features, const Tensor& tokens, const InterleavePlan& plan);

struct Extracted {
  Tensor features;  // (B, F, C)
  Tensor tokens;    // (B, K, C)
};
// Inverse of Interleave on a scan-ordered sequence.
Extracted Extract(const Tensor& sequence, const InterleavePlan& plan);

}  // namespace sfc::codec
