// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "sfc/dsp/stft.h"

namespace sfc::dsp {

// Maps one chunk to N source estimates of the same length.
using ChunkSeparator = std::function<std::vector<Waveform>(const Waveform&)>;

struct ChunkConfig {
  double chunk_seconds = 12.0;
  double overlap_seconds = 6.0;
};

// Separates `w` chunk by chunk and cross-fades overlaps with complementary
// linear ramps, so the output length equals the input length. Inputs shorter
// than one chunk go through `model` in a single call.
std::vector<Waveform> ChunkedSeparate(const ChunkSeparator& model, const Waveform& w,
                                      const ChunkConfig& config = {});

}  // namespace sfc::dsp
