// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfc/model/config.h"

namespace sfc::cost {

// FLOP convention: a multiply-add is 2 FLOPs, elementwise arithmetic and
// nonlinearities 1 per element. STFT, iSTFT and masking are excluded.
struct FlopCounter {
  double total = 0;
  void MatMul(double m, double n, double k) { total += 2.0 * m * n * k; }
  void Conv(double kernel, double c_in, double c_out, double positions) {
    total += 2.0 * kernel * c_in * c_out * positions;
  }
  // Scores and weighted sum, each 2 Lq Lk D', plus the softmax exponent.
  void Attention(double batch, double heads, double lq, double lk, double dim) {
    total += batch * (4.0 * lq * lk * dim + 3.0 * heads * lq * lk);
  }
  // Per state entry: discretize (exp, mul), update (3), readout (2).
  void Scan(double batch, double length, double channels, double state) {
    total += 7.0 * batch * length * channels * state;
  }
  void Elementwise(double count, double per = 1.0) { total += per * count; }
  void RmsNorm(double rows, double dim) { total += 4.0 * rows * dim; }
};

struct Component {
  std::string name;
  std::int64_t params = 0;
  double flops = 0;  // over the whole input
};

struct CostReport {
  std::string codec;
  std::int64_t num_bins = 0;
  std::int64_t num_bands = 0;
  std::int64_t frames = 0;
  double seconds = 1.0;
  std::string config_hash;
  std::vector<Component> components;  // encoder, separator, decoder

  std::int64_t TotalParams() const;
  double TotalFlops() const;
  double FlopsPerSecond() const { return TotalFlops() / seconds; }
  const Component& Get(const std::string& name) const;
  // "component params gflops_per_s" lines plus a total line.
  std::string ToText() const;
};

// Builds the model described by `config` to count parameters and applies
// closed-form FLOP formulas for `seconds` of input.
CostReport Report(const model::RunConfig& config, double seconds = 1.0);

// One row per (codec, K): presets `preset` with bands.num_bands = K.
std::string SweepCsv(const std::string& preset, const std::vector<std::string>& codecs,
                     const std::vector<int>& band_counts, double seconds = 1.0);

}  // namespace sfc::cost
