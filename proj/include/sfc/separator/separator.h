// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfc/core/nn.h"
#include "sfc/core/tensor.h"

namespace sfc::separator {

struct SeparatorConfig {
  int blocks = 4;              // B
  std::int64_t dim = 96;       // D
  int heads = 4;               // H
  std::int64_t hidden = 128;   // C, conv FFN width
  std::int64_t kernel = 8;     // conv FFN kernel, stride 1
};

SeparatorConfig SmallSeparator();   // B=4, D=96, C=128, H=4
SeparatorConfig MediumSeparator();  // B=6, D=128, C=192, H=8

// Pre-norm self-attention (no positional encoding) followed by a pre-norm
// convolutional SwiGLU FFN, both residual, over sequences (B, L, D).
class SequenceBlock {
 public:
  SequenceBlock() = default;
  SequenceBlock(InitContext& ctx, const std::string& name, const SeparatorConfig& config);
  Tensor Forward(const Tensor& x) const;
  // Attention sub-layer alone, x + MHSA(norm(x)).
  Tensor Attend(const Tensor& x) const;

 private:
  int heads_ = 1;
  std::int64_t kernel_ = 8;
  RmsNormLayer attn_norm_;
  LinearLayer qkv_;
  LinearLayer out_;
  RmsNormLayer ffn_norm_;
  Tensor conv_in_w_;  // (2C, D, kernel)
  Tensor conv_in_b_;
  LinearLayer ffn_out_;
};

// Dual-path stack over (D, K, T): each block models the band axis within a
// frame, then the time axis within a band.
class Separator {
 public:
  Separator(InitContext& ctx, const std::string& name, const SeparatorConfig& config);
  Tensor Forward(const Tensor& z) const;
  // Only the frequency sub-block of block `b`.
  Tensor FrequencyStep(const Tensor& z, int b) const;
  const SeparatorConfig& config() const { return config_; }

 private:
  SeparatorConfig config_;
  std::vector<SequenceBlock> freq_;
  std::vector<SequenceBlock> time_;
};

}  // namespace sfc::separator
