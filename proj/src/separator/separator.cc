// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/separator/separator.h"

#include <cmath>

#include <fmt/format.h>

#include "sfc/codec/sfc_ca.h"
#include "sfc/core/error.h"
#include "sfc/core/ops.h"

namespace sfc::separator {

SeparatorConfig SmallSeparator() { return {4, 96, 4, 128, 8}; }
SeparatorConfig MediumSeparator() { return {6, 128, 8, 192, 8}; }

SequenceBlock::SequenceBlock(InitContext& ctx, const std::string& name,
                             const SeparatorConfig& config)
    : heads_(config.heads), kernel_(config.kernel) {
  const std::int64_t d = config.dim, c = config.hidden;
  if (d % config.heads != 0) {
    throw ConfigError(fmt::format("separator: D={} not divisible by H={}", d, config.heads));
  }
  attn_norm_ = RmsNormLayer(ctx, name + ".attn_norm", d);
  qkv_ = LinearLayer(ctx, name + ".qkv", d, 3 * d);
  out_ = LinearLayer(ctx, name + ".attn_out", d, d);
  ffn_norm_ = RmsNormLayer(ctx, name + ".ffn_norm", d);
  conv_in_w_ = ctx.params->Add(name + ".ffn_conv.weight",
                               UniformInit({2 * c, d, kernel_}, d * kernel_, *ctx.rng, ctx.dtype));
  conv_in_b_ = ctx.params->Add(name + ".ffn_conv.bias", Tensor::Zeros({2 * c}, ctx.dtype));
  ffn_out_ = LinearLayer(ctx, name + ".ffn_out", c, d);
}

Tensor SequenceBlock::Attend(const Tensor& x) const {
  const std::int64_t d = x.dim(2);
  Tensor qkv = qkv_.Forward(attn_norm_.Forward(x));
  auto r = codec::CrossAttention(ops::Slice(qkv, 2, 0, d), ops::Slice(qkv, 2, d, 2 * d),
                                 ops::Slice(qkv, 2, 2 * d, 3 * d), heads_,
                                 1.0 / std::sqrt(static_cast<double>(d / heads_)), nullptr,
                                 nullptr, nullptr);
  return ops::Add(x, out_.Forward(r.out));
}

Tensor SequenceBlock::Forward(const Tensor& x) const {
  Tensor h = Attend(x);
  // Kernel 8 with stride 1 keeps the length by padding 3 before, 4 after.
  Tensor u = ops::Permute(ffn_norm_.Forward(h), {0, 2, 1});  // (B, D, L)
  const std::int64_t pad_l = (kernel_ - 1) / 2;
  u = ops::Conv1d(u, conv_in_w_, &conv_in_b_, pad_l, kernel_ - 1 - pad_l);
  u = ops::Permute(u, {0, 2, 1});  // (B, L, 2C)
  const std::int64_t c = u.dim(2) / 2;
  u = ops::Mul(ops::Silu(ops::Slice(u, 2, 0, c)), ops::Slice(u, 2, c, 2 * c));
  return ops::Add(h, ffn_out_.Forward(u));
}

Separator::Separator(InitContext& ctx, const std::string& name, const SeparatorConfig& config)
    : config_(config) {
  for (int b = 0; b < config.blocks; ++b) {
    freq_.emplace_back(ctx, fmt::format("{}.block{}.freq", name, b), config);
    time_.emplace_back(ctx, fmt::format("{}.block{}.time", name, b), config);
  }
}

Tensor Separator::FrequencyStep(const Tensor& z, int b) const {
  // (D, K, T) -> (T, K, D) and back.
  return ops::Permute(freq_[b].Forward(ops::Permute(z, {2, 1, 0})), {2, 1, 0});
}

Tensor Separator::Forward(const Tensor& z) const {
  if (z.rank() != 3 || z.dim(0) != config_.dim) {
    throw ShapeError(fmt::format("separator: expected (D={}, K, T), got {}", config_.dim,
                                 ShapeToString(z.shape())));
  }
  Tensor h = z;
  for (int b = 0; b < config_.blocks; ++b) {
    h = FrequencyStep(h, b);
    // (D, K, T) -> (K, T, D) and back.
    h = ops::Permute(time_[b].Forward(ops::Permute(h, {1, 2, 0})), {2, 0, 1});
  }
  return h;
}

}  // namespace sfc::separator
