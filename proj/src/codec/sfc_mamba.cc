// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/codec/sfc_mamba.h"

#include <fmt/format.h>

#include "sfc/core/error.h"
#include "sfc/core/ops.h"

namespace sfc::codec {

SfcMambaCodec::SfcMambaCodec(InitContext& ctx, const std::string& name, bands::BandConfig bands,
                             const MambaConfig& config)
    : bands_(std::move(bands)), config_(config) {
  bands::Validate(bands_);
  if (config.kernel_f % 2 == 0 || config.kernel_t % 2 == 0) {
    throw ConfigError("sfc_mamba: conv kernels must be odd");
  }
  for (auto stage : {CodecStage::kEncoder, CodecStage::kDecoder}) {
    for (auto dir : {ScanDirection::kForward, ScanDirection::kBackward}) {
      plans_[stage == CodecStage::kDecoder][dir == ScanDirection::kBackward] =
          BuildInterleavePlan(bands_, config.strategy, dir, stage, config.literal_start_index);
    }
  }
  const std::int64_t d = config.inner, nf = bands_.num_bins, nk = bands_.num_bands();
  const std::int64_t rows = 2 * config.channels;
  SsmConfig ssm{d, config.state};

  const std::string e = name + ".enc";
  enc_in_ = Conv2dLayer(ctx, e + ".conv_in", rows, d, config.kernel_f, config.kernel_t);
  enc_in_norm_ = RmsNormLayer(ctx, e + ".norm_in", d);
  if (config.encoder_query == QueryMode::kLearnable) {
    enc_query_ = ctx.params->Add(e + ".query", UniformInit({d, nk}, 1, *ctx.rng, ctx.dtype));
  } else {
    std::vector<double> w(nf);
    for (const auto& b : bands_.bands)
      for (auto f = b.start; f < b.end; ++f) w[f] = 1.0 / static_cast<double>(b.width());
    enc_weights_ = ctx.params->Add(e + ".query_weights", Tensor({nf}, std::move(w), ctx.dtype));
  }
  enc_fwd_ = MambaLayer(ctx, e + ".mamba_fwd", ssm);
  enc_bwd_ = MambaLayer(ctx, e + ".mamba_bwd", ssm);
  enc_out_ = Conv2dLayer(ctx, e + ".conv_out", 2 * d, config.dim, config.kernel_f,
                         config.kernel_t);
  enc_out_norm_ = RmsNormLayer(ctx, e + ".norm_out", config.dim);

  const std::string dn = name + ".dec";
  dec_in_ = ConvTranspose2dLayer(ctx, dn + ".deconv_in", config.dim, d, config.kernel_f,
                                 config.kernel_t);
  if (config.decoder_query == QueryMode::kLearnable) {
    dec_query_ = ctx.params->Add(dn + ".query", UniformInit({d, nf}, 1, *ctx.rng, ctx.dtype));
  } else {
    dec_query_ffn_ = SwiGluFfn(ctx, dn + ".query_ffn", 2 * d, 2 * d, d);
  }
  dec_fwd_ = MambaLayer(ctx, dn + ".mamba_fwd", ssm);
  dec_bwd_ = MambaLayer(ctx, dn + ".mamba_bwd", ssm);
  dec_out_ = ConvTranspose2dLayer(ctx, dn + ".deconv_out", 2 * d, config.sources * rows,
                                  config.kernel_f, config.kernel_t);
}

Extracted SfcMambaCodec::Bidirectional(const Tensor& features, const Tensor& tokens,
                                       CodecStage stage, const MambaLayer& fwd,
                                       const MambaLayer& bwd) const {
  const auto& pf = plan(stage, ScanDirection::kForward);
  const auto& pb = plan(stage, ScanDirection::kBackward);
  Extracted a = Extract(fwd.Forward(Interleave(features, tokens, pf)), pf);
  Extracted b = Extract(bwd.Forward(Interleave(features, tokens, pb)), pb);
  return {ops::Concat({a.features, b.features}, 2), ops::Concat({a.tokens, b.tokens}, 2)};
}

EncodeOutput SfcMambaCodec::Encode(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(0) != 2 * config_.channels || x.dim(1) != bands_.num_bins) {
    throw ShapeError(fmt::format("sfc_mamba_encode: expected (2M={}, F={}, T), got {}",
                                 2 * config_.channels, bands_.num_bins, ShapeToString(x.shape())));
  }
  Tensor feats = enc_in_norm_.Forward(ops::Permute(enc_in_.Forward(x), {2, 1, 0}));  // (T,F,D')
  Tensor queries = config_.encoder_query == QueryMode::kLearnable
                       ? ops::Reshape(ops::Permute(enc_query_, {1, 0}),
                                      {1, bands_.num_bands(), config_.inner})
                       : AdaptiveQuery(feats, bands_, enc_weights_);
  Extracted r = Bidirectional(feats, queries, CodecStage::kEncoder, enc_fwd_, enc_bwd_);
  Tensor z = enc_out_.Forward(ops::Permute(r.tokens, {2, 1, 0}));  // (D, K, T)
  z = ops::Permute(enc_out_norm_.Forward(ops::Permute(z, {2, 1, 0})), {2, 1, 0});
  return {z, std::nullopt, {r.features}};
}

Tensor SfcMambaCodec::Decode(const Tensor& z, const EncodeOutput& context) const {
  if (z.rank() != 3 || z.dim(0) != config_.dim || z.dim(1) != bands_.num_bands()) {
    throw ShapeError(fmt::format("sfc_mamba_decode: expected (D={}, K={}, T), got {}",
                                 config_.dim, bands_.num_bands(), ShapeToString(z.shape())));
  }
  const std::int64_t t = z.dim(2);
  Tensor tokens = ops::Permute(dec_in_.Forward(z), {2, 1, 0});  // (T, K, D')
  Tensor queries;
  if (config_.decoder_query == QueryMode::kLearnable) {
    queries = ops::Reshape(ops::Permute(dec_query_, {1, 0}), {1, bands_.num_bins, config_.inner});
    queries = ops::Add(Tensor::Zeros({t, bands_.num_bins, config_.inner}, queries.dtype()),
                       queries);
  } else {
    if (context.decoder_context.empty() || context.decoder_context[0].dim(0) != t) {
      throw ConfigError("sfc_mamba_decode: adaptive decoder queries need the encoder outputs");
    }
    queries = dec_query_ffn_.Forward(context.decoder_context[0]);
  }
  Extracted r = Bidirectional(queries, tokens, CodecStage::kDecoder, dec_fwd_, dec_bwd_);
  Tensor m = dec_out_.Forward(ops::Permute(r.features, {2, 1, 0}));  // (N 2M, F, T)
  return ops::Reshape(m, {config_.sources, 2 * config_.channels, bands_.num_bins, t});
}

std::string SfcMambaCodec::Layout() const {
  auto query = [](QueryMode q) { return q == QueryMode::kLearnable ? "learnable" : "adaptive"; };
  const char* strategies[] = {"tail", "band_start_end", "band_middle"};
  std::string out = fmt::format(
      "sfc_mamba enc_query={} dec_query={} strategy={} literal_start_index={} bands=",
      query(config_.encoder_query), query(config_.decoder_query),
      strategies[static_cast<int>(config_.strategy)], config_.literal_start_index);
  for (const auto& b : bands_.bands) out += fmt::format("[{},{})", b.start, b.end);
  return out;
}

}  // namespace sfc::codec
