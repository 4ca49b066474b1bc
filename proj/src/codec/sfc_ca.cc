// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/codec/sfc_ca.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "sfc/core/error.h"
#include "sfc/core/ops.h"

namespace sfc::codec {

Tensor BuildPosBias(const bands::BandConfig& bands, bool negate_in_band) {
  bands::Validate(bands);
  const std::int64_t nk = bands.num_bands(), nf = bands.num_bins;
  std::vector<double> p(nk * nf);
  for (std::int64_t k = 0; k < nk; ++k) {
    const double s = static_cast<double>(bands.bands[k].start);
    const double last = static_cast<double>(bands.bands[k].end - 1);
    const double center = (s + last) / 2.0;
    const double denom = last > s ? last - s : 1.0;
    for (std::int64_t f = 0; f < nf; ++f) {
      const double x = static_cast<double>(f);
      double v;
      if (x > last) v = last - x;
      else if (x < s) v = x - s;
      else v = (negate_in_band ? -1.0 : 1.0) * std::abs(center - x) / denom;
      p[k * nf + f] = v;
    }
  }
  return Tensor({nk, nf}, std::move(p));
}

std::vector<std::uint8_t> BandMask(const bands::BandConfig& bands, bool transpose) {
  const std::int64_t nk = bands.num_bands(), nf = bands.num_bins;
  std::vector<std::uint8_t> m(nk * nf, 0);
  for (std::int64_t k = 0; k < nk; ++k) {
    for (auto f = bands.bands[k].start; f < bands.bands[k].end; ++f) {
      m[transpose ? f * nk + k : k * nf + f] = 1;
    }
  }
  return m;
}

namespace {

// (B, L, H * dh) -> (B, H, L, dh)
Tensor SplitHeads(const Tensor& x, int heads) {
  const std::int64_t b = x.dim(0), l = x.dim(1), d = x.dim(2);
  return ops::Permute(ops::Reshape(x, {b, l, heads, d / heads}), {0, 2, 1, 3});
}

}  // namespace

AttentionResult CrossAttention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                               double scale, const Tensor* pos_bias, const Tensor* gamma,
                               const std::vector<std::uint8_t>* allowed) {
  if (q.rank() != 3 || k.rank() != 3 || v.shape() != k.shape() || q.dim(2) != k.dim(2)) {
    throw ShapeError(fmt::format("cross_attention: q {} k {} v {}", ShapeToString(q.shape()),
                                 ShapeToString(k.shape()), ShapeToString(v.shape())));
  }
  const std::int64_t d = q.dim(2);
  if (heads < 1 || d % heads != 0) {
    throw ConfigError(fmt::format("cross_attention: D'={} not divisible by H={}", d, heads));
  }
  Tensor logits = ops::Scale(ops::MatMul(SplitHeads(q, heads), SplitHeads(k, heads), false, true),
                             scale);
  if (pos_bias) {
    const Shape want = {heads, q.dim(1), k.dim(1)};
    if (pos_bias->shape() != want) {
      throw ShapeError(fmt::format("cross_attention: bias {} expected {}",
                                   ShapeToString(pos_bias->shape()), ShapeToString(want)));
    }
    Tensor bias = gamma ? ops::Mul(ops::Reshape(*gamma, {heads, 1, 1}), *pos_bias) : *pos_bias;
    logits = ops::Add(logits, bias);
  }
  Tensor weights = allowed ? ops::MaskedSoftmax(logits, *allowed) : ops::Softmax(logits, 3);
  Tensor out = ops::MatMul(weights, SplitHeads(v, heads));  // (B, H, Lq, dh)
  out = ops::Permute(out, {0, 2, 1, 3});
  return {ops::Reshape(out, {out.dim(0), out.dim(1), d}), weights};
}

Tensor AdaptiveQuery(const Tensor& z, const bands::BandConfig& bands, const Tensor& w) {
  if (z.rank() != 3 || z.dim(1) != bands.num_bins || w.shape() != Shape{bands.num_bins}) {
    throw ShapeError(fmt::format("adaptive_query: z {} w {} with F={}", ShapeToString(z.shape()),
                                 ShapeToString(w.shape()), bands.num_bins));
  }
  std::vector<std::int64_t> bins, owner;
  for (std::int64_t k = 0; k < bands.num_bands(); ++k) {
    for (auto f = bands.bands[k].start; f < bands.bands[k].end; ++f) {
      bins.push_back(f);
      owner.push_back(k);
    }
  }
  Tensor weighted = ops::Mul(z, ops::Reshape(w, {bands.num_bins, 1}));
  return ops::IndexAdd(ops::IndexSelect(weighted, 1, bins), 1, owner, bands.num_bands());
}

Tensor AttentionSpectrogram(const Tensor& weights) {
  if (weights.rank() != 4) {
    throw ShapeError("attention_spectrogram: expected (T,H,K,F), got " +
                     ShapeToString(weights.shape()));
  }
  return ops::Mean(ops::Mean(weights, 1), 1);
}

Tensor LogSpectrogram(const Tensor& spec) {
  std::vector<double> v = spec.ToVector();
  for (auto& x : v) x = std::log10(std::max(x, 1e-8));
  return Tensor(spec.shape(), std::move(v));
}

CaBlock::CaBlock(InitContext& ctx, const std::string& name, const CaConfig& config,
                 const Tensor& bias_init, std::vector<std::uint8_t> mask)
    : heads_(config.heads), masked_(config.band_mask), mask_(std::move(mask)) {
  const std::int64_t d = config.inner;
  if (d % config.heads != 0) {
    throw ConfigError(fmt::format("sfc_ca: D'={} not divisible by H={}", d, config.heads));
  }
  q_ = LinearLayer(ctx, name + ".q", d, d);
  k_ = LinearLayer(ctx, name + ".k", d, d);
  v_ = LinearLayer(ctx, name + ".v", d, d);
  ffn_ = SwiGluFfn(ctx, name + ".ffn", d, 2 * d, d);
  scale_ = 1.0 / std::sqrt(config.scale_mode == ScaleMode::kPerHead
                               ? static_cast<double>(d / config.heads)
                               : static_cast<double>(d));

  const std::int64_t lq = bias_init.dim(0), lk = bias_init.dim(1);
  std::vector<double> p;
  p.reserve(config.heads * lq * lk);
  for (int h = 0; h < config.heads; ++h) {
    for (double x : bias_init.data()) {
      p.push_back(config.pos_bias_init == PosBiasInit::kZero ? 0.0 : x);
    }
  }
  Tensor bias({config.heads, lq, lk}, std::move(p), ctx.dtype);
  Tensor gamma = Tensor::Full({config.heads}, 1.0, ctx.dtype);
  if (config.learn_pos_bias) pos_bias_ = ctx.params->Add(name + ".pos_bias", bias);
  else buffers_.push_back({name + ".pos_bias", pos_bias_ = bias});
  if (config.learn_gamma) gamma_ = ctx.params->Add(name + ".gamma", gamma);
  else buffers_.push_back({name + ".gamma", gamma_ = gamma});
}

AttentionResult CaBlock::Forward(const Tensor& queries, const Tensor& features) const {
  AttentionResult r = CrossAttention(q_.Forward(queries), k_.Forward(features),
                                     v_.Forward(features), heads_, scale_, &pos_bias_, &gamma_,
                                     masked_ ? &mask_ : nullptr);
  r.out = ops::Add(ffn_.Forward(r.out), r.out);
  return r;
}

SfcCaCodec::SfcCaCodec(InitContext& ctx, const std::string& name, bands::BandConfig bands,
                       const CaConfig& config)
    : bands_(std::move(bands)), config_(config) {
  bands::Validate(bands_);
  const std::int64_t d = config.inner, nf = bands_.num_bins, nk = bands_.num_bands();
  const std::int64_t rows = 2 * config.channels;
  if (config.kernel_f % 2 == 0 || config.kernel_t % 2 == 0) {
    throw ConfigError("sfc_ca: conv kernels must be odd");
  }
  Tensor bias = BuildPosBias(bands_, config.negate_in_band);

  const std::string e = name + ".enc";
  enc_in_ = Conv2dLayer(ctx, e + ".conv_in", rows, d, config.kernel_f, config.kernel_t);
  enc_in_norm_ = RmsNormLayer(ctx, e + ".norm_in", d);
  if (config.encoder_query == QueryMode::kLearnable) {
    enc_query_ = ctx.params->Add(e + ".query", UniformInit({d, nk}, 1, *ctx.rng, ctx.dtype));
  } else {
    // Start from the plain band average of the first band holding each bin.
    std::vector<double> w(nf, 0.0);
    for (auto it = bands_.bands.rbegin(); it != bands_.bands.rend(); ++it) {
      for (auto f = it->start; f < it->end; ++f) w[f] = 1.0 / static_cast<double>(it->width());
    }
    enc_weights_ = ctx.params->Add(e + ".query_weights", Tensor({nf}, std::move(w), ctx.dtype));
  }
  enc_block_ = CaBlock(ctx, e + ".ca", config, bias, BandMask(bands_, false));
  enc_out_ = Conv2dLayer(ctx, e + ".conv_out", d, config.dim, config.kernel_f, config.kernel_t);
  enc_out_norm_ = RmsNormLayer(ctx, e + ".norm_out", config.dim);

  const std::string dn = name + ".dec";
  dec_in_ = ConvTranspose2dLayer(ctx, dn + ".deconv_in", config.dim, d, config.kernel_f,
                                 config.kernel_t);
  if (config.decoder_query == QueryMode::kLearnable) {
    dec_query_ = ctx.params->Add(dn + ".query", UniformInit({d, nf}, 1, *ctx.rng, ctx.dtype));
  } else {
    dec_query_ffn_ = SwiGluFfn(ctx, dn + ".query_ffn", d, 2 * d, d);
  }
  dec_block_ = CaBlock(ctx, dn + ".ca", config, ops::Permute(bias, {1, 0}),
                       BandMask(bands_, true));
  dec_out_ = ConvTranspose2dLayer(ctx, dn + ".deconv_out", d, config.sources * rows,
                                  config.kernel_f, config.kernel_t);
}

EncodeOutput SfcCaCodec::Encode(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(0) != 2 * config_.channels || x.dim(1) != bands_.num_bins) {
    throw ShapeError(fmt::format("sfc_ca_encode: expected (2M={}, F={}, T), got {}",
                                 2 * config_.channels, bands_.num_bins, ShapeToString(x.shape())));
  }
  // (D', F, T) -> (T, F, D'), normalized over channels.
  Tensor feats = enc_in_norm_.Forward(ops::Permute(enc_in_.Forward(x), {2, 1, 0}));
  Tensor queries = config_.encoder_query == QueryMode::kLearnable
                       ? ops::Reshape(ops::Permute(enc_query_, {1, 0}),
                                      {1, bands_.num_bands(), config_.inner})
                       : AdaptiveQuery(feats, bands_, enc_weights_);
  AttentionResult r = enc_block_.Forward(queries, feats);  // (T, K, D')
  Tensor z = enc_out_.Forward(ops::Permute(r.out, {2, 1, 0}));
  z = ops::Permute(enc_out_norm_.Forward(ops::Permute(z, {2, 1, 0})), {2, 1, 0});
  return {z, r.weights, {feats}};
}

Tensor SfcCaCodec::Decode(const Tensor& z, const EncodeOutput& context) const {
  if (z.rank() != 3 || z.dim(0) != config_.dim || z.dim(1) != bands_.num_bands()) {
    throw ShapeError(fmt::format("sfc_ca_decode: expected (D={}, K={}, T), got {}", config_.dim,
                                 bands_.num_bands(), ShapeToString(z.shape())));
  }
  const std::int64_t t = z.dim(2);
  Tensor feats = ops::Permute(dec_in_.Forward(z), {2, 1, 0});  // (T, K, D')
  Tensor queries;
  if (config_.decoder_query == QueryMode::kLearnable) {
    queries = ops::Reshape(ops::Permute(dec_query_, {1, 0}), {1, bands_.num_bins, config_.inner});
  } else {
    if (context.decoder_context.empty() || context.decoder_context[0].dim(0) != t) {
      throw ConfigError("sfc_ca_decode: adaptive decoder queries need the encoder features");
    }
    queries = dec_query_ffn_.Forward(context.decoder_context[0]);
  }
  AttentionResult r = dec_block_.Forward(queries, feats);  // (T, F, D')
  Tensor m = dec_out_.Forward(ops::Permute(r.out, {2, 1, 0}));
  return ops::Reshape(m, {config_.sources, 2 * config_.channels, bands_.num_bins, t});
}

std::vector<Parameter> SfcCaCodec::buffers() const {
  std::vector<Parameter> out = enc_block_.buffers();
  for (const auto& b : dec_block_.buffers()) out.push_back(b);
  return out;
}

std::string SfcCaCodec::Layout() const {
  auto query = [](QueryMode q) { return q == QueryMode::kLearnable ? "learnable" : "adaptive"; };
  std::string out = fmt::format(
      "sfc_ca enc_query={} dec_query={} pos_bias_init={} negate_in_band={} band_mask={} "
      "scale={} bands=",
      query(config_.encoder_query), query(config_.decoder_query),
      config_.pos_bias_init == PosBiasInit::kZero ? "zero" : "distance", config_.negate_in_band,
      config_.band_mask, config_.scale_mode == ScaleMode::kLiteral ? "literal" : "per_head");
  for (const auto& b : bands_.bands) out += fmt::format("[{},{})", b.start, b.end);
  return out;
}

}  // namespace sfc::codec
