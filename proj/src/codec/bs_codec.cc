// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/codec/bs_codec.h"

#include <fmt/format.h>

#include "sfc/core/ops.h"

namespace sfc::codec {

BsCodec::BsCodec(InitContext& ctx, const std::string& name, bands::BandConfig bands,
                 const BsConfig& config)
    : bands_(std::move(bands)), config_(config) {
  bands::Validate(bands_);
  const std::int64_t d = config.dim;
  const std::int64_t rows = 2 * config.channels;
  const std::int64_t out_per_bin = config.sources * rows;
  for (std::int64_t k = 0; k < bands_.num_bands(); ++k) {
    const std::int64_t in = rows * bands_.bands[k].width();
    std::string p = fmt::format("{}.enc.band{}", name, k);
    encoders_.push_back({RmsNormLayer(ctx, p + ".norm", in), LinearLayer(ctx, p + ".linear", in, d)});
  }
  for (std::int64_t k = 0; k < bands_.num_bands(); ++k) {
    std::string p = fmt::format("{}.dec.band{}", name, k);
    SubDecoder sub;
    sub.norm = RmsNormLayer(ctx, p + ".norm", d);
    std::int64_t width = d;
    for (int l = 0; l < config.decoder_hidden_layers; ++l) {
      sub.hidden.emplace_back(ctx, fmt::format("{}.hidden{}", p, l), width, 4 * d);
      width = 4 * d;
    }
    sub.out = LinearLayer(ctx, p + ".out", width, 2 * out_per_bin * bands_.bands[k].width());
    decoders_.push_back(std::move(sub));
  }
  std::vector<double> count(bands_.num_bins, 0.0);
  for (const auto& b : bands_.bands) {
    for (auto f = b.start; f < b.end; ++f) {
      merge_index_.push_back(f);
      count[f] += 1.0;
    }
  }
  for (auto& c : count) c = 1.0 / c;
  inv_count_ = Tensor({bands_.num_bins, 1}, count);
}

EncodeOutput BsCodec::Encode(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(0) != 2 * config_.channels || x.dim(1) != bands_.num_bins) {
    throw ShapeError(fmt::format("bs_encode: expected (2M={}, F={}, T), got {}",
                                 2 * config_.channels, bands_.num_bins, ShapeToString(x.shape())));
  }
  const std::int64_t t = x.dim(2);
  Tensor xt = ops::Permute(x, {2, 0, 1});  // (T, 2M, F)
  std::vector<Tensor> per_band;
  for (std::int64_t k = 0; k < bands_.num_bands(); ++k) {
    const auto& b = bands_.bands[k];
    Tensor slab = ops::Reshape(ops::Slice(xt, 2, b.start, b.end), {t, -1});
    Tensor zk = encoders_[k].linear.Forward(encoders_[k].norm.Forward(slab));  // (T, D)
    per_band.push_back(ops::Reshape(zk, {t, 1, config_.dim}));
  }
  // (T, K, D) -> (D, K, T)
  return {ops::Permute(ops::Concat(per_band, 1), {2, 1, 0}), std::nullopt, {}};
}

Tensor BsCodec::Decode(const Tensor& z, const EncodeOutput&) const {
  if (z.rank() != 3 || z.dim(0) != config_.dim || z.dim(1) != bands_.num_bands()) {
    throw ShapeError(fmt::format("bs_decode: expected (D={}, K={}, T), got {}", config_.dim,
                                 bands_.num_bands(), ShapeToString(z.shape())));
  }
  const std::int64_t t = z.dim(2);
  const std::int64_t rows = 2 * config_.channels;
  Tensor zt = ops::Permute(z, {1, 2, 0});  // (K, T, D)
  std::vector<Tensor> per_band;
  for (std::int64_t k = 0; k < bands_.num_bands(); ++k) {
    const auto& dec = decoders_[k];
    Tensor h = dec.norm.Forward(ops::Reshape(ops::Slice(zt, 0, k, k + 1), {t, config_.dim}));
    for (const auto& layer : dec.hidden) h = ops::Tanh(layer.Forward(h));
    Tensor m = ops::Glu(dec.out.Forward(h), 1);  // (T, N * 2M * w)
    m = ops::Reshape(m, {t, config_.sources, rows, bands_.bands[k].width()});
    per_band.push_back(ops::Permute(m, {1, 2, 3, 0}));  // (N, 2M, w, T)
  }
  Tensor stacked = ops::Concat(per_band, 2);
  Tensor merged = ops::IndexAdd(stacked, 2, merge_index_, bands_.num_bins);
  return bands_.IsPartition() ? merged : ops::Mul(merged, inv_count_);
}

std::int64_t BsEncoderParamFormula(const bands::BandConfig& bands, const BsConfig& config) {
  std::int64_t n = 0;
  for (const auto& b : bands.bands) {
    n += 2 * config.channels * b.width() * (config.dim + 1) + config.dim;
  }
  return n;
}

std::int64_t BsDecoderParamFormula(const bands::BandConfig& bands, const BsConfig& config) {
  const std::int64_t d = config.dim;
  std::int64_t n = 0;
  for (const auto& b : bands.bands) {
    std::int64_t width = d;
    n += d;  // norm gains
    for (int l = 0; l < config.decoder_hidden_layers; ++l) {
      n += width * 4 * d + 4 * d;
      width = 4 * d;
    }
    std::int64_t out = 2 * config.sources * 2 * config.channels * b.width();
    n += width * out + out;
  }
  return n;
}

std::string BsCodec::Layout() const {
  std::string out = fmt::format("bs hidden_layers={} bands=", config_.decoder_hidden_layers);
  for (const auto& b : bands_.bands) out += fmt::format("[{},{})", b.start, b.end);
  return out;
}

}  // namespace sfc::codec
