// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/cost/cost.h"

#include <cmath>

#include <fmt/format.h>

#include "sfc/core/error.h"
#include "sfc/model/model.h"

namespace sfc::cost {

namespace {

using model::RunConfig;

struct Dims {
  double f, k, t, m2, n, d, inner;
  double kernel;  // kernel_f * kernel_t
};

void SwiGlu(FlopCounter& c, double rows, double in, double hidden, double out) {
  c.MatMul(rows, in, 2 * hidden);
  c.Elementwise(rows * hidden, 5);  // silu and gating product
  c.MatMul(rows, hidden, out);
}

void MambaFlops(FlopCounter& c, double batch, double length, double width, double state) {
  const double e = 2 * width;
  const double rank = std::ceil(width / 16.0);
  const double rows = batch * length;
  c.MatMul(rows, width, 2 * e);          // in_proj
  c.Elementwise(rows * e, 2 * 4);        // depthwise causal conv
  c.Elementwise(rows * e, 4 * 2);        // silu on both branches
  c.MatMul(rows, e, rank + 2 * state);   // x_proj
  c.MatMul(rows, rank, e);               // dt_proj
  c.Elementwise(rows * e, 2);            // softplus
  c.Scan(batch, length, e, state);
  c.Elementwise(rows * e, 3);            // skip term and gate
  c.MatMul(rows, e, width);              // out_proj
}

double BsEncoder(const Dims& s, const bands::BandConfig& bands) {
  FlopCounter c;
  for (const auto& b : bands.bands) {
    const double in = s.m2 * static_cast<double>(b.width());
    c.RmsNorm(s.t, in);
    c.MatMul(s.t, in, s.d);
  }
  return c.total;
}

double BsDecoder(const Dims& s, const bands::BandConfig& bands, int hidden_layers) {
  FlopCounter c;
  for (const auto& b : bands.bands) {
    const double out = s.n * s.m2 * static_cast<double>(b.width());
    c.RmsNorm(s.t, s.d);
    double width = s.d;
    for (int l = 0; l < hidden_layers; ++l) {
      c.MatMul(s.t, width, 4 * s.d);
      c.Elementwise(s.t * 4 * s.d);  // tanh
      width = 4 * s.d;
    }
    c.MatMul(s.t, width, 2 * out);
    c.Elementwise(s.t * out, 2);  // sigmoid gate
    c.Elementwise(s.t * out);     // overlap merge
  }
  return c.total;
}

void CaBlock(FlopCounter& c, const Dims& s, double lq, double lk, double heads) {
  c.MatMul(s.t * lq, s.inner, s.inner);       // q
  c.MatMul(s.t * lk, s.inner, 2 * s.inner);   // k, v
  c.Elementwise(heads * lq * lk);             // bias P scaled by gamma, shared across frames
  c.Attention(s.t, heads, lq, lk, s.inner);
  SwiGlu(c, s.t * lq, s.inner, 2 * s.inner, s.inner);
  c.Elementwise(s.t * lq * s.inner);          // residual
}

double CaEncoder(const Dims& s, const RunConfig& cfg) {
  FlopCounter c;
  c.Conv(s.kernel, s.m2, s.inner, s.f * s.t);
  c.RmsNorm(s.f * s.t, s.inner);
  if (cfg.codec.encoder_query == "adaptive") c.Elementwise(s.f * s.t * s.inner, 2);
  CaBlock(c, s, s.k, s.f, cfg.codec.heads);
  c.Conv(s.kernel, s.inner, s.d, s.k * s.t);
  c.RmsNorm(s.k * s.t, s.d);
  return c.total;
}

double CaDecoder(const Dims& s, const RunConfig& cfg) {
  FlopCounter c;
  c.Conv(s.kernel, s.d, s.inner, s.k * s.t);
  if (cfg.codec.decoder_query == "adaptive") SwiGlu(c, s.f * s.t, s.inner, 2 * s.inner, s.inner);
  CaBlock(c, s, s.f, s.k, cfg.codec.heads);
  c.Conv(s.kernel, s.inner, s.n * s.m2, s.f * s.t);
  return c.total;
}

double MambaEncoder(const Dims& s, const RunConfig& cfg) {
  FlopCounter c;
  c.Conv(s.kernel, s.m2, s.inner, s.f * s.t);
  c.RmsNorm(s.f * s.t, s.inner);
  if (cfg.codec.encoder_query == "adaptive") c.Elementwise(s.f * s.t * s.inner, 2);
  for (int dir = 0; dir < 2; ++dir) MambaFlops(c, s.t, s.f + s.k, s.inner, cfg.codec.state);
  c.Conv(s.kernel, 2 * s.inner, s.d, s.k * s.t);
  c.RmsNorm(s.k * s.t, s.d);
  return c.total;
}

double MambaDecoder(const Dims& s, const RunConfig& cfg) {
  FlopCounter c;
  c.Conv(s.kernel, s.d, s.inner, s.k * s.t);
  if (cfg.codec.decoder_query == "adaptive")
    SwiGlu(c, s.f * s.t, 2 * s.inner, 2 * s.inner, s.inner);
  for (int dir = 0; dir < 2; ++dir) MambaFlops(c, s.t, s.f + s.k, s.inner, cfg.codec.state);
  c.Conv(s.kernel, 2 * s.inner, s.n * s.m2, s.f * s.t);
  return c.total;
}

void SequenceBlock(FlopCounter& c, double batch, double length, const RunConfig& cfg) {
  const double d = cfg.separator.dim, h = cfg.separator.hidden;
  const double rows = batch * length;
  c.RmsNorm(rows, d);
  c.MatMul(rows, d, 3 * d);
  c.Attention(batch, cfg.separator.heads, length, length, d);
  c.MatMul(rows, d, d);
  c.Elementwise(rows * d);
  c.RmsNorm(rows, d);
  c.Conv(cfg.separator.kernel, d, 2 * h, rows);
  c.Elementwise(rows * h, 5);
  c.MatMul(rows, h, d);
  c.Elementwise(rows * d);
}

double SeparatorFlops(const Dims& s, const RunConfig& cfg) {
  FlopCounter c;
  for (int b = 0; b < cfg.separator.blocks; ++b) {
    SequenceBlock(c, s.t, s.k, cfg);  // across bands, per frame
    SequenceBlock(c, s.k, s.t, cfg);  // across frames, per band
  }
  return c.total;
}

}  // namespace

std::int64_t CostReport::TotalParams() const {
  std::int64_t n = 0;
  for (const auto& c : components) n += c.params;
  return n;
}

double CostReport::TotalFlops() const {
  double f = 0;
  for (const auto& c : components) f += c.flops;
  return f;
}

const Component& CostReport::Get(const std::string& name) const {
  for (const auto& c : components)
    if (c.name == name) return c;
  throw ConfigError("cost: no component " + name);
}

std::string CostReport::ToText() const {
  std::string out = fmt::format("codec {} F {} K {} frames {} seconds {} config {}\n", codec,
                                num_bins, num_bands, frames, seconds, config_hash);
  for (const auto& c : components)
    out += fmt::format("{} params {} gflops_per_s {:.6f}\n", c.name, c.params,
                       c.flops / seconds / 1e9);
  out += fmt::format("total params {} gflops_per_s {:.6f}\n", TotalParams(),
                     FlopsPerSecond() / 1e9);
  return out;
}

CostReport Report(const model::RunConfig& config, double seconds) {
  const model::Model m(config);
  const auto& bands = m.bands();
  const auto samples = static_cast<std::int64_t>(std::llround(seconds * config.stft.sample_rate));
  CostReport r;
  r.codec = config.codec.kind;
  r.num_bins = bands.num_bins;
  r.num_bands = bands.num_bands();
  r.frames = 1 + samples / config.stft.hop;
  r.seconds = seconds;
  r.config_hash = model::ConfigHash(config);
  const Dims s{static_cast<double>(r.num_bins),
               static_cast<double>(r.num_bands),
               static_cast<double>(r.frames),
               2.0 * config.model.channels,
               static_cast<double>(config.model.sources),
               static_cast<double>(config.separator.dim),
               static_cast<double>(config.codec.inner),
               static_cast<double>(config.codec.kernel_f * config.codec.kernel_t)};
  double enc = 0, dec = 0;
  if (r.codec == "bs") {
    enc = BsEncoder(s, bands);
    dec = BsDecoder(s, bands, config.codec.decoder_hidden_layers);
  } else if (r.codec == "sfc_ca") {
    enc = CaEncoder(s, config);
    dec = CaDecoder(s, config);
  } else {
    enc = MambaEncoder(s, config);
    dec = MambaDecoder(s, config);
  }
  const auto& p = m.params();
  r.components = {{"encoder", p.CountWithPrefix("codec.enc."), enc},
                  {"separator", p.CountWithPrefix("separator."), SeparatorFlops(s, config)},
                  {"decoder", p.CountWithPrefix("codec.dec."), dec}};
  return r;
}

std::string SweepCsv(const std::string& preset, const std::vector<std::string>& codecs,
                     const std::vector<int>& band_counts, double seconds) {
  std::string out =
      "codec,K,encoder_params,separator_params,decoder_params,total_params,"
      "encoder_gflops_per_s,separator_gflops_per_s,decoder_gflops_per_s,total_gflops_per_s,"
      "config_hash\n";
  for (const auto& codec : codecs) {
    for (int k : band_counts) {
      auto cfg = model::Preset(preset, codec);
      cfg.bands.num_bands = k;
      const auto r = Report(cfg, seconds);
      out += fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", codec, k,
                         r.Get("encoder").params, r.Get("separator").params,
                         r.Get("decoder").params, r.TotalParams(),
                         r.Get("encoder").flops / seconds / 1e9,
                         r.Get("separator").flops / seconds / 1e9,
                         r.Get("decoder").flops / seconds / 1e9, r.FlopsPerSecond() / 1e9,
                         r.config_hash);
    }
  }
  return out;
}

}  // namespace sfc::cost
