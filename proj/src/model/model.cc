// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/model/model.h"

#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "sfc/codec/bs_codec.h"
#include "sfc/codec/sfc_ca.h"
#include "sfc/codec/sfc_mamba.h"
#include "sfc/core/error.h"
#include "sfc/core/ops.h"
#include "sfc/core/serialize.h"

namespace sfc::model {

bands::BandConfig ResolveBands(const RunConfig& c) {
  const std::int64_t f = c.stft.n_fft / 2 + 1;
  const auto& b = c.bands;
  bands::BandConfig out;
  if (b.kind == "uniform") out = bands::GenUniform(f, b.num_bands);
  else if (b.kind == "full") out = bands::GenFull(f, b.num_bands);
  else if (b.kind == "log12tet") out = bands::GenLog12Tet(f, b.num_bands, c.stft.sample_rate, c.stft.n_fft);
  else if (b.kind == "musical") out = bands::GenMusical(f, b.num_bands, c.stft.sample_rate, c.stft.n_fft);
  else out = bands::Load(b.file);
  if (out.num_bins != f) {
    throw ConfigError(fmt::format("config: band file has F={} but n_fft {} gives F={}",
                                  out.num_bins, c.stft.n_fft, f));
  }
  return out;
}

namespace {

codec::QueryMode Query(const std::string& s) {
  return s == "adaptive" ? codec::QueryMode::kAdaptive : codec::QueryMode::kLearnable;
}

codec::InterleaveStrategy Strategy(const std::string& s) {
  if (s == "tail") return codec::InterleaveStrategy::kTail;
  if (s == "band_start_end") return codec::InterleaveStrategy::kBandStartEnd;
  return codec::InterleaveStrategy::kBandMiddle;
}

std::unique_ptr<codec::Codec> MakeCodec(InitContext& ctx, const RunConfig& c,
                                        const bands::BandConfig& bands) {
  const auto& s = c.codec;
  if (s.kind == "bs") {
    codec::BsConfig b{c.model.channels, c.model.sources, c.separator.dim,
                      s.decoder_hidden_layers};
    return std::make_unique<codec::BsCodec>(ctx, "codec", bands, b);
  }
  if (s.kind == "sfc_ca") {
    codec::CaConfig a;
    a.channels = c.model.channels;
    a.sources = c.model.sources;
    a.dim = c.separator.dim;
    a.inner = s.inner;
    a.heads = s.heads;
    a.kernel_f = s.kernel_f;
    a.kernel_t = s.kernel_t;
    a.encoder_query = Query(s.encoder_query);
    a.decoder_query = Query(s.decoder_query);
    a.pos_bias_init = s.pos_bias_init == "zero" ? codec::PosBiasInit::kZero
                                                : codec::PosBiasInit::kDistance;
    a.learn_pos_bias = s.learn_pos_bias;
    a.learn_gamma = s.learn_gamma;
    a.negate_in_band = s.negate_in_band;
    a.band_mask = s.band_mask;
    a.scale_mode = s.scale_mode == "literal" ? codec::ScaleMode::kLiteral
                                             : codec::ScaleMode::kPerHead;
    return std::make_unique<codec::SfcCaCodec>(ctx, "codec", bands, a);
  }
  codec::MambaConfig m;
  m.channels = c.model.channels;
  m.sources = c.model.sources;
  m.dim = c.separator.dim;
  m.inner = s.inner;
  m.state = s.state;
  m.kernel_f = s.kernel_f;
  m.kernel_t = s.kernel_t;
  m.strategy = Strategy(s.strategy);
  m.encoder_query = Query(s.encoder_query);
  m.decoder_query = Query(s.decoder_query);
  m.literal_start_index = s.compat_literal_eq21;
  return std::make_unique<codec::SfcMambaCodec>(ctx, "codec", bands, m);
}

}  // namespace

Model::Model(const RunConfig& config) : config_(config) {
  ValidateRunConfig(config_);
  bands_ = ResolveBands(config_);
  Rng rng(config_.seed);
  Rng init = rng.Fork("init");
  InitContext ctx{&params_, &init, config_.model.dtype == "f64" ? DType::kF64 : DType::kF32};
  codec_ = MakeCodec(ctx, config_, bands_);
  if (config_.separator.blocks > 0) {
    const auto& s = config_.separator;
    separator_.emplace(ctx, "separator",
                       separator::SeparatorConfig{s.blocks, s.dim, s.heads, s.hidden, s.kernel});
  }
}

Tensor Model::Spectrogram(const Tensor& waveform) const {
  dsp::Waveform w = dsp::Waveform::FromTensor(waveform, config_.stft.sample_rate);
  Tensor spec = dsp::Stft(w, {config_.stft.n_fft, config_.stft.hop}).values;
  return config_.model.dtype == "f64" ? spec : spec.To(DType::kF32);
}

Model::Output Model::ForwardSpec(const Tensor& mixture, std::int64_t length) const {
  Output out;
  out.encoded = codec_->Encode(mixture);
  Tensor z = separator_ ? separator_->Forward(out.encoded.z) : out.encoded.z;
  out.masks = codec_->Decode(z, out.encoded);
  out.spec = dsp::ApplyMask(mixture, out.masks);
  if (length > 0) {
    out.waveform = dsp::IstftTensor(out.spec, config_.stft.n_fft, config_.stft.hop, length);
  }
  return out;
}

Model::Output Model::Forward(const Tensor& mixture) const {
  if (mixture.rank() != 2 || mixture.dim(0) != config_.model.channels) {
    throw ShapeError(fmt::format("model: expected ({}, L) samples, got {}",
                                 config_.model.channels, ShapeToString(mixture.shape())));
  }
  return ForwardSpec(Spectrogram(mixture), mixture.dim(1));
}

namespace {

constexpr char kMagic[4] = {'S', 'F', 'C', 'K'};
constexpr std::uint8_t kVersion = 1;

void WriteU64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t ReadU64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    int c = in.get();
    if (c == EOF) throw FormatError("checkpoint: truncated");
    v |= static_cast<std::uint64_t>(c) << (8 * i);
  }
  return v;
}

std::string ReadString(std::istream& in) {
  std::uint64_t n = ReadU64(in);
  if (n > (1ull << 30)) throw FormatError("checkpoint: implausible string length");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw FormatError("checkpoint: truncated");
  }
  return s;
}

void WriteString(std::ostream& out, const std::string& s) {
  WriteU64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

}  // namespace

void Model::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("checkpoint: cannot write " + path);
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  WriteString(out, ToJson(config_));
  WriteU64(out, params_.all().size());
  for (const auto& p : params_.all()) {
    WriteString(out, p.name);
    WriteTensor(out, p.tensor);
  }
  if (!out) throw FormatError("checkpoint: write failed for " + path);
}

Model Model::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic in " + path);
  }
  if (in.get() != kVersion) throw FormatError("checkpoint: unsupported version");
  RunConfig config;
  try {
    config = ParseRunConfig(ReadString(in));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  Model model(config);
  const std::uint64_t count = ReadU64(in);
  if (count != model.params_.all().size()) {
    throw FormatError(fmt::format("checkpoint: {} tensors, model expects {}", count,
                                  model.params_.all().size()));
  }
  for (auto& p : model.params_.all()) {
    std::string name = ReadString(in);
    Tensor t = ReadTensor(in);
    if (name != p.name || t.shape() != p.tensor.shape()) {
      throw FormatError(fmt::format("checkpoint: tensor '{}' {} does not match '{}' {}", name,
                                    ShapeToString(t.shape()), p.name,
                                    ShapeToString(p.tensor.shape())));
    }
    auto dst = p.tensor.mutable_data();
    auto src = t.data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return model;
}

std::string Model::ParameterSignature() const {
  std::string text;
  for (const auto& p : params_.all()) text += "p " + p.name + ShapeToString(p.tensor.shape()) + ";";
  for (const auto& b : buffers()) text += "b " + b.name + ShapeToString(b.tensor.shape()) + ";";
  text += codec_->Layout();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace sfc::model
