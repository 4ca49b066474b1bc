// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sfc/bands/bands.h"
#include "sfc/codec/codec.h"
#include "sfc/core/nn.h"
#include "sfc/dsp/stft.h"
#include "sfc/model/config.h"
#include "sfc/separator/separator.h"

namespace sfc::model {

// Band layout a config resolves to (generated or loaded from file).
bands::BandConfig ResolveBands(const RunConfig& config);

// STFT -> codec encoder -> separator -> codec decoder -> complex masks ->
// masked spectrograms -> iSTFT, one mixture at a time.
class Model {
 public:
  explicit Model(const RunConfig& config);

  struct Output {
    codec::EncodeOutput encoded;
    Tensor masks;     // (N, 2M, F, T)
    Tensor spec;      // (N, 2M, F, T) masked mixture spectrogram
    Tensor waveform;  // (N, M, L)
  };
  // mixture: (2M, F, T) spectrogram. Waveforms are synthesized only when
  // `length` > 0.
  Output ForwardSpec(const Tensor& mixture, std::int64_t length = 0) const;
  // mixture: (M, L) samples.
  Output Forward(const Tensor& mixture) const;

  Tensor Spectrogram(const Tensor& waveform) const;  // (M, L) -> (2M, F, T)

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  std::vector<Parameter> buffers() const { return codec_->buffers(); }
  const codec::Codec& codec() const { return *codec_; }
  const bands::BandConfig& bands() const { return bands_; }
  const RunConfig& config() const { return config_; }
  bool identity_separator() const { return !separator_.has_value(); }
  // 16 hex digits hashing every parameter and buffer name with its shape
  // and trainability, plus the codec layout.
  std::string ParameterSignature() const;

  // Archive: "SFCK", u8 version, config document, then named SFCT tensors.
  void Save(const std::string& path) const;
  static Model Load(const std::string& path);

 private:
  RunConfig config_;
  bands::BandConfig bands_;
  ParameterSet params_;
  std::unique_ptr<codec::Codec> codec_;
  std::optional<separator::Separator> separator_;
};

}  // namespace sfc::model
