// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sfc/bands/bands.h"
#include "sfc/codec/codec.h"
#include "sfc/core/nn.h"

namespace sfc::codec {

struct BsConfig {
  int channels = 2;     // M
  int sources = 4;      // N
  std::int64_t dim = 96;  // D
  // Tanh layers of width 4D before the GLU output layer.
  int decoder_hidden_layers = 1;
};

// Band-split encoder/decoder: per band, RMS norm over the flattened
// 2M|G_k| input then a linear map to D; the decoder mirrors it with an MLP
// ending in a GLU. Overlapping bands are merged by unweighted mean.
class BsCodec : public Codec {
 public:
  BsCodec(InitContext& ctx, const std::string& name, bands::BandConfig bands,
          const BsConfig& config);

  EncodeOutput Encode(const Tensor& x) const override;
  Tensor Decode(const Tensor& z, const EncodeOutput& context) const override;
  std::string kind() const override { return "bs"; }
  std::string Layout() const override;

  const bands::BandConfig& bands() const { return bands_; }

 private:
  struct SubEncoder {
    RmsNormLayer norm;
    LinearLayer linear;
  };
  struct SubDecoder {
    RmsNormLayer norm;
    std::vector<LinearLayer> hidden;
    LinearLayer out;
  };

  bands::BandConfig bands_;
  BsConfig config_;
  std::vector<SubEncoder> encoders_;
  std::vector<SubDecoder> decoders_;
  std::vector<std::int64_t> merge_index_;  // bin of each concatenated band row
  Tensor inv_count_;                       // (F, 1): 1 / bands covering bin
};

// sum_k [2M|G_k| (D + 1) + D]: norm gains, weights, biases.
std::int64_t BsEncoderParamFormula(const bands::BandConfig& bands, const BsConfig& config);
// sum_k [D + per-layer weights and biases], ending in 2 N 2M |G_k| outputs.
std::int64_t BsDecoderParamFormula(const bands::BandConfig& bands, const BsConfig& config);

}  // namespace sfc::codec
