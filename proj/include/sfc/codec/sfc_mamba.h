// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "sfc/bands/bands.h"
#include "sfc/codec/codec.h"
#include "sfc/codec/interleave.h"
#include "sfc/codec/sfc_ca.h"
#include "sfc/codec/ssm.h"
#include "sfc/core/nn.h"

namespace sfc::codec {

struct MambaConfig {
  int channels = 2;         // M
  int sources = 4;          // N
  std::int64_t dim = 96;    // D
  std::int64_t inner = 32;  // D' per direction
  std::int64_t state = 8;   // N_s
  std::int64_t kernel_f = 3;
  std::int64_t kernel_t = 1;
  InterleaveStrategy strategy = InterleaveStrategy::kBandMiddle;
  QueryMode encoder_query = QueryMode::kAdaptive;
  QueryMode decoder_query = QueryMode::kAdaptive;
  bool literal_start_index = false;
};

// Recurrent spectral feature compression: band tokens are interleaved with
// the F bin features and read out after a forward and a backward scan.
class SfcMambaCodec : public Codec {
 public:
  SfcMambaCodec(InitContext& ctx, const std::string& name, bands::BandConfig bands,
                const MambaConfig& config);

  // decoder_context[0] holds the feature-slot outputs of both scans
  // (T, F, 2D'), the source of adaptive decoder queries.
  EncodeOutput Encode(const Tensor& x) const override;
  Tensor Decode(const Tensor& z, const EncodeOutput& context) const override;
  std::string kind() const override { return "sfc_mamba"; }
  std::string Layout() const override;

  const bands::BandConfig& bands() const { return bands_; }
  const InterleavePlan& plan(CodecStage stage, ScanDirection dir) const {
    return plans_[stage == CodecStage::kDecoder][dir == ScanDirection::kBackward];
  }

 private:
  // Runs both scans over the interleaved sequences; returns the
  // concatenated (fwd, bwd) extractions.
  Extracted Bidirectional(const Tensor& features, const Tensor& tokens, CodecStage stage,
                          const MambaLayer& fwd, const MambaLayer& bwd) const;

  bands::BandConfig bands_;
  MambaConfig config_;
  InterleavePlan plans_[2][2];  // [stage][direction]
  Conv2dLayer enc_in_;
  RmsNormLayer enc_in_norm_;
  Tensor enc_query_;    // (D', K) learnable
  Tensor enc_weights_;  // (F) adaptive
  MambaLayer enc_fwd_, enc_bwd_;
  Conv2dLayer enc_out_;
  RmsNormLayer enc_out_norm_;
  ConvTranspose2dLayer dec_in_;
  Tensor dec_query_;  // (D', F) learnable
  SwiGluFfn dec_query_ffn_;
  MambaLayer dec_fwd_, dec_bwd_;
  ConvTranspose2dLayer dec_out_;
};

}  // namespace sfc::codec
