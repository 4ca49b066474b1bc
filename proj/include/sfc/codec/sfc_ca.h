// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfc/bands/bands.h"
#include "sfc/codec/codec.h"
#include "sfc/core/nn.h"

namespace sfc::codec {

enum class QueryMode { kLearnable, kAdaptive };
enum class PosBiasInit { kDistance, kZero };
// kPerHead divides logits by sqrt(D'/H); kLiteral by sqrt(D').
enum class ScaleMode { kPerHead, kLiteral };

struct CaConfig {
  int channels = 2;           // M
  int sources = 4;            // N
  std::int64_t dim = 96;      // D, separator width
  std::int64_t inner = 64;    // D'
  int heads = 4;              // H
  std::int64_t kernel_f = 3;  // conv kernel along frequency
  std::int64_t kernel_t = 1;  // along time; 1 keeps frames independent
  QueryMode encoder_query = QueryMode::kLearnable;
  QueryMode decoder_query = QueryMode::kLearnable;
  PosBiasInit pos_bias_init = PosBiasInit::kDistance;
  bool learn_pos_bias = true;
  bool learn_gamma = false;
  bool negate_in_band = false;
  bool band_mask = false;
  ScaleMode scale_mode = ScaleMode::kPerHead;
};

// Distance bias (K, F): in-band |c - f| / (e - 1 - s) around the inclusive
// center c = (s + e - 1) / 2, then -(distance to the nearest band edge)
// outside. Width-1 bands use denominator 1.
Tensor BuildPosBias(const bands::BandConfig& bands, bool negate_in_band = false);

// (Lq, Lk) support: entry (k, f) allowed when bin f lies in band k. With
// `transpose`, shape (F, K) for the decoder.
std::vector<std::uint8_t> BandMask(const bands::BandConfig& bands, bool transpose);

struct AttentionResult {
  Tensor out;      // (B, Lq, D')
  Tensor weights;  // (B, H, Lq, Lk)
};

// Multi-head attention without output projection. q: (Bq, Lq, D'),
// k and v: (B, Lk, D'); Bq broadcasts. pos_bias (H, Lq, Lk) and gamma (H) are
// optional (pass null for none). `allowed` restricts the softmax support.
AttentionResult CrossAttention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                               double scale, const Tensor* pos_bias, const Tensor* gamma,
                               const std::vector<std::uint8_t>* allowed);

// Q_k(t) = sum_{f in G_k} w_f z(t, f). z: (T, F, C), w: (F) -> (T, K, C).
Tensor AdaptiveQuery(const Tensor& z, const bands::BandConfig& bands, const Tensor& w);

// Mean over heads and bands: (T, H, K, F) -> (T, F).
Tensor AttentionSpectrogram(const Tensor& weights);
// log10(max(x, 1e-8)) elementwise, for export.
Tensor LogSpectrogram(const Tensor& spec);

// One cross-attention sequence stage: biased attention with no residual,
// then a SwiGLU FFN (inner 2D') with residual.
class CaBlock {
 public:
  CaBlock() = default;
  // Lq x Lk bias of shape (H, Lq, Lk) built from `bias_init` (Lq, Lk).
  CaBlock(InitContext& ctx, const std::string& name, const CaConfig& config,
          const Tensor& bias_init, std::vector<std::uint8_t> mask);
  // queries (Bq, Lq, D'), features (T, Lk, D') -> (T, Lq, D') and weights.
  AttentionResult Forward(const Tensor& queries, const Tensor& features) const;
  const std::vector<Parameter>& buffers() const { return buffers_; }

 private:
  LinearLayer q_, k_, v_;
  SwiGluFfn ffn_;
  Tensor pos_bias_;
  Tensor gamma_;
  int heads_ = 1;
  double scale_ = 1.0;
  bool masked_ = false;
  std::vector<std::uint8_t> mask_;
  std::vector<Parameter> buffers_;
};

// Cross-attention spectral feature compression (encoder K queries over F
// bins; decoder F queries over K compressed features).
class SfcCaCodec : public Codec {
 public:
  SfcCaCodec(InitContext& ctx, const std::string& name, bands::BandConfig bands,
             const CaConfig& config);

  EncodeOutput Encode(const Tensor& x) const override;
  Tensor Decode(const Tensor& z, const EncodeOutput& context) const override;
  std::string kind() const override { return "sfc_ca"; }
  std::vector<Parameter> buffers() const override;
  std::string Layout() const override;

  const bands::BandConfig& bands() const { return bands_; }
  const CaConfig& config() const { return config_; }

 private:
  bands::BandConfig bands_;
  CaConfig config_;
  // Encoder.
  Conv2dLayer enc_in_;
  RmsNormLayer enc_in_norm_;
  Tensor enc_query_;     // (D', K) learnable
  Tensor enc_weights_;   // (F) adaptive
  CaBlock enc_block_;
  Conv2dLayer enc_out_;
  RmsNormLayer enc_out_norm_;
  // Decoder.
  ConvTranspose2dLayer dec_in_;
  Tensor dec_query_;     // (D', F) learnable
  SwiGluFfn dec_query_ffn_;
  CaBlock dec_block_;
  ConvTranspose2dLayer dec_out_;
};

}  // namespace sfc::codec
