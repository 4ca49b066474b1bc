// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "sfc/core/nn.h"
#include "sfc/core/tensor.h"

namespace sfc::codec {

// Diagonal selective scan with zero-order-hold discretization, h_0 = 0:
//   h_i = exp(delta_i A) h_{i-1} + delta_i B_i x_i
//   y_i = C_i . h_i + D x_i
// x, delta: (B, L, E); a: (E, N); b, c: (B, L, N); d: (E). Returns (B, L, E).
// Differentiable in every input through a hand-written reverse rule.
Tensor SelectiveScan(const Tensor& x, const Tensor& delta, const Tensor& a, const Tensor& b,
                     const Tensor& c, const Tensor& d);

struct SsmConfig {
  std::int64_t width = 32;  // D'
  std::int64_t state = 8;   // N_s
  std::int64_t conv_width = 4;
  std::int64_t expand = 2;
  double dt_min = 1e-3;
  double dt_max = 1e-1;
};

// Mamba mixer: input projection into a scanned branch and a swish gate, a
// causal depthwise conv, input-dependent (delta, B, C), and an output
// projection. Causal along L.
class MambaLayer {
 public:
  MambaLayer() = default;
  MambaLayer(InitContext& ctx, const std::string& name, const SsmConfig& config);
  // (B, L, D') -> (B, L, D')
  Tensor Forward(const Tensor& u) const;

 private:
  SsmConfig config_;
  std::int64_t inner_ = 0;    // E = expand * D'
  std::int64_t dt_rank_ = 0;  // ceil(D' / 16)
  LinearLayer in_proj_;
  Tensor conv_weight_;  // (E, 1, conv_width)
  Tensor conv_bias_;
  LinearLayer x_proj_;
  LinearLayer dt_proj_;
  Tensor a_log_;   // (E, N)
  Tensor d_skip_;  // (E)
  LinearLayer out_proj_;
};

}  // namespace sfc::codec
