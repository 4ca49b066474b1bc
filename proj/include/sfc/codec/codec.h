// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sfc/core/nn.h"
#include "sfc/core/tensor.h"

namespace sfc::codec {

// What an encoder hands to the separator and, for coupled designs, to the
// matching decoder.
struct EncodeOutput {
  Tensor z;  // (D, K, T)
  // Per-frame attention weights (T, H, K, F), when the encoder attends.
  std::optional<Tensor> attention;
  // Encoder-side features a coupled decoder consumes.
  std::vector<Tensor> decoder_context;
};

// Frequency-axis encoder/decoder pair around a separator.
class Codec {
 public:
  virtual ~Codec() = default;
  // x: (2M, F, T) -> z: (D, K, T).
  virtual EncodeOutput Encode(const Tensor& x) const = 0;
  // z: (D, K, T) -> masks (N, 2M, F, T). `context` is the matching Encode
  // output, needed by decoders that reuse encoder features.
  virtual Tensor Decode(const Tensor& z, const EncodeOutput& context) const = 0;
  virtual std::string kind() const = 0;
  // Fixed (non-trainable) tensors that still shape the model, e.g. a frozen
  // positional bias. Listed by `model inspect`.
  virtual std::vector<Parameter> buffers() const { return {}; }
  // Fixed index maps and initializers that give the parameters meaning
  // (band edges, interleave order, bias init); part of the model signature.
  virtual std::string Layout() const = 0;
};

}  // namespace sfc::codec
