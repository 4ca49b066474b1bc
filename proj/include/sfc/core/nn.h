// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sfc/core/rng.h"
#include "sfc/core/tensor.h"

namespace sfc {

struct Parameter {
  std::string name;  // hierarchical, e.g. "encoder.ca.gamma"
  Tensor tensor;
};

// Named learnable tensors of a model, in registration order.
class ParameterSet {
 public:
  // Registers `value` as trainable; names must be unique.
  Tensor Add(const std::string& name, Tensor value);

  const std::vector<Parameter>& all() const { return params_; }
  std::vector<Parameter>& all() { return params_; }
  const Tensor* Find(const std::string& name) const;
  std::int64_t Count() const;
  // Sum of element counts of parameters whose name starts with `prefix`.
  std::int64_t CountWithPrefix(const std::string& prefix) const;
  void ZeroGrad();

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

// Everything a layer needs at construction time.
struct InitContext {
  ParameterSet* params;
  Rng* rng;
  DType dtype = DType::kF32;
};

// Weight ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor UniformInit(Shape shape, std::int64_t fan_in, Rng& rng, DType dtype);

class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(InitContext& ctx, const std::string& name, std::int64_t in,
              std::int64_t out, bool bias = true);
  Tensor Forward(const Tensor& x) const;
  std::int64_t in_features() const { return weight_.dim(1); }
  std::int64_t out_features() const { return weight_.dim(0); }

 private:
  Tensor weight_;
  Tensor bias_;
  bool has_bias_ = false;
};

// RMS normalization over the last axis with a learnable gain (init 1).
class RmsNormLayer {
 public:
  RmsNormLayer() = default;
  RmsNormLayer(InitContext& ctx, const std::string& name, std::int64_t dim,
               double eps = 1e-8);
  Tensor Forward(const Tensor& x) const;

 private:
  Tensor gain_;
  double eps_ = 1e-8;
};

// (C_in, H, W) -> (C_out, H, W), stride 1, same padding.
class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(InitContext& ctx, const std::string& name, std::int64_t in,
              std::int64_t out, std::int64_t kernel_h, std::int64_t kernel_w);
  Tensor Forward(const Tensor& x) const;

 private:
  Tensor weight_;
  Tensor bias_;
};

// Transpose counterpart of Conv2dLayer; output keeps (H, W).
class ConvTranspose2dLayer {
 public:
  ConvTranspose2dLayer() = default;
  ConvTranspose2dLayer(InitContext& ctx, const std::string& name, std::int64_t in,
                       std::int64_t out, std::int64_t kernel_h, std::int64_t kernel_w);
  Tensor Forward(const Tensor& x) const;

 private:
  Tensor weight_;
  Tensor bias_;
};

// Two-layer feed-forward with swish-gated hidden units, no biases:
// W_out (silu(W_gate x) * W_up x).
class SwiGluFfn {
 public:
  SwiGluFfn() = default;
  SwiGluFfn(InitContext& ctx, const std::string& name, std::int64_t in,
            std::int64_t hidden, std::int64_t out);
  Tensor Forward(const Tensor& x) const;

 private:
  LinearLayer gate_;
  LinearLayer up_;
  LinearLayer down_;
};

}  // namespace sfc
