// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/core/nn.h"

#include <cmath>

#include "sfc/core/ops.h"

namespace sfc {

Tensor ParameterSet::Add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  value.set_requires_grad(true);
  index_[name] = params_.size();
  params_.push_back({name, value});
  return value;
}

const Tensor* ParameterSet::Find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second].tensor;
}

std::int64_t ParameterSet::Count() const { return CountWithPrefix(""); }

std::int64_t ParameterSet::CountWithPrefix(const std::string& prefix) const {
  std::int64_t n = 0;
  for (const auto& p : params_) {
    if (p.name.compare(0, prefix.size(), prefix) == 0) n += p.tensor.numel();
  }
  return n;
}

void ParameterSet::ZeroGrad() {
  for (auto& p : params_) p.tensor.ZeroGrad();
}

Tensor UniformInit(Shape shape, std::int64_t fan_in, Rng& rng, DType dtype) {
  Tensor t(std::move(shape), dtype);
  double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::int64_t>(fan_in, 1)));
  for (auto& v : t.mutable_data()) v = rng.Uniform(-bound, bound);
  return t.To(dtype);
}

LinearLayer::LinearLayer(InitContext& ctx, const std::string& name, std::int64_t in,
                         std::int64_t out, bool bias)
    : has_bias_(bias) {
  weight_ = ctx.params->Add(name + ".weight", UniformInit({out, in}, in, *ctx.rng, ctx.dtype));
  if (bias) bias_ = ctx.params->Add(name + ".bias", Tensor::Zeros({out}, ctx.dtype));
}

Tensor LinearLayer::Forward(const Tensor& x) const {
  return ops::Linear(x, weight_, has_bias_ ? &bias_ : nullptr);
}

RmsNormLayer::RmsNormLayer(InitContext& ctx, const std::string& name, std::int64_t dim,
                           double eps)
    : eps_(eps) {
  gain_ = ctx.params->Add(name + ".gain", Tensor::Full({dim}, 1.0, ctx.dtype));
}

Tensor RmsNormLayer::Forward(const Tensor& x) const { return ops::RmsNorm(x, gain_, eps_); }

Conv2dLayer::Conv2dLayer(InitContext& ctx, const std::string& name, std::int64_t in,
                         std::int64_t out, std::int64_t kernel_h, std::int64_t kernel_w) {
  weight_ = ctx.params->Add(
      name + ".weight",
      UniformInit({out, in, kernel_h, kernel_w}, in * kernel_h * kernel_w, *ctx.rng, ctx.dtype));
  bias_ = ctx.params->Add(name + ".bias", Tensor::Zeros({out}, ctx.dtype));
}

Tensor Conv2dLayer::Forward(const Tensor& x) const { return ops::Conv2d(x, weight_, &bias_); }

ConvTranspose2dLayer::ConvTranspose2dLayer(InitContext& ctx, const std::string& name,
                                           std::int64_t in, std::int64_t out,
                                           std::int64_t kernel_h, std::int64_t kernel_w) {
  weight_ = ctx.params->Add(
      name + ".weight",
      UniformInit({in, out, kernel_h, kernel_w}, out * kernel_h * kernel_w, *ctx.rng, ctx.dtype));
  bias_ = ctx.params->Add(name + ".bias", Tensor::Zeros({out}, ctx.dtype));
}

Tensor ConvTranspose2dLayer::Forward(const Tensor& x) const {
  return ops::ConvTranspose2d(x, weight_, &bias_);
}

SwiGluFfn::SwiGluFfn(InitContext& ctx, const std::string& name, std::int64_t in,
                     std::int64_t hidden, std::int64_t out)
    : gate_(ctx, name + ".gate", in, hidden, false),
      up_(ctx, name + ".up", in, hidden, false),
      down_(ctx, name + ".down", hidden, out, false) {}

Tensor SwiGluFfn::Forward(const Tensor& x) const {
  return down_.Forward(ops::Mul(ops::Silu(gate_.Forward(x)), up_.Forward(x)));
}

}  // namespace sfc
