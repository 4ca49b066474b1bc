// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/train/optim.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "sfc/core/error.h"

namespace sfc::train {

AdamW::AdamW(std::vector<Parameter> params, const AdamWConfig& config)
    : params_(std::move(params)), config_(config) {
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void AdamW::Step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, t_);
  const double c2 = 1.0 - std::pow(config_.beta2, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = params_[i].tensor;
    if (!t.has_grad()) continue;
    auto g = t.grad();
    auto w = t.mutable_data();
    const bool f32 = t.dtype() == DType::kF32;
    for (std::size_t j = 0; j < w.size(); ++j) {
      m_[i][j] = config_.beta1 * m_[i][j] + (1.0 - config_.beta1) * g[j];
      v_[i][j] = config_.beta2 * v_[i][j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double update = (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + config_.eps);
      double next = w[j] * (1.0 - lr * config_.weight_decay) - lr * update;
      if (f32) next = static_cast<float>(next);
      w[j] = next;
    }
  }
}

double GlobalGradNorm(const std::vector<Parameter>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericFault(fmt::format("non-finite gradient in parameter '{}'", p.name));
      sq += g * g;
    }
  }
  return std::sqrt(sq);
}

double ClipGradNorm(std::vector<Parameter>& params, double max_norm) {
  const double norm = GlobalGradNorm(params);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (double& g : p.tensor.mutable_grad()) g *= s;
    }
  }
  return norm;
}

double WarmupLr(double base, int step, int warmup) {
  if (warmup <= 0) return base;
  return base * std::min(1.0, static_cast<double>(step) / warmup);
}

}  // namespace sfc::train
