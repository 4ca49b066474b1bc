// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "sfc/core/nn.h"

namespace sfc::train {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

// Decoupled weight decay Adam over a fixed parameter list.
class AdamW {
 public:
  AdamW(std::vector<Parameter> params, const AdamWConfig& config);
  // Applies one update at learning rate `lr`. Parameters without a gradient
  // are skipped; writes respect each tensor's dtype.
  void Step(double lr);
  int steps() const { return t_; }

 private:
  std::vector<Parameter> params_;
  AdamWConfig config_;
  std::vector<std::vector<double>> m_, v_;
  int t_ = 0;
};

// L2 norm over all gradients. Throws NumericFault naming the first
// parameter with a non-finite gradient.
double GlobalGradNorm(const std::vector<Parameter>& params);
// Rescales gradients so their global norm is at most `max_norm`; returns
// the norm before clipping.
double ClipGradNorm(std::vector<Parameter>& params, double max_norm);
// Linear warm-up over `warmup` steps (1-based), constant afterwards.
double WarmupLr(double base, int step, int warmup);

}  // namespace sfc::train
