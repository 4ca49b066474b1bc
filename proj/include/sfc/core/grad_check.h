// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sfc/core/nn.h"
#include "sfc/core/tensor.h"

namespace sfc {

struct GradCheckOptions {
  double step = 1e-5;  // central-difference step h
  double tol = 1e-4;   // max accepted relative error
  // Denominator floor of the relative error |a - n| / max(|a|, |n|, floor),
  // so that round-off on near-zero gradients is not amplified.
  double floor = 1e-3;
};

struct ParamGradReport {
  std::string name;
  std::int64_t numel = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::int64_t worst_index = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<ParamGradReport> params;
  double max_rel_error = 0.0;
  bool pass = true;
  std::string Summary() const;
};

// Compares reverse-mode gradients of the scalar `f` with respect to every
// element of `params` against central differences. `f` must rebuild its
// forward pass from the current parameter values on each call. Throws
// DeterminismError when two identical forward passes disagree.
GradCheckReport GradCheck(const std::function<Tensor()>& f,
                          std::vector<Parameter> params,
                          const GradCheckOptions& options = {});

}  // namespace sfc
