// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "sfc/core/tensor.h"

namespace sfc::train {

struct LossConfig {
  double tau = 1e-3;   // soft threshold, caps the SNR near -10 log10(tau)
  double alpha = 0.1;  // weight of the silent-reference branch
};

// Negative thresholded SNR of `estimate` against `reference`; when the
// reference is silent, alpha * 10 log10(|estimate|^2 + tau |mixture|^2)
// pushes the estimate toward zero. Differentiable in `estimate`.
Tensor SnrLoss(const Tensor& reference, const Tensor& estimate, const Tensor& mixture,
               const LossConfig& config = {});

constexpr double kMetricCapDb = 150.0;

// |X| per complex bin of a (..., 2M, F, T) spectrogram laid out as
// real/imaginary row pairs.
std::vector<double> Magnitudes(const Tensor& spec);
// 10 log10(sum |Y|^2 / sum (|Y| - |Y^|)^2) over all bins, capped at 150 dB.
// Throws ValidationError for a silent reference.
double SpecSnrDb(const std::vector<double>& ref_mag, const std::vector<double>& est_mag);

}  // namespace sfc::train
