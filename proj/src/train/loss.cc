// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/train/loss.h"

#include <cmath>

#include <fmt/format.h>

#include "sfc/core/error.h"
#include "sfc/core/ops.h"

namespace sfc::train {

namespace {

constexpr double kDbPerNeper = 10.0 / 2.302585092994045684;  // 10 / ln 10
constexpr double kEps = 1e-14;

double Energy(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return s;
}

}  // namespace

Tensor SnrLoss(const Tensor& reference, const Tensor& estimate, const Tensor& mixture,
               const LossConfig& config) {
  if (reference.shape() != estimate.shape()) {
    throw ShapeError(fmt::format("snr_loss: reference {} vs estimate {}",
                                 ShapeToString(reference.shape()),
                                 ShapeToString(estimate.shape())));
  }
  const double ref_energy = Energy(reference);
  if (ref_energy > 0.0) {
    Tensor err = ops::Sum(ops::Square(ops::Sub(estimate, reference)));
    Tensor den = ops::AddScalar(err, config.tau * ref_energy);
    return ops::Scale(ops::AddScalar(ops::Log(den), -std::log(ref_energy)), kDbPerNeper);
  }
  Tensor den = ops::AddScalar(ops::Sum(ops::Square(estimate)),
                              config.tau * Energy(mixture) + kEps);
  return ops::Scale(ops::Log(den), config.alpha * kDbPerNeper);
}

std::vector<double> Magnitudes(const Tensor& spec) {
  if (spec.rank() < 3 || spec.dim(-3) % 2 != 0) {
    throw ShapeError("magnitudes: expected (..., 2M, F, T), got " + ShapeToString(spec.shape()));
  }
  const std::int64_t plane = spec.dim(-2) * spec.dim(-1);
  const std::int64_t pairs = spec.numel() / (2 * plane);
  auto d = spec.data();
  std::vector<double> mag(pairs * plane);
  for (std::int64_t p = 0; p < pairs; ++p)
    for (std::int64_t i = 0; i < plane; ++i)
      mag[p * plane + i] = std::hypot(d[2 * p * plane + i], d[(2 * p + 1) * plane + i]);
  return mag;
}

double SpecSnrDb(const std::vector<double>& ref_mag, const std::vector<double>& est_mag) {
  if (ref_mag.size() != est_mag.size()) throw ShapeError("specsnr: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref_mag.size(); ++i) {
    num += ref_mag[i] * ref_mag[i];
    den += (ref_mag[i] - est_mag[i]) * (ref_mag[i] - est_mag[i]);
  }
  if (num <= 0.0) throw ValidationError("specsnr: silent reference");
  if (den <= num * 1e-15) return kMetricCapDb;
  return std::min(kMetricCapDb, 10.0 * std::log10(num / den));
}

}  // namespace sfc::train
