// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/train/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sfc/core/error.h"
#include "sfc/train/loss.h"

namespace sfc::train {

namespace {

double RatioDb(double num, double den) {
  if (num <= 0.0) throw ValidationError("metric: silent reference");
  if (den <= num * 1e-15) return kMetricCapDb;
  return std::min(kMetricCapDb, 10.0 * std::log10(num / den));
}

std::vector<double> Flatten(const std::vector<std::vector<double>>& x) {
  std::vector<double> out;
  for (const auto& c : x) out.insert(out.end(), c.begin(), c.end());
  return out;
}

}  // namespace

double SnrDb(const std::vector<double>& ref, const std::vector<double>& est) {
  if (ref.size() != est.size()) throw ShapeError("snr: length mismatch");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += ref[i] * ref[i];
    den += (ref[i] - est[i]) * (ref[i] - est[i]);
  }
  return RatioDb(num, den);
}

double SiSdrDb(const std::vector<double>& ref, const std::vector<double>& est) {
  if (ref.size() != est.size() || ref.empty()) throw ShapeError("si_sdr: length mismatch");
  const double n = static_cast<double>(ref.size());
  double mr = 0, me = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    mr += ref[i] / n;
    me += est[i] / n;
  }
  double dot = 0, rr = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    dot += (est[i] - me) * (ref[i] - mr);
    rr += (ref[i] - mr) * (ref[i] - mr);
  }
  if (rr <= 0.0) throw ValidationError("si_sdr: silent reference");
  const double scale = dot / rr;
  double target = 0, noise = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double t = scale * (ref[i] - mr);
    const double r = (est[i] - me) - t;
    target += t * t;
    noise += r * r;
  }
  if (target <= 0.0) return -kMetricCapDb;
  if (noise <= target * 1e-15) return kMetricCapDb;
  return std::clamp(10.0 * std::log10(target / noise), -kMetricCapDb, kMetricCapDb);
}

std::vector<double> ChunkSdrs(const std::vector<std::vector<double>>& ref,
                              const std::vector<std::vector<double>>& est, std::int64_t chunk) {
  if (ref.size() != est.size() || ref.empty()) throw ShapeError("chunk_sdr: channel mismatch");
  const auto len = static_cast<std::int64_t>(ref[0].size());
  const std::int64_t count = std::max<std::int64_t>(1, len / chunk);
  const std::int64_t width = len < chunk ? len : chunk;
  std::vector<double> out;
  for (std::int64_t c = 0; c < count; ++c) {
    double num = 0, den = 0;
    for (std::size_t ch = 0; ch < ref.size(); ++ch) {
      for (std::int64_t i = c * width; i < (c + 1) * width; ++i) {
        num += ref[ch][i] * ref[ch][i];
        den += (ref[ch][i] - est[ch][i]) * (ref[ch][i] - est[ch][i]);
      }
    }
    if (num > 0.0) out.push_back(RatioDb(num, den));
  }
  return out;
}

double Median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

TrackMetrics EvaluateTrack(const std::vector<std::vector<double>>& ref,
                           const std::vector<std::vector<double>>& est, int sample_rate) {
  TrackMetrics m;
  m.usdr = SnrDb(Flatten(ref), Flatten(est));
  m.sisdr = SiSdrDb(Flatten(ref), Flatten(est));
  const auto chunk = static_cast<std::int64_t>(sample_rate);
  auto sdrs = ChunkSdrs(ref, est, chunk);
  const auto len = static_cast<std::int64_t>(ref[0].size());
  m.chunks_used = static_cast<int>(sdrs.size());
  m.chunks_skipped = static_cast<int>(std::max<std::int64_t>(1, len / chunk)) - m.chunks_used;
  m.csdr = Median(sdrs);
  return m;
}

Aggregate AggregateTracks(const std::vector<TrackMetrics>& tracks) {
  Aggregate a;
  std::vector<double> csdr;
  for (const auto& t : tracks) {
    a.usdr += t.usdr / static_cast<double>(tracks.size());
    a.sisdr += t.sisdr / static_cast<double>(tracks.size());
    if (!std::isnan(t.csdr)) csdr.push_back(t.csdr);
  }
  a.csdr = Median(csdr);
  return a;
}

}  // namespace sfc::train
