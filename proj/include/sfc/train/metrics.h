// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace sfc::train {

// Signals are flat sample vectors (channels concatenated). All results are
// capped at 150 dB; a silent reference raises ValidationError.
double SnrDb(const std::vector<double>& ref, const std::vector<double>& est);
// Zero-mean, optimally scaled reference projection.
double SiSdrDb(const std::vector<double>& ref, const std::vector<double>& est);
// SDR of each non-overlapping chunk of `chunk` samples per channel; chunks
// with a silent reference are skipped. A signal shorter than one chunk
// counts as a single chunk.
std::vector<double> ChunkSdrs(const std::vector<std::vector<double>>& ref,
                              const std::vector<std::vector<double>>& est, std::int64_t chunk);
double Median(std::vector<double> v);

struct TrackMetrics {
  double usdr = 0;   // whole-track SNR
  double csdr = 0;   // median chunk SDR (NaN when every chunk is silent)
  double sisdr = 0;
  int chunks_used = 0;
  int chunks_skipped = 0;
};
// ref, est: per-channel samples of one source of one track.
TrackMetrics EvaluateTrack(const std::vector<std::vector<double>>& ref,
                           const std::vector<std::vector<double>>& est, int sample_rate);

struct Aggregate {
  double usdr = 0;  // mean over tracks
  double csdr = 0;  // median over tracks
  double sisdr = 0;  // mean over tracks
};
Aggregate AggregateTracks(const std::vector<TrackMetrics>& tracks);

}  // namespace sfc::train
