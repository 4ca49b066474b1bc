// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "sfc/core/tensor.h"

namespace sfc::dsp {

// Multichannel audio. Samples are held in double; f32 I/O rounds on write.
struct Waveform {
  int sample_rate = 44100;
  std::vector<std::vector<double>> channels;

  int num_channels() const { return static_cast<int>(channels.size()); }
  std::int64_t length() const {
    return channels.empty() ? 0 : static_cast<std::int64_t>(channels[0].size());
  }
  // Throws ValidationError on ragged channels or a non-positive rate.
  void Validate() const;
  // (M, L) tensor view of the samples.
  Tensor ToTensor() const;
  static Waveform FromTensor(const Tensor& t, int sample_rate);
};

// Stacked real/imag parts: channel m occupies rows 2m (real) and 2m+1 (imag).
struct Spectrogram {
  Tensor values;  // (2M, F, T)
  int n_fft = 2048;
  int hop = 512;

  std::int64_t num_bins() const { return values.dim(1); }
  std::int64_t num_frames() const { return values.dim(2); }
};

struct StftConfig {
  int n_fft = 2048;
  int hop = 512;
};

// Frames produced for a signal of `length` samples: 1 + length / hop.
std::int64_t NumFrames(std::int64_t length, int hop);

// Periodic sqrt-Hann window, used for both analysis and synthesis.
std::vector<double> SqrtHannWindow(int n_fft);

// Overlap-added product of analysis and synthesis windows over one hop
// period (length hop). Constant for a COLA-compliant pair.
std::vector<double> ColaSum(int n_fft, int hop);

// Reflect-padded (n_fft / 2 both sides) STFT with sqrt-Hann analysis.
// Throws LengthError when the signal is not longer than n_fft.
Spectrogram Stft(const Waveform& w, const StftConfig& config = {});

// Inverse of Stft, trimmed to `length` samples. Throws FormatError when the
// spectrogram's shape disagrees with its n_fft / hop / length metadata.
Waveform Istft(const Spectrogram& s, std::int64_t length, int sample_rate = 44100);

// Differentiable inverse STFT. spec: (..., 2M, F, T) -> (..., M, length).
Tensor IstftTensor(const Tensor& spec, int n_fft, int hop, std::int64_t length);

// Complex multiply of mixture X (2M, F, T) by masks (N, 2M, F, T), per
// channel and TF bin. Differentiable in both arguments.
Tensor ApplyMask(const Tensor& mixture, const Tensor& masks);

}  // namespace sfc::dsp
