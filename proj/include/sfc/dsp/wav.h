// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "sfc/dsp/stft.h"

namespace sfc::dsp {

enum class WavFormat { kPcm16, kFloat32 };

// Reads 16-bit PCM or 32-bit IEEE-float RIFF/WAVE files.
Waveform ReadWav(const std::string& path);
// Writes `w`; PCM16 scales by 32768 and clips.
void WriteWav(const std::string& path, const Waveform& w,
              WavFormat format = WavFormat::kFloat32);

}  // namespace sfc::dsp
