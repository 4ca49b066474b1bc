// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/dsp/chunked.h"

#include <cmath>

#include <fmt/format.h>

namespace sfc::dsp {

std::vector<Waveform> ChunkedSeparate(const ChunkSeparator& model, const Waveform& w,
                                      const ChunkConfig& config) {
  w.Validate();
  const std::int64_t chunk = std::llround(config.chunk_seconds * w.sample_rate);
  const std::int64_t overlap = std::llround(config.overlap_seconds * w.sample_rate);
  if (chunk <= overlap || overlap < 0) {
    throw ConfigError(fmt::format("chunked_separate: chunk {} s must exceed overlap {} s",
                                  config.chunk_seconds, config.overlap_seconds));
  }
  const std::int64_t len = w.length();
  const std::int64_t step = chunk - overlap;

  std::vector<std::int64_t> starts = {0};
  // A new chunk is only needed while the previous one stops short of the end.
  while (starts.back() + chunk < len) starts.push_back(starts.back() + step);

  std::vector<Waveform> out;
  std::vector<double> weight(static_cast<std::size_t>(len), 0.0);
  for (std::size_t j = 0; j < starts.size(); ++j) {
    const std::int64_t s = starts[j];
    const std::int64_t e = std::min(s + chunk, len);
    Waveform piece;
    piece.sample_rate = w.sample_rate;
    for (const auto& c : w.channels) piece.channels.emplace_back(c.begin() + s, c.begin() + e);
    auto sources = model(piece);
    if (out.empty()) {
      out.resize(sources.size());
      for (auto& o : out) {
        o.sample_rate = w.sample_rate;
        o.channels.assign(w.num_channels(), std::vector<double>(len, 0.0));
      }
    }
    if (sources.size() != out.size()) throw ShapeError("chunked_separate: source count changed");
    const bool has_prev = j > 0;
    const bool has_next = j + 1 < starts.size();
    for (std::int64_t i = s; i < e; ++i) {
      double gain = 1.0;
      if (has_prev && i - s < overlap) gain *= (i - s + 0.5) / overlap;
      if (has_next && i >= starts[j + 1]) gain *= 1.0 - (i - starts[j + 1] + 0.5) / overlap;
      weight[i] += gain;
      for (std::size_t n = 0; n < out.size(); ++n) {
        const auto& src = sources[n];
        if (src.length() != e - s || src.num_channels() != w.num_channels()) {
          throw ShapeError("chunked_separate: model changed the chunk shape");
        }
        for (int m = 0; m < w.num_channels(); ++m) {
          out[n].channels[m][i] += gain * src.channels[m][i - s];
        }
      }
    }
  }
  // Ramps already sum to one when chunk >= 2 * overlap; normalizing also
  // covers shorter chunks where three ramps meet.
  for (auto& o : out) {
    for (auto& c : o.channels) {
      for (std::int64_t i = 0; i < len; ++i) c[i] /= weight[i];
    }
  }
  return out;
}

}  // namespace sfc::dsp
