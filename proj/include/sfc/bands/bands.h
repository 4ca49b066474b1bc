// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sfc::bands {

// Half-open bin range [start, end), 0-based.
struct Band {
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t width() const { return end - start; }
  bool Contains(std::int64_t f) const { return f >= start && f < end; }
  bool operator==(const Band&) const = default;
};

struct BandConfig {
  std::string name;
  std::int64_t num_bins = 0;  // F
  std::vector<Band> bands;

  std::int64_t num_bands() const { return static_cast<std::int64_t>(bands.size()); }
  // Sum of band widths; equals F for a partition.
  std::int64_t TotalWidth() const;
  bool IsPartition() const;
  bool operator==(const BandConfig&) const = default;
};

// Throws ValidationError naming the first violated rule: empty config,
// out-of-range or empty band, unsorted starts, or an uncovered bin.
void Validate(const BandConfig& config);

// Contiguous equal-ish bands, the wider ones first.
BandConfig GenUniform(std::int64_t num_bins, std::int64_t num_bands);

// K copies of the whole range.
BandConfig GenFull(std::int64_t num_bins, std::int64_t num_bands);

// Partition with semitone-geometric growth: each edge is the previous one
// times 2^(1/s), rounded, never less than one bin past it (the linear
// low-frequency region). Widths are non-decreasing. The spacing s (steps per
// octave) is searched so that exactly `target_bands` bands result; it is
// written to `steps_per_octave` when non-null. Throws ConfigError with the
// achievable range when the count cannot be hit.
BandConfig GenLog12Tet(std::int64_t num_bins, std::int64_t target_bands, int sample_rate,
                       int n_fft, double* steps_per_octave = nullptr);

// Band edges for a fixed spacing; exposed for oracles.
std::vector<std::int64_t> LogSpacedEdges(std::int64_t num_bins, double steps_per_octave);

// Overlapping stand-in for the musical split: K + 1 log-spaced cells, with
// band k spanning cells k and k + 1, so neighbouring bands share a cell.
BandConfig GenMusical(std::int64_t num_bins, std::int64_t target_bands, int sample_rate,
                      int n_fft);

// Band files are JSON: {"name", "F", "convention", "bands": [[s, e], ...]}.
// convention "zero_based_half_open" stores [s, e) as is;
// "one_based_inclusive" stores [s + 1, e].
BandConfig FromJsonText(const std::string& text);
std::string ToJsonText(const BandConfig& config,
                       const std::string& convention = "zero_based_half_open");
BandConfig Load(const std::string& path);
void Save(const std::string& path, const BandConfig& config,
          const std::string& convention = "zero_based_half_open");

}  // namespace sfc::bands
