// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

// Naive reference implementations shared by unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <list>
#include <string>
#include <vector>

#include "sfc/bands/bands.h"
#include "sfc/codec/interleave.h"
#include "sfc/core/rng.h"

namespace sfc::testing {

using codec::CodecStage;
using codec::InterleavePlan;
using codec::InterleaveStrategy;
using codec::ScanDirection;

// Piecewise definition written from the one-based inclusive form: band
// [a, b] (1-based), bin j (1-based), |G| = b - a.
inline double NaiveBias(std::int64_t start, std::int64_t end, std::int64_t f, bool negate) {
  const double a = start + 1, b = end, j = f + 1;
  if (j > b) return b - j;
  if (j < a) return j - a;
  const double width = b - a == 0 ? 1.0 : b - a;
  const double v = std::fabs((a + b) / 2.0 - j) / width;
  return negate ? -v : v;
}

inline bands::BandConfig RandomBands(Rng& rng) {
  const std::int64_t f = 1 + static_cast<std::int64_t>(rng.Uniform(0, 60));
  bands::BandConfig c{"rand", f, {}};
  std::int64_t covered = 0;
  while (covered < f) {
    std::int64_t s = static_cast<std::int64_t>(rng.Uniform(0, static_cast<double>(covered) + 1));
    s = std::min(s, covered);
    if (!c.bands.empty()) s = std::max(s, c.bands.back().start);
    std::int64_t e = std::min<std::int64_t>(f, covered + 1 + static_cast<std::int64_t>(rng.Uniform(0, 8)));
    c.bands.push_back({s, e});
    covered = e;
  }
  return c;
}

inline bands::BandConfig Partition(std::vector<std::int64_t> edges) {
  bands::BandConfig c{"p", edges.back(), {}};
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) c.bands.push_back({edges[i], edges[i + 1]});
  return c;
}

// Builds the frequency-ordered list by inserting tokens next to named
// features, then reads off slots.
inline InterleavePlan NaivePlan(const bands::BandConfig& c, InterleaveStrategy s, ScanDirection d,
                         CodecStage g, bool literal) {
  std::list<std::string> seq;
  for (std::int64_t f = 0; f < c.num_bins; ++f) seq.push_back("f" + std::to_string(f));
  auto find = [&](std::int64_t f) {
    return std::find(seq.begin(), seq.end(), "f" + std::to_string(f));
  };
  const bool fwd = d == ScanDirection::kForward, enc = g == CodecStage::kEncoder;
  const std::int64_t nk = c.num_bands();
  for (std::int64_t k = 0; k < nk; ++k) {
    const std::string q = "q" + std::to_string(k);
    const auto& b = c.bands[k];
    switch (s) {
      case InterleaveStrategy::kTail:
        // Scan-order end for encoders, scan-order start for decoders.
        if (fwd == enc) seq.push_back(q);
        else seq.insert(find(0), q);  // keeps q0..qk-1 ahead of f0 in order
        break;
      case InterleaveStrategy::kBandStartEnd:
        if (fwd == enc) seq.insert(std::next(find(b.end - 1)), q);
        else if (literal) seq.insert(std::next(find(b.start)), q);
        else seq.insert(find(b.start), q);
        break;
      case InterleaveStrategy::kBandMiddle: {
        // One-based inclusive band [s+1, e]; token after the floor midpoint.
        const std::int64_t mid1 = (b.start + 1 + b.end) / 2;
        seq.insert(std::next(find(mid1 - 1)), q);
        break;
      }
    }
  }
  InterleavePlan p;
  p.length = static_cast<std::int64_t>(seq.size());
  p.query_slots.resize(nk);
  std::int64_t i = 0;
  for (const auto& tok : seq) {
    if (tok[0] == 'f') p.feature_slots.push_back(i);
    else p.query_slots[std::stoll(tok.substr(1))] = i;
    ++i;
  }
  return p;
}

}  // namespace sfc::testing
