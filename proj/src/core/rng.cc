// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/core/rng.h"

namespace sfc {

Rng Rng::Fork(std::string_view label) {
  // FNV-1a over the label, mixed with the next draw.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return Rng(h ^ NextU64());
}

}  // namespace sfc
