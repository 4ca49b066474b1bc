// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sfc {

// Seeded generator. Every random draw in the library goes through one of
// these so runs are reproducible from a single seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double Normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  bool Bernoulli(double p) { return Uniform(0.0, 1.0) < p; }
  std::uint64_t NextU64() { return engine_(); }

  // Independent stream derived from this generator's seed and a label.
  Rng Fork(std::string_view label);

 private:
  std::mt19937_64 engine_;
};

}  // namespace sfc
