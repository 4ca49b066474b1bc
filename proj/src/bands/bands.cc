// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/bands/bands.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "sfc/core/error.h"

namespace sfc::bands {

using nlohmann::json;

std::int64_t BandConfig::TotalWidth() const {
  std::int64_t n = 0;
  for (const auto& b : bands) n += b.width();
  return n;
}

bool BandConfig::IsPartition() const {
  std::int64_t expect = 0;
  for (const auto& b : bands) {
    if (b.start != expect) return false;
    expect = b.end;
  }
  return expect == num_bins;
}

void Validate(const BandConfig& config) {
  if (config.num_bins < 1) throw ValidationError("bands: F must be positive");
  if (config.bands.empty()) throw ValidationError("bands: empty band list");
  for (std::size_t k = 0; k < config.bands.size(); ++k) {
    const auto& b = config.bands[k];
    if (b.start < 0 || b.end > config.num_bins || b.start >= b.end) {
      throw ValidationError(fmt::format("bands: range error in band {} [{}, {}) with F={}", k,
                                        b.start, b.end, config.num_bins));
    }
    if (k > 0 && b.start < config.bands[k - 1].start) {
      throw ValidationError(fmt::format("bands: ordering error, band {} starts before band {}",
                                        k, k - 1));
    }
  }
  // Bands are sorted by start, so a running max of ends finds any gap.
  std::int64_t covered = 0;
  for (const auto& b : config.bands) {
    if (b.start > covered) {
      throw ValidationError(fmt::format("bands: coverage error at bin {}", covered));
    }
    covered = std::max(covered, b.end);
  }
  if (covered < config.num_bins) {
    throw ValidationError(fmt::format("bands: coverage error at bin {}", covered));
  }
}

BandConfig GenUniform(std::int64_t num_bins, std::int64_t num_bands) {
  if (num_bands < 1 || num_bands > num_bins) {
    throw ConfigError(fmt::format("gen_uniform: need 1 <= K <= F, got K={} F={}", num_bands,
                                  num_bins));
  }
  BandConfig c{fmt::format("uniform_{}", num_bands), num_bins, {}};
  auto edge = [&](std::int64_t k) { return (k * num_bins + num_bands - 1) / num_bands; };
  for (std::int64_t k = 0; k < num_bands; ++k) c.bands.push_back({edge(k), edge(k + 1)});
  return c;
}

BandConfig GenFull(std::int64_t num_bins, std::int64_t num_bands) {
  if (num_bands < 1 || num_bins < 1) throw ConfigError("gen_full: need K >= 1 and F >= 1");
  return {fmt::format("full_{}", num_bands), num_bins,
          std::vector<Band>(num_bands, Band{0, num_bins})};
}

std::vector<std::int64_t> LogSpacedEdges(std::int64_t num_bins, double steps_per_octave) {
  const double ratio = std::pow(2.0, 1.0 / steps_per_octave);
  std::vector<std::int64_t> edges = {0};
  while (true) {
    std::int64_t e = edges.back();
    double step = std::min(e * (ratio - 1.0), static_cast<double>(num_bins));
    std::int64_t width = std::max<std::int64_t>(1, std::llround(step));
    if (e + width >= num_bins) {
      // The remainder joins the final band when it would be narrower than
      // its predecessor, keeping widths non-decreasing.
      if (num_bins - e < width && edges.size() > 1) edges.back() = num_bins;
      else edges.push_back(num_bins);
      break;
    }
    edges.push_back(e + width);
  }
  return edges;
}

namespace {

std::int64_t CountFor(std::int64_t num_bins, double s) {
  return static_cast<std::int64_t>(LogSpacedEdges(num_bins, s).size()) - 1;
}

BandConfig FromEdges(std::string name, std::int64_t num_bins,
                     const std::vector<std::int64_t>& edges) {
  BandConfig c{std::move(name), num_bins, {}};
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) c.bands.push_back({edges[i], edges[i + 1]});
  return c;
}

}  // namespace

BandConfig GenLog12Tet(std::int64_t num_bins, std::int64_t target_bands, int sample_rate,
                       int n_fft, double* steps_per_octave) {
  if (target_bands < 2) throw ConfigError("gen_log12tet: target K must be >= 2");
  if (sample_rate <= 0 || n_fft <= 0 || num_bins != n_fft / 2 + 1) {
    throw ConfigError(fmt::format("gen_log12tet: F={} inconsistent with n_fft={}", num_bins, n_fft));
  }
  // Count grows with the number of steps per octave; bisect in log space.
  double lo = 0.05, hi = 1e5;
  const std::int64_t k_min = CountFor(num_bins, lo);
  const std::int64_t k_max = CountFor(num_bins, hi);
  auto unreachable = [&] {
    return ConfigError(fmt::format("gen_log12tet: K={} unreachable for F={}; achievable range "
                                   "[{}, {}]", target_bands, num_bins, k_min, k_max));
  };
  if (target_bands < k_min || target_bands > k_max) throw unreachable();
  // Smallest spacing reaching at least `k` bands.
  auto threshold = [&](std::int64_t k) {
    double a = lo, b = hi;
    for (int it = 0; it < 200; ++it) {
      double mid = std::sqrt(a * b);
      if (CountFor(num_bins, mid) >= k) b = mid;
      else a = mid;
    }
    return b;
  };
  // Take the middle of the interval that yields the target so that no edge
  // sits on a rounding tie.
  double s = threshold(target_bands);
  if (target_bands < k_max) s = std::sqrt(s * threshold(target_bands + 1));
  if (CountFor(num_bins, s) != target_bands) throw unreachable();
  if (steps_per_octave) *steps_per_octave = s;
  return FromEdges(fmt::format("log12tet_{}", target_bands), num_bins,
                   LogSpacedEdges(num_bins, s));
}

BandConfig GenMusical(std::int64_t num_bins, std::int64_t target_bands, int sample_rate,
                      int n_fft) {
  BandConfig cells = GenLog12Tet(num_bins, target_bands + 1, sample_rate, n_fft);
  BandConfig c{fmt::format("musical_standin_{}", target_bands), num_bins, {}};
  for (std::int64_t k = 0; k < target_bands; ++k) {
    c.bands.push_back({cells.bands[k].start, cells.bands[k + 1].end});
  }
  return c;
}

BandConfig FromJsonText(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("band file: ") + e.what());
  }
  for (const auto& [key, _] : j.items()) {
    if (key != "name" && key != "F" && key != "convention" && key != "bands") {
      throw FormatError("band file: unknown key '" + key + "'");
    }
  }
  BandConfig c;
  try {
    c.name = j.value("name", "");
    c.num_bins = j.at("F").get<std::int64_t>();
    std::string convention = j.value("convention", "zero_based_half_open");
    std::int64_t shift;
    if (convention == "zero_based_half_open") shift = 0;
    else if (convention == "one_based_inclusive") shift = 1;
    else throw FormatError("band file: unknown convention '" + convention + "'");
    for (const auto& b : j.at("bands")) {
      auto s = b.at(0).get<std::int64_t>();
      auto e = b.at(1).get<std::int64_t>();
      c.bands.push_back({s - shift, e});
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("band file: ") + e.what());
  }
  Validate(c);
  return c;
}

std::string ToJsonText(const BandConfig& config, const std::string& convention) {
  std::int64_t shift;
  if (convention == "zero_based_half_open") shift = 0;
  else if (convention == "one_based_inclusive") shift = 1;
  else throw ConfigError("band file: unknown convention '" + convention + "'");
  json bands = json::array();
  for (const auto& b : config.bands) bands.push_back({b.start + shift, b.end});
  json j = {{"name", config.name}, {"F", config.num_bins}, {"convention", convention},
            {"bands", bands}};
  return j.dump() + "\n";
}

BandConfig Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("band file: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return FromJsonText(ss.str());
}

void Save(const std::string& path, const BandConfig& config, const std::string& convention) {
  Validate(config);
  std::ofstream out(path);
  if (!out) throw FormatError("band file: cannot write " + path);
  out << ToJsonText(config, convention);
}

}  // namespace sfc::bands
