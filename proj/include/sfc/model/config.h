// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace sfc::model {

struct StftSection {
  int n_fft = 2048;
  int hop = 512;
  int sample_rate = 44100;
};

// kind: uniform | full | log12tet | musical | file
struct BandsSection {
  std::string kind = "musical";
  std::int64_t num_bands = 64;
  std::string file;
};

struct CodecSection {
  std::string kind = "sfc_ca";  // bs | sfc_ca | sfc_mamba
  std::int64_t inner = 64;      // D'
  int heads = 4;
  std::int64_t kernel_f = 3;
  std::int64_t kernel_t = 1;
  std::string encoder_query = "learnable";  // learnable | adaptive
  std::string decoder_query = "learnable";
  std::string pos_bias_init = "distance";   // distance | zero
  bool learn_pos_bias = true;
  bool learn_gamma = false;
  bool negate_in_band = false;
  bool band_mask = false;
  std::string scale_mode = "per_head";      // per_head | literal
  std::string strategy = "band_middle";     // tail | band_start_end | band_middle
  bool compat_literal_eq21 = false;
  std::int64_t state = 8;
  int decoder_hidden_layers = 1;            // band-split decoder MLP depth
};

// blocks == 0 gives an identity separator.
struct SeparatorSection {
  int blocks = 4;
  std::int64_t dim = 96;
  int heads = 4;
  std::int64_t hidden = 128;
  std::int64_t kernel = 8;
};

struct ModelSection {
  int channels = 2;
  int sources = 4;
  std::string dtype = "f32";  // f32 | f64
};

struct LossSection {
  double tau = 1e-3;
  double alpha = 0.1;
};

struct TrainSection {
  int steps = 500;
  double lr = 1e-3;
  int warmup = 50;
  double weight_decay = 1e-2;
  double clip = 5.0;
  double segment_seconds = 0.5;
  double gain_db = 10.0;
  double drop_prob = 0.1;
  int eval_mixtures = 8;
};

struct IoSection {
  std::string wav_format = "float32";  // pcm16 | float32
};

struct RunConfig {
  std::string preset = "small";  // small | medium | tiny
  StftSection stft;
  BandsSection bands;
  CodecSection codec;
  SeparatorSection separator;
  ModelSection model;
  LossSection loss;
  TrainSection train;
  IoSection io;
  std::uint64_t seed = 0;
};

// Defaults for a preset and codec kind. "tiny" is the desk-scale toy setup
// (16 kHz mono, two sources, a handful of bands).
RunConfig Preset(const std::string& preset, const std::string& codec_kind);

// Parses a config document. Missing keys take the values of the preset named
// by "preset" (default small) for "codec.kind"; unknown keys, wrong types and
// invalid enum values raise ConfigError.
RunConfig ParseRunConfig(const std::string& json_text);
// Fully resolved document with stable key order.
std::string ToJson(const RunConfig& config);
// 16 hex digits of FNV-1a over ToJson.
std::string ConfigHash(const RunConfig& config);
// Range and enum checks; ConfigError on failure.
void ValidateRunConfig(const RunConfig& config);

}  // namespace sfc::model
