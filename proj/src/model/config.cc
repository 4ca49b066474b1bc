// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/model/config.h"

#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "sfc/core/error.h"

namespace sfc::model {

using nlohmann::ordered_json;

RunConfig Preset(const std::string& preset, const std::string& codec_kind) {
  RunConfig c;
  c.preset = preset;
  c.codec.kind = codec_kind;
  const bool mamba = codec_kind == "sfc_mamba";
  if (mamba) {
    c.codec.encoder_query = c.codec.decoder_query = "adaptive";
    // Band-based interleaving needs non-overlapping bands.
    c.bands.kind = "log12tet";
  }
  if (preset == "small") {
    c.codec.inner = mamba ? 32 : 64;
  } else if (preset == "medium") {
    c.codec.inner = mamba ? 48 : 96;
    c.separator = {6, 128, 8, 192, 8};
  } else if (preset == "tiny") {
    c.stft = {256, 128, 16000};
    c.bands = {"log12tet", 8, ""};
    c.codec.inner = mamba ? 8 : 16;
    c.codec.heads = 2;
    c.codec.state = 4;
    c.separator = {1, 16, 2, 16, 8};
    c.model = {1, 2, "f64"};
  } else {
    throw ConfigError("config: unknown preset '" + preset + "'");
  }
  return c;
}

namespace {

class Reader {
 public:
  Reader(const ordered_json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw ConfigError("config: section '" + section_ + "' must be an object");
  }
  template <typename T>
  void Get(const char* key, T& out) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const ordered_json::exception&) {
      throw ConfigError(fmt::format("config: {}.{} has the wrong type", section_, key));
    }
  }
  void RejectUnknown() const {
    for (const auto& [key, _] : j_.items()) {
      if (!known_.count(key)) {
        throw ConfigError(fmt::format("config: unknown key '{}{}{}'", section_,
                                      section_.empty() ? "" : ".", key));
      }
    }
  }

 private:
  const ordered_json& j_;
  std::string section_;
  std::set<std::string> known_;
};

void OneOf(const std::string& what, const std::string& value,
           std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (value == a) return;
  throw ConfigError(fmt::format("config: {} has invalid value '{}'", what, value));
}

}  // namespace

void ValidateRunConfig(const RunConfig& c) {
  OneOf("preset", c.preset, {"small", "medium", "tiny"});
  OneOf("bands.kind", c.bands.kind, {"uniform", "full", "log12tet", "musical", "file"});
  OneOf("codec.kind", c.codec.kind, {"bs", "sfc_ca", "sfc_mamba"});
  OneOf("codec.encoder_query", c.codec.encoder_query, {"learnable", "adaptive"});
  OneOf("codec.decoder_query", c.codec.decoder_query, {"learnable", "adaptive"});
  OneOf("codec.pos_bias_init", c.codec.pos_bias_init, {"distance", "zero"});
  OneOf("codec.scale_mode", c.codec.scale_mode, {"per_head", "literal"});
  OneOf("codec.strategy", c.codec.strategy, {"tail", "band_start_end", "band_middle"});
  OneOf("model.dtype", c.model.dtype, {"f32", "f64"});
  OneOf("io.wav_format", c.io.wav_format, {"pcm16", "float32"});
  auto positive = [](const char* what, double v) {
    if (!(v > 0)) throw ConfigError(fmt::format("config: {} must be positive", what));
  };
  positive("stft.n_fft", c.stft.n_fft);
  positive("stft.hop", c.stft.hop);
  positive("stft.sample_rate", c.stft.sample_rate);
  positive("bands.num_bands", static_cast<double>(c.bands.num_bands));
  positive("codec.inner", static_cast<double>(c.codec.inner));
  positive("codec.heads", c.codec.heads);
  positive("codec.state", static_cast<double>(c.codec.state));
  positive("separator.dim", static_cast<double>(c.separator.dim));
  positive("model.channels", c.model.channels);
  positive("model.sources", c.model.sources);
  positive("loss.tau", c.loss.tau);
  positive("train.segment_seconds", c.train.segment_seconds);
  if (c.stft.hop > c.stft.n_fft) throw ConfigError("config: stft.hop exceeds n_fft");
  if (c.separator.blocks < 0) throw ConfigError("config: separator.blocks must be >= 0");
  if (c.loss.alpha < 0) throw ConfigError("config: loss.alpha must be >= 0");
  if (c.train.steps < 0 || c.train.warmup < 0) throw ConfigError("config: negative step counts");
  if (c.train.drop_prob < 0 || c.train.drop_prob >= 1) {
    throw ConfigError("config: train.drop_prob must lie in [0, 1)");
  }
  if (c.bands.kind == "file" && c.bands.file.empty()) {
    throw ConfigError("config: bands.kind=file needs bands.file");
  }
}

RunConfig ParseRunConfig(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  std::string preset = j.value("preset", std::string("small"));
  std::string kind = "sfc_ca";
  if (j.contains("codec") && j["codec"].is_object() && j["codec"].contains("kind") &&
      j["codec"]["kind"].is_string()) {
    kind = j["codec"]["kind"].get<std::string>();
  }
  OneOf("preset", preset, {"small", "medium", "tiny"});
  RunConfig c = Preset(preset, kind);

  Reader top(j, "");
  top.Get("preset", c.preset);
  top.Get("seed", c.seed);
  static const char* kSections[] = {"stft", "bands", "codec", "separator", "model",
                                    "loss", "train", "io"};
  std::set<std::string> sections(std::begin(kSections), std::end(kSections));
  for (const auto& [key, _] : j.items()) {
    if (key != "preset" && key != "seed" && !sections.count(key)) {
      throw ConfigError(fmt::format("config: unknown key '{}'", key));
    }
  }
  auto read = [&](const char* name, auto&& fill) {
    if (!j.contains(name)) return;
    Reader r(j[name], name);
    fill(r);
    r.RejectUnknown();
  };
  read("stft", [&](Reader& r) {
    r.Get("n_fft", c.stft.n_fft);
    r.Get("hop", c.stft.hop);
    r.Get("sample_rate", c.stft.sample_rate);
  });
  read("bands", [&](Reader& r) {
    r.Get("kind", c.bands.kind);
    r.Get("num_bands", c.bands.num_bands);
    r.Get("file", c.bands.file);
  });
  read("codec", [&](Reader& r) {
    auto& s = c.codec;
    r.Get("kind", s.kind);
    r.Get("inner", s.inner);
    r.Get("heads", s.heads);
    r.Get("kernel_f", s.kernel_f);
    r.Get("kernel_t", s.kernel_t);
    r.Get("encoder_query", s.encoder_query);
    r.Get("decoder_query", s.decoder_query);
    r.Get("pos_bias_init", s.pos_bias_init);
    r.Get("learn_pos_bias", s.learn_pos_bias);
    r.Get("learn_gamma", s.learn_gamma);
    r.Get("negate_in_band", s.negate_in_band);
    r.Get("band_mask", s.band_mask);
    r.Get("scale_mode", s.scale_mode);
    r.Get("strategy", s.strategy);
    r.Get("compat_literal_eq21", s.compat_literal_eq21);
    r.Get("state", s.state);
    r.Get("decoder_hidden_layers", s.decoder_hidden_layers);
  });
  read("separator", [&](Reader& r) {
    r.Get("blocks", c.separator.blocks);
    r.Get("dim", c.separator.dim);
    r.Get("heads", c.separator.heads);
    r.Get("hidden", c.separator.hidden);
    r.Get("kernel", c.separator.kernel);
  });
  read("model", [&](Reader& r) {
    r.Get("channels", c.model.channels);
    r.Get("sources", c.model.sources);
    r.Get("dtype", c.model.dtype);
  });
  read("loss", [&](Reader& r) {
    r.Get("tau", c.loss.tau);
    r.Get("alpha", c.loss.alpha);
  });
  read("train", [&](Reader& r) {
    auto& t = c.train;
    r.Get("steps", t.steps);
    r.Get("lr", t.lr);
    r.Get("warmup", t.warmup);
    r.Get("weight_decay", t.weight_decay);
    r.Get("clip", t.clip);
    r.Get("segment_seconds", t.segment_seconds);
    r.Get("gain_db", t.gain_db);
    r.Get("drop_prob", t.drop_prob);
    r.Get("eval_mixtures", t.eval_mixtures);
  });
  read("io", [&](Reader& r) { r.Get("wav_format", c.io.wav_format); });
  ValidateRunConfig(c);
  return c;
}

std::string ToJson(const RunConfig& c) {
  ordered_json j;
  j["preset"] = c.preset;
  j["seed"] = c.seed;
  j["stft"] = {{"n_fft", c.stft.n_fft}, {"hop", c.stft.hop}, {"sample_rate", c.stft.sample_rate}};
  j["bands"] = {{"kind", c.bands.kind}, {"num_bands", c.bands.num_bands}, {"file", c.bands.file}};
  const auto& s = c.codec;
  j["codec"] = {{"kind", s.kind},
                {"inner", s.inner},
                {"heads", s.heads},
                {"kernel_f", s.kernel_f},
                {"kernel_t", s.kernel_t},
                {"encoder_query", s.encoder_query},
                {"decoder_query", s.decoder_query},
                {"pos_bias_init", s.pos_bias_init},
                {"learn_pos_bias", s.learn_pos_bias},
                {"learn_gamma", s.learn_gamma},
                {"negate_in_band", s.negate_in_band},
                {"band_mask", s.band_mask},
                {"scale_mode", s.scale_mode},
                {"strategy", s.strategy},
                {"compat_literal_eq21", s.compat_literal_eq21},
                {"state", s.state},
                {"decoder_hidden_layers", s.decoder_hidden_layers}};
  j["separator"] = {{"blocks", c.separator.blocks},
                    {"dim", c.separator.dim},
                    {"heads", c.separator.heads},
                    {"hidden", c.separator.hidden},
                    {"kernel", c.separator.kernel}};
  j["model"] = {{"channels", c.model.channels},
                {"sources", c.model.sources},
                {"dtype", c.model.dtype}};
  j["loss"] = {{"tau", c.loss.tau}, {"alpha", c.loss.alpha}};
  const auto& t = c.train;
  j["train"] = {{"steps", t.steps},
                {"lr", t.lr},
                {"warmup", t.warmup},
                {"weight_decay", t.weight_decay},
                {"clip", t.clip},
                {"segment_seconds", t.segment_seconds},
                {"gain_db", t.gain_db},
                {"drop_prob", t.drop_prob},
                {"eval_mixtures", t.eval_mixtures}};
  j["io"] = {{"wav_format", c.io.wav_format}};
  return j.dump(2);
}

std::string ConfigHash(const RunConfig& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : ToJson(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace sfc::model
