// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/cli/cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "sfc/bands/bands.h"
#include "sfc/codec/sfc_ca.h"
#include "sfc/core/error.h"
#include "sfc/core/ops.h"
#include "sfc/core/serialize.h"
#include "sfc/cost/cost.h"
#include "sfc/dsp/wav.h"
#include "sfc/model/config.h"
#include "sfc/model/model.h"
#include "sfc/train/loss.h"
#include "sfc/train/metrics.h"
#include "sfc/train/toy.h"

namespace sfc::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Globals {
  std::string config_path;
  std::string out_dir;
  std::string preset;
  std::string codec;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> sets;
};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << text;
}

// Sets a dotted path; the value is parsed as JSON, falling back to a string.
void SetPath(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects key.path=value, got '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

// Defaults, then the config file, then flags.
model::RunConfig ResolveConfig(const Globals& g) {
  Json doc = Json::object();
  if (!g.config_path.empty()) {
    doc = Json::parse(ReadFile(g.config_path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw ConfigError("config: '" + g.config_path + "' is not a JSON object");
    }
  }
  if (!g.preset.empty()) doc["preset"] = g.preset;
  if (!g.codec.empty()) doc["codec"]["kind"] = g.codec;
  if (g.seed_set) doc["seed"] = g.seed;
  for (const auto& s : g.sets) SetPath(doc, s);
  return model::ParseRunConfig(doc.dump());
}

model::Model LoadOrBuild(const Globals& g, const std::string& checkpoint) {
  if (!checkpoint.empty()) return model::Model::Load(checkpoint);
  return model::Model(ResolveConfig(g));
}

fs::path RequireOutDir(const Globals& g) {
  if (g.out_dir.empty()) throw ConfigError("--out-dir is required for this command");
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir);
}

void WriteResolvedConfig(const fs::path& dir, const model::RunConfig& c) {
  WriteFile(dir / "config.json", model::ToJson(c) + "\n");
}

Json ShapeJson(const Shape& s) {
  Json a = Json::array();
  for (auto d : s) a.push_back(d);
  return a;
}

// Mono input feeds every model channel; otherwise counts must match.
Tensor MixtureFromWav(const dsp::Waveform& w, const model::RunConfig& c) {
  if (w.sample_rate != c.stft.sample_rate) {
    throw ConfigError(fmt::format("input sample rate {} does not match stft.sample_rate {}",
                                  w.sample_rate, c.stft.sample_rate));
  }
  dsp::Waveform x = w;
  if (x.num_channels() == 1 && c.model.channels > 1) x.channels.assign(c.model.channels, w.channels[0]);
  if (x.num_channels() != c.model.channels) {
    throw ConfigError(fmt::format("input has {} channels, model expects {}", x.num_channels(),
                                  c.model.channels));
  }
  return x.ToTensor();
}

bands::BandConfig GenerateBands(const std::string& kind, std::int64_t f, std::int64_t k,
                                int sample_rate) {
  const int n_fft = static_cast<int>(2 * (f - 1));
  if (kind == "uniform") return bands::GenUniform(f, k);
  if (kind == "full") return bands::GenFull(f, k);
  if (kind == "log12tet") return bands::GenLog12Tet(f, k, sample_rate, n_fft);
  if (kind == "musical") return bands::GenMusical(f, k, sample_rate, n_fft);
  throw ConfigError("bands: unknown kind '" + kind + "'");
}

std::vector<std::string> Split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Json DbJson(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

// Commands.

void BandsGen(const Globals& g, const std::string& kind, std::int64_t f, std::int64_t k,
              int sample_rate, const std::string& convention, const std::string& out_path,
              std::ostream& out) {
  auto b = GenerateBands(kind, f, k, sample_rate);
  std::string text = bands::ToJsonText(b, convention);
  if (text.empty() || text.back() != '\n') text += '\n';
  std::string path = out_path;
  if (path.empty() && !g.out_dir.empty()) path = (fs::path(g.out_dir) / "bands.json").string();
  if (path.empty()) {
    out << text;
    return;
  }
  WriteFile(path, text);
  Json r{{"kind", "bands"}, {"path", path}, {"F", b.num_bins}, {"K", b.num_bands()},
         {"partition", b.IsPartition()}};
  out << r.dump() << "\n";
}

void BandsValidate(const std::string& path, std::ostream& out) {
  const auto b = bands::Load(path);
  bands::Validate(b);
  Json r{{"kind", "bands_valid"}, {"path", path},      {"F", b.num_bins},
         {"K", b.num_bands()},    {"partition", b.IsPartition()}, {"total_width", b.TotalWidth()}};
  out << r.dump() << "\n";
}

void BandsExport(const Globals& g, const std::string& path, const std::string& format,
                 const std::string& convention, const std::string& out_path, std::ostream& out) {
  const auto b = bands::Load(path);
  std::string text;
  if (format == "csv") {
    text = "k,start,end,width\n";
    for (std::int64_t k = 0; k < b.num_bands(); ++k) {
      const auto& band = b.bands[k];
      text += fmt::format("{},{},{},{}\n", k, band.start, band.end, band.width());
    }
  } else if (format == "json") {
    text = bands::ToJsonText(b, convention);
    if (text.empty() || text.back() != '\n') text += '\n';
  } else {
    throw ConfigError("bands export: unknown format '" + format + "'");
  }
  std::string dest = out_path;
  if (dest.empty() && !g.out_dir.empty()) {
    dest = (fs::path(g.out_dir) / (format == "csv" ? "bands.csv" : "bands.json")).string();
  }
  if (dest.empty()) {
    out << text;
  } else {
    WriteFile(dest, text);
    out << Json{{"kind", "bands_export"}, {"path", dest}, {"format", format}}.dump() << "\n";
  }
}

void ModelInit(const Globals& g, std::ostream& out) {
  const auto cfg = ResolveConfig(g);
  const auto dir = RequireOutDir(g);
  const model::Model m(cfg);
  m.Save((dir / "model.sfck").string());
  WriteResolvedConfig(dir, cfg);
  Json r{{"kind", "model_init"},
         {"checkpoint", (dir / "model.sfck").string()},
         {"params", m.params().Count()},
         {"signature", m.ParameterSignature()},
         {"config_hash", model::ConfigHash(cfg)}};
  out << r.dump() << "\n";
}

void ModelInspect(const Globals& g, const std::string& checkpoint, double seconds,
                  std::ostream& out) {
  const model::Model m = LoadOrBuild(g, checkpoint);
  const auto& cfg = m.config();
  const std::string hash = model::ConfigHash(cfg);
  std::string text;
  auto emit = [&](const Json& j) { text += j.dump() + "\n"; };
  emit({{"kind", "model"},
        {"codec", cfg.codec.kind},
        {"preset", cfg.preset},
        {"F", m.bands().num_bins},
        {"K", m.bands().num_bands()},
        {"params", m.params().Count()},
        {"signature", m.ParameterSignature()},
        {"layout", m.codec().Layout()},
        {"config_hash", hash}});
  for (const auto& p : m.params().all()) {
    emit({{"kind", "param"}, {"name", p.name}, {"shape", ShapeJson(p.tensor.shape())},
          {"count", p.tensor.numel()}, {"trainable", true}});
  }
  for (const auto& b : m.buffers()) {
    emit({{"kind", "buffer"}, {"name", b.name}, {"shape", ShapeJson(b.tensor.shape())},
          {"count", b.tensor.numel()}, {"trainable", false}});
  }
  const auto report = cost::Report(cfg, seconds);
  for (const auto& c : report.components) {
    emit({{"kind", "cost"}, {"component", c.name}, {"params", c.params},
          {"gflops_per_s", c.flops / seconds / 1e9}});
  }
  emit({{"kind", "cost"}, {"component", "total"}, {"params", report.TotalParams()},
        {"gflops_per_s", report.FlopsPerSecond() / 1e9}, {"frames", report.frames}});
  out << text;
  if (!g.out_dir.empty()) WriteFile(fs::path(g.out_dir) / "inspect.jsonl", text);
}

void Roundtrip(Globals g, const std::string& input, std::ostream& out) {
  g.sets.push_back("separator.blocks=0");
  const auto cfg = ResolveConfig(g);
  const model::Model m(cfg);
  const auto wav = dsp::ReadWav(input);
  const Tensor mix = MixtureFromWav(wav, cfg);
  const auto result = m.Forward(mix);
  Tensor spec_sum = ops::Sum(result.spec, 0);
  const double snr = train::SpecSnrDb(train::Magnitudes(m.Spectrogram(mix)),
                                      train::Magnitudes(spec_sum));
  Json r{{"kind", "roundtrip"}, {"input", input}, {"codec", cfg.codec.kind},
         {"spec_snr_db", snr},  {"config_hash", model::ConfigHash(cfg)}};
  if (!g.out_dir.empty()) {
    const auto dir = RequireOutDir(g);
    Tensor wave = ops::Sum(result.waveform, 0);
    dsp::WriteWav((dir / "roundtrip.wav").string(),
                  dsp::Waveform::FromTensor(wave, cfg.stft.sample_rate),
                  cfg.io.wav_format == "pcm16" ? dsp::WavFormat::kPcm16 : dsp::WavFormat::kFloat32);
    WriteResolvedConfig(dir, cfg);
    WriteFile(dir / "roundtrip.jsonl", r.dump() + "\n");
  }
  out << r.dump() << "\n";
}

void Train(const Globals& g, int steps, int eval_every, bool verbose, std::ostream& out) {
  const auto cfg = ResolveConfig(g);
  model::Model m(cfg);
  const auto hist = train::TrainToy(m, {.steps = steps, .eval_every = eval_every, .verbose = verbose});
  const std::string hash = model::ConfigHash(cfg);
  const std::string history =
      Json{{"kind", "header"}, {"config_hash", hash}}.dump() + "\n" + hist.ToJsonLines();
  const std::size_t n = hist.steps.size();
  const std::size_t w = std::min<std::size_t>(10, n);
  double first = 0, last = 0;
  for (std::size_t i = 0; i < w; ++i) {
    first += hist.steps[i].loss / static_cast<double>(w);
    last += hist.steps[n - w + i].loss / static_cast<double>(w);
  }
  Json r{{"kind", "train"},
         {"codec", cfg.codec.kind},
         {"steps", n},
         {"loss_ma_first", w ? Json(first) : Json(nullptr)},
         {"loss_ma_last", w ? Json(last) : Json(nullptr)},
         {"sisdr_improvement_db", hist.evals.back().sisdr_improvement},
         {"config_hash", hash}};
  if (!g.out_dir.empty()) {
    const auto dir = RequireOutDir(g);
    WriteFile(dir / "history.jsonl", history);
    WriteResolvedConfig(dir, cfg);
    m.Save((dir / "model.sfck").string());
    WriteFile(dir / "train.jsonl", r.dump() + "\n");
  }
  out << r.dump() << "\n";
}

void Eval(const Globals& g, const std::vector<std::string>& refs,
          const std::vector<std::string>& ests, std::ostream& out) {
  if (refs.size() != ests.size() || refs.empty()) {
    throw ConfigError("eval: give one --estimate per --reference");
  }
  std::string text;
  std::vector<train::TrackMetrics> tracks;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto r = dsp::ReadWav(refs[i]);
    const auto e = dsp::ReadWav(ests[i]);
    if (r.sample_rate != e.sample_rate || r.num_channels() != e.num_channels() ||
        r.length() != e.length()) {
      throw ValidationError(fmt::format("eval: '{}' and '{}' differ in rate, channels or length",
                                        refs[i], ests[i]));
    }
    const auto t = train::EvaluateTrack(r.channels, e.channels, r.sample_rate);
    tracks.push_back(t);
    text += Json{{"kind", "track"},      {"reference", refs[i]},     {"estimate", ests[i]},
                 {"usdr", t.usdr},       {"csdr", DbJson(t.csdr)},   {"sisdr", t.sisdr},
                 {"chunks_used", t.chunks_used}, {"chunks_skipped", t.chunks_skipped}}
                .dump() +
            "\n";
  }
  const auto a = train::AggregateTracks(tracks);
  text += Json{{"kind", "aggregate"}, {"tracks", tracks.size()}, {"usdr_mean", a.usdr},
               {"csdr_median", DbJson(a.csdr)}, {"sisdr_mean", a.sisdr}}
              .dump() +
          "\n";
  out << text;
  if (!g.out_dir.empty()) WriteFile(fs::path(g.out_dir) / "eval.jsonl", text);
}

void AttnMap(const Globals& g, const std::string& input, const std::string& checkpoint,
             std::ostream& out) {
  const model::Model m = LoadOrBuild(g, checkpoint);
  const auto& cfg = m.config();
  if (cfg.codec.kind != "sfc_ca") {
    throw ConfigError("attn-map needs an sfc_ca codec, got '" + cfg.codec.kind + "'");
  }
  const auto dir = RequireOutDir(g);
  const Tensor mix = MixtureFromWav(dsp::ReadWav(input), cfg);
  const auto enc = m.codec().Encode(m.Spectrogram(mix));
  if (!enc.attention) throw ConfigError("attn-map: encoder returned no attention weights");
  const Tensor map = codec::LogSpectrogram(codec::AttentionSpectrogram(*enc.attention));
  SaveTensor((dir / "attention.sfct").string(), map);
  const std::string hash = model::ConfigHash(cfg);
  Json side{{"tensor", "attention.sfct"},
            {"shape", ShapeJson(map.shape())},
            {"axes", {"frame", "bin"}},
            {"values", "log10 of attention weight averaged over heads and bands"},
            {"input", input},
            {"hop", cfg.stft.hop},
            {"sample_rate", cfg.stft.sample_rate},
            {"config_hash", hash}};
  WriteFile(dir / "attention.json", side.dump(2) + "\n");
  out << Json{{"kind", "attn_map"}, {"path", (dir / "attention.sfct").string()},
              {"shape", ShapeJson(map.shape())}, {"config_hash", hash}}
             .dump()
      << "\n";
}

void CostReportCmd(const Globals& g, double seconds, std::ostream& out) {
  const auto r = cost::Report(ResolveConfig(g), seconds);
  out << r.ToText();
  if (!g.out_dir.empty()) WriteFile(fs::path(g.out_dir) / "cost.txt", r.ToText());
}

void CostSweep(const Globals& g, const std::string& codecs, const std::string& ks,
               double seconds, std::ostream& out) {
  const auto cfg = ResolveConfig(g);
  std::vector<int> counts;
  for (const auto& k : Split(ks)) counts.push_back(std::stoi(k));
  const std::string csv = cost::SweepCsv(cfg.preset, Split(codecs), counts, seconds);
  out << csv;
  if (!g.out_dir.empty()) WriteFile(fs::path(g.out_dir) / "cost_sweep.csv", csv);
}

int ErrorRecord(std::ostream& err, const std::string& type, const std::string& message,
                int code) {
  err << Json{{"error", type}, {"message", message}, {"exit_code", code}}.dump() << "\n";
  return code;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral feature compression toolkit", "sfc"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Run config JSON file");
  app.add_option("--out-dir", g.out_dir, "Directory for output artifacts");
  app.add_option("--preset", g.preset, "small | medium | tiny");
  app.add_option("--codec", g.codec, "bs | sfc_ca | sfc_mamba");
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--set", g.sets, "Config override key.path=value (repeatable)");

  // bands
  auto* bands_cmd = app.add_subcommand("bands", "Band definitions");
  bands_cmd->require_subcommand(1);
  std::string kind = "uniform", convention = "zero_based_half_open", out_path, format = "csv";
  std::string band_file;
  std::int64_t num_bins = 1025, num_bands = 64;
  int sample_rate = 44100;
  auto* gen = bands_cmd->add_subcommand("gen", "Generate a band file");
  gen->add_option("--kind", kind, "uniform | full | log12tet | musical");
  gen->add_option("--F", num_bins, "Frequency bins");
  gen->add_option("--K", num_bands, "Bands");
  gen->add_option("--sample-rate", sample_rate);
  gen->add_option("--convention", convention);
  gen->add_option("--out", out_path, "Output file");
  auto* validate = bands_cmd->add_subcommand("validate", "Validate a band file");
  validate->add_option("file", band_file)->required();
  auto* exp = bands_cmd->add_subcommand("export", "Convert a band file");
  exp->add_option("file", band_file)->required();
  exp->add_option("--format", format, "csv | json");
  exp->add_option("--convention", convention);
  exp->add_option("--out", out_path, "Output file");

  // model
  auto* model_cmd = app.add_subcommand("model", "Model lifecycle");
  model_cmd->require_subcommand(1);
  std::string checkpoint;
  double seconds = 1.0;
  auto* init = model_cmd->add_subcommand("init", "Initialize and save a checkpoint");
  auto* inspect = model_cmd->add_subcommand("inspect", "Parameter table and cost report");
  inspect->add_option("--checkpoint", checkpoint);
  inspect->add_option("--seconds", seconds, "Input duration for FLOP counts");

  std::string input;
  auto* roundtrip = app.add_subcommand("roundtrip", "Autoencode a WAV with an identity separator");
  roundtrip->add_option("--input", input)->required();

  int steps = -1, eval_every = 0;
  bool verbose = false;
  auto* train_cmd = app.add_subcommand("train", "Toy training loop");
  train_cmd->add_option("--steps", steps);
  train_cmd->add_option("--eval-every", eval_every);
  train_cmd->add_flag("--verbose", verbose);

  std::vector<std::string> refs, ests;
  auto* eval = app.add_subcommand("eval", "Metrics of estimates against references");
  eval->add_option("--reference", refs)->required();
  eval->add_option("--estimate", ests)->required();

  auto* attn = app.add_subcommand("attn-map", "Export an encoder attention spectrogram");
  attn->add_option("--input", input)->required();
  attn->add_option("--checkpoint", checkpoint);

  auto* cost_cmd = app.add_subcommand("cost", "Parameter and FLOP accounting");
  cost_cmd->require_subcommand(1);
  std::string codecs = "bs,sfc_ca,sfc_mamba", ks = "32,48,64";
  auto* report = cost_cmd->add_subcommand("report", "Cost of the resolved config");
  report->add_option("--seconds", seconds);
  auto* sweep = cost_cmd->add_subcommand("sweep", "CSV over codecs and band counts");
  sweep->add_option("--codecs", codecs);
  sweep->add_option("--K", ks);
  sweep->add_option("--seconds", seconds);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    g.seed_set = seed_opt->count() > 0;
    if (*gen) {
      BandsGen(g, kind, num_bins, num_bands, sample_rate, convention, out_path, out);
    } else if (*validate) {
      BandsValidate(band_file, out);
    } else if (*exp) {
      BandsExport(g, band_file, format, convention, out_path, out);
    } else if (*init) {
      ModelInit(g, out);
    } else if (*inspect) {
      ModelInspect(g, checkpoint, seconds, out);
    } else if (*roundtrip) {
      Roundtrip(g, input, out);
    } else if (*train_cmd) {
      Train(g, steps, eval_every, verbose, out);
    } else if (*eval) {
      Eval(g, refs, ests, out);
    } else if (*attn) {
      AttnMap(g, input, checkpoint, out);
    } else if (*report) {
      CostReportCmd(g, seconds, out);
    } else if (*sweep) {
      CostSweep(g, codecs, ks, seconds, out);
    }
    return kOk;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return ErrorRecord(err, "UsageError", e.what(), kUsage);
  } catch (const ConfigError& e) {
    return ErrorRecord(err, "ConfigError", e.what(), kConfig);
  } catch (const FormatError& e) {
    return ErrorRecord(err, "FormatError", e.what(), kFormat);
  } catch (const ValidationError& e) {
    return ErrorRecord(err, "ValidationError", e.what(), kValidation);
  } catch (const LengthError& e) {
    return ErrorRecord(err, "LengthError", e.what(), kValidation);
  } catch (const ShapeError& e) {
    return ErrorRecord(err, "ShapeError", e.what(), kValidation);
  } catch (const NumericFault& e) {
    return ErrorRecord(err, "NumericFault", e.what(), kNumeric);
  } catch (const std::exception& e) {
    return ErrorRecord(err, "InternalError", e.what(), kInternal);
  }
}

}  // namespace sfc::cli
