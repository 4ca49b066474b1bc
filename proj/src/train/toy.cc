// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/train/toy.h"

#include <chrono>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "sfc/core/error.h"
#include "sfc/core/ops.h"
#include "sfc/core/tape.h"
#include "sfc/train/loss.h"
#include "sfc/train/optim.h"

namespace sfc::train {

namespace {

void NormalizeRms(std::vector<double>& x, double rms) {
  double e = 0.0;
  for (double v : x) e += v * v;
  const double cur = std::sqrt(e / static_cast<double>(x.size()));
  if (cur > 0.0)
    for (double& v : x) v *= rms / cur;
}

std::vector<double> Row(const Tensor& t, std::int64_t offset, std::int64_t len) {
  auto d = t.data();
  return {d.begin() + offset, d.begin() + offset + len};
}

// Names the first parameter holding a non-finite value, if any.
std::string NonFiniteParameter(const std::vector<Parameter>& params) {
  for (const auto& p : params)
    for (double v : p.tensor.data())
      if (!std::isfinite(v)) return fmt::format(" (parameter '{}' is non-finite)", p.name);
  return "";
}

}  // namespace

ToyMix ToyMixer::Draw(Rng& rng) const {
  const auto& c = config_;
  const std::int64_t len = c.length;
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<std::vector<double>> base(2, std::vector<double>(len, 0.0));
  const double phase = rng.Uniform(0.0, two_pi);
  for (std::int64_t i = 0; i < len; ++i)
    base[0][i] = std::sin(two_pi * c.tone_hz * static_cast<double>(i) / c.sample_rate + phase);
  for (int p = 0; p < c.noise_partials; ++p) {
    const double f = rng.Uniform(c.noise_lo_hz, c.noise_hi_hz);
    const double ph = rng.Uniform(0.0, two_pi);
    for (std::int64_t i = 0; i < len; ++i)
      base[1][i] += std::sin(two_pi * f * static_cast<double>(i) / c.sample_rate + ph);
  }
  ToyMix mix;
  mix.sources = Tensor::Zeros({c.sources, c.channels, len});
  mix.mixture = Tensor::Zeros({c.channels, len});
  mix.active.assign(c.sources, false);
  auto src = mix.sources.mutable_data();
  auto mixd = mix.mixture.mutable_data();
  for (int n = 0; n < std::min(2, c.sources); ++n) {
    NormalizeRms(base[n], c.rms);
    const double gain = std::pow(10.0, rng.Uniform(-c.gain_db, c.gain_db) / 20.0);
    const bool active = !rng.Bernoulli(c.drop_prob);
    mix.active[n] = active;
    if (!active) continue;
    for (int m = 0; m < c.channels; ++m) {
      for (std::int64_t i = 0; i < len; ++i) {
        const double v = gain * base[n][i];
        src[(n * c.channels + m) * len + i] = v;
        mixd[m * len + i] += v;
      }
    }
  }
  return mix;
}

ToyMixConfig ToyMixFromConfig(const model::RunConfig& config) {
  ToyMixConfig c;
  c.sample_rate = config.stft.sample_rate;
  c.length = static_cast<std::int64_t>(std::llround(config.train.segment_seconds * c.sample_rate));
  c.channels = config.model.channels;
  c.sources = config.model.sources;
  c.gain_db = config.train.gain_db;
  c.drop_prob = config.train.drop_prob;
  const double nyquist = 0.5 * c.sample_rate;
  c.noise_hi_hz = std::min(c.noise_hi_hz, 0.99 * nyquist);
  c.noise_lo_hz = std::min(c.noise_lo_hz, 0.5 * c.noise_hi_hz);
  return c;
}

std::string History::ToJsonLines() const {
  std::string out;
  for (const auto& s : steps) {
    nlohmann::ordered_json j;
    j["step"] = s.step;
    j["loss"] = s.loss;
    j["grad_norm"] = s.grad_norm;
    j["lr"] = s.lr;
    out += j.dump() + "\n";
  }
  for (const auto& e : evals) {
    nlohmann::ordered_json j;
    j["eval_step"] = e.step;
    j["sisdr_improvement"] = e.sisdr_improvement;
    j["usdr"] = e.metrics.usdr;
    j["csdr"] = std::isnan(e.metrics.csdr) ? nlohmann::ordered_json(nullptr)
                                           : nlohmann::ordered_json(e.metrics.csdr);
    j["sisdr"] = e.metrics.sisdr;
    out += j.dump() + "\n";
  }
  return out;
}

Tensor MixtureLoss(const Tensor& sources, const Tensor& estimates, const Tensor& mixture,
                   const model::LossSection& loss) {
  const LossConfig cfg{loss.tau, loss.alpha};
  Tensor total;
  for (std::int64_t n = 0; n < sources.dim(0); ++n) {
    Tensor ref = ops::Slice(sources, 0, n, n + 1);
    Tensor est = ops::Slice(estimates, 0, n, n + 1);
    Tensor l = SnrLoss(ref, est, mixture, cfg);
    total = n == 0 ? l : ops::Add(total, l);
  }
  return total;
}

EvalRecord Evaluate(const model::Model& model, const std::vector<ToyMix>& mixes) {
  EvalRecord rec;
  std::vector<TrackMetrics> tracks;
  double improvement = 0.0;
  int count = 0;
  const int sr = model.config().stft.sample_rate;
  for (const auto& mix : mixes) {
    const auto out = model.Forward(mix.mixture);
    const std::int64_t m = mix.mixture.dim(0), len = mix.mixture.dim(1);
    for (std::int64_t n = 0; n < mix.sources.dim(0); ++n) {
      if (!mix.active[n]) continue;
      std::vector<std::vector<double>> ref, est, raw;
      for (std::int64_t c = 0; c < m; ++c) {
        ref.push_back(Row(mix.sources, (n * m + c) * len, len));
        est.push_back(Row(out.waveform, (n * m + c) * len, len));
        raw.push_back(Row(mix.mixture, c * len, len));
      }
      auto t = EvaluateTrack(ref, est, sr);
      const auto base = EvaluateTrack(ref, raw, sr);
      improvement += t.sisdr - base.sisdr;
      ++count;
      tracks.push_back(t);
    }
  }
  rec.sisdr_improvement = count ? improvement / count : 0.0;
  rec.metrics = AggregateTracks(tracks);
  return rec;
}

History TrainToy(model::Model& model, const TrainOptions& options) {
  const auto& cfg = model.config();
  const int steps = options.steps >= 0 ? options.steps : cfg.train.steps;
  const ToyMixer mixer(ToyMixFromConfig(cfg));
  Rng root(cfg.seed);
  Rng data = root.Fork("train-data");
  Rng eval_rng = root.Fork("eval-data");
  ToyMixConfig eval_cfg = mixer.config();
  eval_cfg.drop_prob = 0.0;
  const ToyMixer eval_mixer(eval_cfg);
  std::vector<ToyMix> eval_set;
  for (int i = 0; i < cfg.train.eval_mixtures; ++i) eval_set.push_back(eval_mixer.Draw(eval_rng));

  auto params = model.params().all();
  AdamW opt(params, {cfg.train.lr, 0.9, 0.999, 1e-8, cfg.train.weight_decay});
  History hist;
  const auto start = std::chrono::steady_clock::now();
  hist.evals.push_back(Evaluate(model, eval_set));
  hist.evals.back().step = 0;
  for (int step = 1; step <= steps; ++step) {
    const ToyMix mix = mixer.Draw(data);
    StepRecord rec;
    rec.step = step;
    try {
      GradTape tape;
      GradTape::Scope scope(tape);
      const auto out = model.Forward(mix.mixture);
      Tensor loss = MixtureLoss(mix.sources, out.waveform, mix.mixture, cfg.loss);
      model.params().ZeroGrad();
      tape.Backward(loss);
      rec.loss = loss.data()[0];
      rec.grad_norm = ClipGradNorm(params, cfg.train.clip);
    } catch (const NumericFault& e) {
      throw NumericFault(fmt::format("training step {}: {}{}", step, e.what(),
                                     NonFiniteParameter(params)));
    }
    rec.lr = WarmupLr(cfg.train.lr, step, cfg.train.warmup);
    opt.Step(rec.lr);
    hist.steps.push_back(rec);
    if (options.verbose && (step % 50 == 0 || step == 1))
      fmt::print("step {:4d} loss {:9.4f} grad_norm {:8.4f}\n", step, rec.loss, rec.grad_norm);
    if (options.eval_every > 0 && step % options.eval_every == 0 && step != steps) {
      hist.evals.push_back(Evaluate(model, eval_set));
      hist.evals.back().step = step;
    }
  }
  hist.evals.push_back(Evaluate(model, eval_set));
  hist.evals.back().step = steps;
  hist.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return hist;
}

}  // namespace sfc::train
