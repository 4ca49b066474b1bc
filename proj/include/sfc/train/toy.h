// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfc/core/rng.h"
#include "sfc/core/tensor.h"
#include "sfc/model/model.h"
#include "sfc/train/metrics.h"

namespace sfc::train {

// Two disjoint-band sources: a 300 Hz tone and band-limited noise built
// from random sinusoids in [4000, 7900] Hz.
struct ToyMixConfig {
  int sample_rate = 16000;
  std::int64_t length = 8000;
  int channels = 1;
  int sources = 2;  // sources beyond the first two are silent
  double gain_db = 10.0;
  double drop_prob = 0.1;
  double tone_hz = 300.0;
  double noise_lo_hz = 4000.0;
  double noise_hi_hz = 7900.0;
  int noise_partials = 48;
  double rms = 0.25;
};

struct ToyMix {
  Tensor sources;  // (N, M, L)
  Tensor mixture;  // (M, L)
  std::vector<bool> active;
};

class ToyMixer {
 public:
  explicit ToyMixer(const ToyMixConfig& config) : config_(config) {}
  // Per draw: random phases and partials, gain uniform in +-gain_db, and
  // each source independently zeroed with probability drop_prob.
  ToyMix Draw(Rng& rng) const;
  const ToyMixConfig& config() const { return config_; }

 private:
  ToyMixConfig config_;
};

ToyMixConfig ToyMixFromConfig(const model::RunConfig& config);

struct StepRecord {
  int step = 0;
  double loss = 0;
  double grad_norm = 0;
  double lr = 0;
};

struct EvalRecord {
  int step = 0;
  double sisdr_improvement = 0;  // mean over sources and mixtures, dB
  Aggregate metrics;
};

struct History {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  double seconds = 0;
  // One JSON object per line: steps first, then evaluations.
  std::string ToJsonLines() const;
};

// Sum over sources of the thresholded SNR loss for one example.
Tensor MixtureLoss(const Tensor& sources, const Tensor& estimates, const Tensor& mixture,
                   const model::LossSection& loss);

// Mean SI-SDR of the separated sources minus that of the unprocessed
// mixture, over `mixes`; silent sources are skipped.
EvalRecord Evaluate(const model::Model& model, const std::vector<ToyMix>& mixes);

struct TrainOptions {
  int steps = -1;           // overrides config.train.steps when >= 0
  int eval_every = 0;       // 0: evaluate only before and after training
  bool verbose = false;
};

// Trains `model` in place on toy mixtures drawn from config.seed. Throws
// NumericFault naming the step (and parameter) on a non-finite value.
History TrainToy(model::Model& model, const TrainOptions& options = {});

}  // namespace sfc::train
