// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/dsp/stft.h"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <numbers>

#include <fmt/format.h>

#include "sfc/core/tape.h"

namespace sfc::dsp {
namespace {

// Real FFT of fixed size with owned buffers and cached plans.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    real_ = fftw_alloc_real(n);
    spec_ = fftw_alloc_complex(n / 2 + 1);
    forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* real() { return real_; }
  fftw_complex* spec() { return spec_; }
  void Forward() { fftw_execute(forward_); }
  // Unnormalized: result is n times the true inverse.
  void Inverse() { fftw_execute(inverse_); }

 private:
  int n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

RealFft& FftFor(int n) {
  static thread_local std::map<int, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

void CheckConfig(int n_fft, int hop) {
  if (!IsPowerOfTwo(n_fft)) throw ConfigError(fmt::format("stft: n_fft {} is not a power of two", n_fft));
  if (hop <= 0 || n_fft % hop != 0 || hop > n_fft / 2) {
    throw ConfigError(fmt::format("stft: hop {} must divide n_fft {} and be <= n_fft/2", hop, n_fft));
  }
}

// Reflect index into [0, len) (no edge repeat), valid for |overshoot| < len.
std::int64_t Reflect(std::int64_t i, std::int64_t len) {
  if (i < 0) return -i;
  if (i >= len) return 2 * (len - 1) - i;
  return i;
}

// Per-sample synthesis normalizer over the trimmed output: sum of squared
// window over every frame covering the sample.
std::vector<double> Envelope(const std::vector<double>& window, std::int64_t frames, int hop,
                             std::int64_t length) {
  const int n_fft = static_cast<int>(window.size());
  const std::int64_t pad = n_fft / 2;
  std::vector<double> env(static_cast<std::size_t>(length), 0.0);
  for (std::int64_t t = 0; t < frames; ++t) {
    for (int n = 0; n < n_fft; ++n) {
      std::int64_t p = t * hop + n - pad;
      if (p >= 0 && p < length) env[p] += window[n] * window[n];
    }
  }
  return env;
}

constexpr double kEnvelopeFloor = 1e-10;

}  // namespace

void Waveform::Validate() const {
  if (sample_rate <= 0) throw ValidationError("waveform: sample rate must be positive");
  for (const auto& c : channels) {
    if (c.size() != channels[0].size()) throw ValidationError("waveform: ragged channels");
  }
}

Tensor Waveform::ToTensor() const {
  Validate();
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(num_channels() * length()));
  for (const auto& c : channels) v.insert(v.end(), c.begin(), c.end());
  return Tensor({num_channels(), length()}, std::move(v));
}

Waveform Waveform::FromTensor(const Tensor& t, int sample_rate) {
  if (t.rank() != 2) throw ShapeError("waveform: expected (M, L), got " + ShapeToString(t.shape()));
  Waveform w;
  w.sample_rate = sample_rate;
  auto d = t.data();
  for (std::int64_t m = 0; m < t.dim(0); ++m) {
    w.channels.emplace_back(d.begin() + m * t.dim(1), d.begin() + (m + 1) * t.dim(1));
  }
  return w;
}

std::int64_t NumFrames(std::int64_t length, int hop) { return 1 + length / hop; }

std::vector<double> SqrtHannWindow(int n_fft) {
  std::vector<double> w(n_fft);
  for (int n = 0; n < n_fft; ++n) {
    w[n] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / n_fft));
  }
  return w;
}

std::vector<double> ColaSum(int n_fft, int hop) {
  auto w = SqrtHannWindow(n_fft);
  std::vector<double> sum(hop, 0.0);
  for (int n = 0; n < n_fft; ++n) sum[n % hop] += w[n] * w[n];
  return sum;
}

Spectrogram Stft(const Waveform& w, const StftConfig& config) {
  CheckConfig(config.n_fft, config.hop);
  w.Validate();
  const int n_fft = config.n_fft;
  const std::int64_t len = w.length();
  if (len <= n_fft) {
    throw LengthError(fmt::format("stft: signal of {} samples must be longer than n_fft {}", len, n_fft));
  }
  const std::int64_t bins = n_fft / 2 + 1;
  const std::int64_t frames = NumFrames(len, config.hop);
  const std::int64_t pad = n_fft / 2;
  const int m_count = w.num_channels();
  auto window = SqrtHannWindow(n_fft);
  auto& fft = FftFor(n_fft);

  Spectrogram s;
  s.n_fft = n_fft;
  s.hop = config.hop;
  s.values = Tensor({2 * m_count, bins, frames});
  auto out = s.values.mutable_data();
  for (int m = 0; m < m_count; ++m) {
    const auto& x = w.channels[m];
    double* re_base = out.data() + (2 * m) * bins * frames;
    double* im_base = out.data() + (2 * m + 1) * bins * frames;
    for (std::int64_t t = 0; t < frames; ++t) {
      for (int n = 0; n < n_fft; ++n) {
        fft.real()[n] = window[n] * x[Reflect(t * config.hop + n - pad, len)];
      }
      fft.Forward();
      for (std::int64_t k = 0; k < bins; ++k) {
        re_base[k * frames + t] = fft.spec()[k][0];
        im_base[k * frames + t] = fft.spec()[k][1];
      }
    }
  }
  FinalizeOutput(s.values, "stft");
  return s;
}

namespace {

// Shared forward kernel: pairs x (P, 2, F, T) -> y (P, length).
void IstftForward(std::span<const double> spec, std::int64_t pairs, std::int64_t bins,
                  std::int64_t frames, int n_fft, int hop, std::int64_t length,
                  std::span<double> out) {
  auto window = SqrtHannWindow(n_fft);
  auto env = Envelope(window, frames, hop, length);
  auto& fft = FftFor(n_fft);
  const std::int64_t pad = n_fft / 2;
  const double inv_n = 1.0 / n_fft;
  for (std::int64_t p = 0; p < pairs; ++p) {
    const double* re = spec.data() + (2 * p) * bins * frames;
    const double* im = spec.data() + (2 * p + 1) * bins * frames;
    double* y = out.data() + p * length;
    std::fill(y, y + length, 0.0);
    for (std::int64_t t = 0; t < frames; ++t) {
      for (std::int64_t k = 0; k < bins; ++k) {
        fft.spec()[k][0] = re[k * frames + t];
        fft.spec()[k][1] = im[k * frames + t];
      }
      // c2r ignores the imaginary parts at DC and Nyquist.
      fft.spec()[0][1] = 0.0;
      fft.spec()[bins - 1][1] = 0.0;
      fft.Inverse();
      for (int n = 0; n < n_fft; ++n) {
        std::int64_t i = t * hop + n - pad;
        if (i >= 0 && i < length) y[i] += window[n] * fft.real()[n] * inv_n;
      }
    }
    for (std::int64_t i = 0; i < length; ++i) y[i] = env[i] > kEnvelopeFloor ? y[i] / env[i] : 0.0;
  }
}

// Adjoint of IstftForward: gy (P, length) -> gspec (P, 2, F, T), accumulated.
void IstftAdjoint(std::span<const double> gy, std::int64_t pairs, std::int64_t bins,
                  std::int64_t frames, int n_fft, int hop, std::int64_t length,
                  std::span<double> gspec) {
  auto window = SqrtHannWindow(n_fft);
  auto env = Envelope(window, frames, hop, length);
  auto& fft = FftFor(n_fft);
  const std::int64_t pad = n_fft / 2;
  const double inv_n = 1.0 / n_fft;
  for (std::int64_t p = 0; p < pairs; ++p) {
    const double* g = gy.data() + p * length;
    double* gre = gspec.data() + (2 * p) * bins * frames;
    double* gim = gspec.data() + (2 * p + 1) * bins * frames;
    for (std::int64_t t = 0; t < frames; ++t) {
      for (int n = 0; n < n_fft; ++n) {
        std::int64_t i = t * hop + n - pad;
        fft.real()[n] = (i >= 0 && i < length && env[i] > kEnvelopeFloor)
                            ? window[n] * g[i] / env[i]
                            : 0.0;
      }
      fft.Forward();
      for (std::int64_t k = 0; k < bins; ++k) {
        // Bins other than DC and Nyquist appear twice in the Hermitian sum.
        double c = (k == 0 || k == bins - 1) ? inv_n : 2.0 * inv_n;
        gre[k * frames + t] += c * fft.spec()[k][0];
        if (k != 0 && k != bins - 1) gim[k * frames + t] += c * fft.spec()[k][1];
      }
    }
  }
}

}  // namespace

Waveform Istft(const Spectrogram& s, std::int64_t length, int sample_rate) {
  try {
    CheckConfig(s.n_fft, s.hop);
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  Tensor y = IstftTensor(s.values, s.n_fft, s.hop, length);
  return Waveform::FromTensor(y, sample_rate);
}

Tensor IstftTensor(const Tensor& spec, int n_fft, int hop, std::int64_t length) {
  if (spec.rank() < 3 || spec.dim(-3) % 2 != 0) {
    throw ShapeError("istft: expected (..., 2M, F, T), got " + ShapeToString(spec.shape()));
  }
  if (!IsPowerOfTwo(n_fft) || hop <= 0 || n_fft % hop != 0 || hop > n_fft / 2) {
    throw FormatError(fmt::format("istft: invalid n_fft {} / hop {}", n_fft, hop));
  }
  const std::int64_t bins = spec.dim(-2);
  const std::int64_t frames = spec.dim(-1);
  if (bins != n_fft / 2 + 1) {
    throw FormatError(fmt::format("istft: {} bins inconsistent with n_fft {}", bins, n_fft));
  }
  if (frames != NumFrames(length, hop)) {
    throw FormatError(fmt::format("istft: {} frames inconsistent with length {} at hop {}",
                                  frames, length, hop));
  }
  const std::int64_t pairs = spec.numel() / (2 * bins * frames);
  Shape out_shape(spec.shape().begin(), spec.shape().end() - 2);
  out_shape.back() /= 2;
  out_shape.push_back(length);
  Tensor out(out_shape, spec.dtype());
  IstftForward(spec.data(), pairs, bins, frames, n_fft, hop, length, out.mutable_data());
  FinalizeOutput(out, "istft");
  MaybeRecord("istft", {spec}, out,
              [=](const BackwardContext& ctx) {
                auto gs = ctx.input_grad(0);
                if (!gs.empty()) IstftAdjoint(ctx.out_grad(), pairs, bins, frames, n_fft, hop, length, gs);
              });
  return out;
}

Tensor ApplyMask(const Tensor& mixture, const Tensor& masks) {
  if (mixture.rank() != 3 || masks.rank() != 4 ||
      !std::equal(mixture.shape().begin(), mixture.shape().end(), masks.shape().begin() + 1) ||
      mixture.dim(0) % 2 != 0) {
    throw ShapeError(fmt::format("apply_mask: mixture {} incompatible with masks {}",
                                 ShapeToString(mixture.shape()), ShapeToString(masks.shape())));
  }
  const std::int64_t n_src = masks.dim(0);
  const std::int64_t pairs = mixture.dim(0) / 2;
  const std::int64_t plane = mixture.dim(1) * mixture.dim(2);
  Tensor out(masks.shape(), masks.dtype());
  auto x = mixture.data();
  auto m = masks.data();
  auto y = out.mutable_data();
  auto offsets = [=](std::int64_t s, std::int64_t p) {
    std::int64_t xr = 2 * p * plane;
    std::int64_t mr = (s * 2 * pairs + 2 * p) * plane;
    return std::array<std::int64_t, 2>{xr, mr};
  };
  for (std::int64_t s = 0; s < n_src; ++s) {
    for (std::int64_t p = 0; p < pairs; ++p) {
      auto [xr, mr] = offsets(s, p);
      for (std::int64_t i = 0; i < plane; ++i) {
        double a = x[xr + i], b = x[xr + plane + i];
        double c = m[mr + i], d = m[mr + plane + i];
        y[mr + i] = a * c - b * d;
        y[mr + plane + i] = a * d + b * c;
      }
    }
  }
  FinalizeOutput(out, "apply_mask");
  MaybeRecord("apply_mask", {mixture, masks}, out, [=](const BackwardContext& ctx) {
    auto g = ctx.out_grad();
    auto gx = ctx.input_grad(0);
    auto gm = ctx.input_grad(1);
    for (std::int64_t s = 0; s < n_src; ++s) {
      for (std::int64_t p = 0; p < pairs; ++p) {
        auto [xr, mr] = offsets(s, p);
        for (std::int64_t i = 0; i < plane; ++i) {
          double a = x[xr + i], b = x[xr + plane + i];
          double c = m[mr + i], d = m[mr + plane + i];
          double gr = g[mr + i], gi = g[mr + plane + i];
          if (!gx.empty()) {
            gx[xr + i] += gr * c + gi * d;
            gx[xr + plane + i] += -gr * d + gi * c;
          }
          if (!gm.empty()) {
            gm[mr + i] += gr * a + gi * b;
            gm[mr + plane + i] += -gr * b + gi * a;
          }
        }
      }
    }
  });
  return out;
}

}  // namespace sfc::dsp
