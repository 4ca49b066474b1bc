// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "sfc/dsp/chunked.h"
#include "sfc/dsp/stft.h"
#include "sfc/dsp/wav.h"
#include "test_util.h"

namespace sfc::dsp {
namespace {

using sfc::testing::CheckOpGrad;
using sfc::testing::MaxAbsDiff;
using sfc::testing::RandomTensor;

Waveform Noise(int channels, std::int64_t len, std::uint64_t seed, int rate = 44100) {
  Rng rng(seed);
  Waveform w;
  w.sample_rate = rate;
  w.channels.assign(channels, std::vector<double>(len));
  for (auto& c : w.channels)
    for (auto& v : c) v = rng.Uniform(-1, 1);
  return w;
}

double MaxAbs(const Waveform& w) {
  double m = 0;
  for (const auto& c : w.channels)
    for (double v : c) m = std::max(m, std::abs(v));
  return m;
}

TEST(StftTest, DefaultBinCount) {
  auto s = Stft(Noise(1, 4096, 1));
  EXPECT_EQ(s.num_bins(), 1025);
  EXPECT_EQ(s.num_frames(), 1 + 4096 / 512);
}

TEST(StftTest, SilenceGivesZeros) {
  Waveform w;
  w.channels.assign(2, std::vector<double>(5000, 0.0));
  auto s = Stft(w);
  EXPECT_EQ(s.values.dim(0), 4);
  for (double v : s.values.data()) EXPECT_EQ(v, 0.0);
  auto y = Istft(s, 5000);
  EXPECT_EQ(MaxAbs(y), 0.0);
}

TEST(StftTest, TooShortIsLengthError) {
  EXPECT_THROW(Stft(Noise(1, 2048, 1)), LengthError);
}

TEST(StftTest, MatchesNaiveDft) {
  const int n_fft = 16, hop = 4;
  auto w = Noise(1, 40, 2);
  auto s = Stft(w, {n_fft, hop});
  auto window = SqrtHannWindow(n_fft);
  const auto& x = w.channels[0];
  const std::int64_t len = 40;
  for (std::int64_t t = 0; t < s.num_frames(); ++t) {
    for (int k = 0; k <= n_fft / 2; ++k) {
      std::complex<double> acc = 0;
      for (int n = 0; n < n_fft; ++n) {
        std::int64_t i = t * hop + n - n_fft / 2;
        if (i < 0) i = -i;
        if (i >= len) i = 2 * (len - 1) - i;
        acc += window[n] * x[i] * std::polar(1.0, -2 * std::numbers::pi * k * n / n_fft);
      }
      EXPECT_NEAR(s.values.at({0, k, t}), acc.real(), 1e-12);
      EXPECT_NEAR(s.values.at({1, k, t}), acc.imag(), 1e-12);
    }
  }
}

TEST(StftTest, ColaConstant) {
  auto sum = ColaSum(2048, 512);
  for (double v : sum) EXPECT_NEAR(v, sum[0], 1e-6);
  EXPECT_NEAR(sum[0], 2.0, 1e-12);
}

TEST(StftTest, RoundTripNoise) {
  auto w = Noise(2, 3 * 44100, 3);
  auto y = Istft(Stft(w), w.length());
  double err = 0;
  for (int m = 0; m < 2; ++m)
    for (std::int64_t i = 0; i < w.length(); ++i)
      err = std::max(err, std::abs(w.channels[m][i] - y.channels[m][i]));
  EXPECT_LT(err, 1e-6 * MaxAbs(w));
}

TEST(StftTest, ToneRoundTripSnr) {
  Waveform w;
  w.channels.assign(1, std::vector<double>(44100));
  for (int i = 0; i < 44100; ++i) w.channels[0][i] = std::sin(2 * std::numbers::pi * 441 * i / 44100.0);
  auto y = Istft(Stft(w), w.length());
  double sig = 0, err = 0;
  for (int i = 0; i < 44100; ++i) {
    sig += w.channels[0][i] * w.channels[0][i];
    double d = w.channels[0][i] - y.channels[0][i];
    err += d * d;
  }
  EXPECT_GT(10 * std::log10(sig / std::max(err, 1e-300)), 100.0);
}

TEST(StftTest, MismatchedMetadataIsFormatError) {
  auto s = Stft(Noise(1, 8192, 4));
  auto bad = s;
  bad.hop = 256;
  EXPECT_THROW(Istft(bad, 8192), FormatError);
  bad = s;
  bad.n_fft = 1024;
  EXPECT_THROW(Istft(bad, 8192), FormatError);
  bad = s;
  bad.hop = 300;
  EXPECT_THROW(Istft(bad, 8192), FormatError);
}

TEST(StftTest, IstftGradMatchesFiniteDifferences) {
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(50 + seed);
    Tensor spec = RandomTensor({2, 2, 9, 6}, rng);  // N=2, M=1, n_fft=16, hop=4, len=20
    auto report = CheckOpGrad(
        [](const std::vector<Tensor>& v) { return IstftTensor(v[0], 16, 4, 20); }, {spec}, rng);
    EXPECT_TRUE(report.pass) << report.Summary();
  }
}

TEST(MaskTest, IdentityZeroAndRotation) {
  Rng rng(5);
  Tensor x = RandomTensor({4, 3, 2}, rng);
  Tensor ones = Tensor::Zeros({1, 4, 3, 2});
  for (std::int64_t p = 0; p < 2; ++p)
    for (int i = 0; i < 6; ++i) ones.mutable_data()[2 * p * 6 + i] = 1.0;
  Tensor y = ApplyMask(x, ones);
  EXPECT_EQ(MaxAbsDiff(ops::Reshape(y, {4, 3, 2}), x), 0.0);
  Tensor zero = ApplyMask(x, Tensor::Zeros({2, 4, 3, 2}));
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);

  Tensor unit = Tensor::Zeros({2, 1, 1});
  unit.mutable_data()[0] = 1.0;
  Tensor rot = Tensor::Zeros({1, 2, 1, 1});
  rot.mutable_data()[1] = 1.0;
  Tensor r = ApplyMask(unit, rot);
  EXPECT_EQ(r.data()[0], 0.0);
  EXPECT_EQ(r.data()[1], 1.0);
}

TEST(MaskTest, LinearInMaskAndMixture) {
  Rng rng(6);
  Tensor x = RandomTensor({2, 3, 4}, rng);
  Tensor m1 = RandomTensor({2, 2, 3, 4}, rng);
  Tensor m2 = RandomTensor({2, 2, 3, 4}, rng);
  Tensor lhs = ApplyMask(x, ops::Add(ops::Scale(m1, 2.0), m2));
  Tensor rhs = ops::Add(ops::Scale(ApplyMask(x, m1), 2.0), ApplyMask(x, m2));
  EXPECT_LT(MaxAbsDiff(lhs, rhs), 1e-12);
  Tensor x2 = RandomTensor({2, 3, 4}, rng);
  lhs = ApplyMask(ops::Add(x, x2), m1);
  rhs = ops::Add(ApplyMask(x, m1), ApplyMask(x2, m1));
  EXPECT_LT(MaxAbsDiff(lhs, rhs), 1e-12);
}

TEST(MaskTest, ShapeMismatch) {
  EXPECT_THROW(ApplyMask(Tensor({2, 3, 4}), Tensor({1, 2, 3, 5})), ShapeError);
}

TEST(MaskTest, GradMatchesFiniteDifferences) {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(70 + seed);
    auto report = CheckOpGrad(
        [](const std::vector<Tensor>& v) { return ApplyMask(v[0], v[1]); },
        {RandomTensor({4, 2, 3}, rng), RandomTensor({2, 4, 2, 3}, rng)}, rng);
    EXPECT_TRUE(report.pass) << report.Summary();
  }
}

TEST(ChunkedTest, IdentityModel) {
  auto w = Noise(2, 10000, 7, 1000);
  auto id = [](const Waveform& c) { return std::vector<Waveform>{c}; };
  auto out = ChunkedSeparate(id, w, {2.0, 1.0});
  ASSERT_EQ(out.size(), 1u);
  ASSERT_EQ(out[0].length(), w.length());
  for (int m = 0; m < 2; ++m)
    for (std::int64_t i = 0; i < w.length(); ++i)
      EXPECT_NEAR(out[0].channels[m][i], w.channels[m][i], 1e-12);
}

TEST(ChunkedTest, ConstantGainMatchesSinglePass) {
  auto w = Noise(1, 9731, 8, 1000);
  auto half = [](const Waveform& c) {
    Waveform a = c, b = c;
    for (auto& v : a.channels[0]) v *= 0.5;
    for (auto& v : b.channels[0]) v *= -2.0;
    return std::vector<Waveform>{a, b};
  };
  auto whole = half(w);
  for (auto cfg : {ChunkConfig{2.0, 1.0}, ChunkConfig{3.0, 2.5}, ChunkConfig{12.0, 6.0}}) {
    auto out = ChunkedSeparate(half, w, cfg);
    ASSERT_EQ(out.size(), 2u);
    for (int n = 0; n < 2; ++n)
      for (std::int64_t i = 0; i < w.length(); ++i)
        ASSERT_NEAR(out[n].channels[0][i], whole[n].channels[0][i], 1e-12) << i;
  }
}

TEST(ChunkedTest, ShortTrackIsOneCall) {
  auto w = Noise(1, 500, 9, 1000);
  int calls = 0;
  auto id = [&](const Waveform& c) {
    ++calls;
    return std::vector<Waveform>{c};
  };
  auto out = ChunkedSeparate(id, w, {2.0, 1.0});
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(out[0].channels, w.channels);
}

TEST(ChunkedTest, ChunkMustExceedOverlap) {
  auto id = [](const Waveform& c) { return std::vector<Waveform>{c}; };
  EXPECT_THROW(ChunkedSeparate(id, Noise(1, 100, 1, 10), {1.0, 1.0}), ConfigError);
}

TEST(WavTest, RoundTripFloatAndPcm) {
  auto w = Noise(2, 1000, 10, 22050);
  auto dir = std::filesystem::temp_directory_path();
  auto f32 = (dir / "sfc_wav_f32.wav").string();
  auto i16 = (dir / "sfc_wav_i16.wav").string();
  WriteWav(f32, w, WavFormat::kFloat32);
  WriteWav(i16, w, WavFormat::kPcm16);
  auto a = ReadWav(f32);
  auto b = ReadWav(i16);
  EXPECT_EQ(a.sample_rate, 22050);
  ASSERT_EQ(a.num_channels(), 2);
  ASSERT_EQ(b.length(), 1000);
  for (int m = 0; m < 2; ++m)
    for (int i = 0; i < 1000; ++i) {
      EXPECT_EQ(a.channels[m][i], static_cast<double>(static_cast<float>(w.channels[m][i])));
      EXPECT_NEAR(b.channels[m][i], w.channels[m][i], 1.0 / 32767);
    }
  std::filesystem::remove(f32);
  std::filesystem::remove(i16);
  EXPECT_THROW(ReadWav(f32), FormatError);
}

}  // namespace
}  // namespace sfc::dsp
