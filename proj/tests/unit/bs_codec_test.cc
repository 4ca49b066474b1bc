// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "sfc/codec/bs_codec.h"
#include "sfc/core/grad_check.h"
#include "test_util.h"

namespace sfc::codec {
namespace {

using sfc::testing::RandomTensor;

struct Fixture {
  ParameterSet params;
  Rng rng{3};
  InitContext ctx{&params, &rng, DType::kF64};
};

// Gives every parameter a random value so zero-initialized biases do not
// hide wiring errors.
void Randomize(ParameterSet& params, Rng& rng) {
  for (auto& p : params.all())
    for (auto& v : p.tensor.mutable_data()) v = rng.Uniform(-0.5, 0.5);
}

TEST(BsCodecTest, Shapes) {
  Fixture fx;
  BsConfig cfg{1, 2, 8, 1};
  BsCodec codec(fx.ctx, "bs", bands::GenUniform(16, 4), cfg);
  Tensor x = RandomTensor({2, 16, 3}, fx.rng);
  auto enc = codec.Encode(x);
  EXPECT_EQ(enc.z.shape(), (Shape{8, 4, 3}));
  EXPECT_EQ(codec.Decode(enc.z, enc).shape(), (Shape{2, 2, 16, 3}));
  EXPECT_THROW(codec.Encode(RandomTensor({2, 15, 3}, fx.rng)), ShapeError);
  EXPECT_THROW(codec.Decode(RandomTensor({8, 5, 3}, fx.rng), enc), ShapeError);
}

TEST(BsCodecTest, SmallConfigShapes) {
  Fixture fx;
  fx.ctx.dtype = DType::kF32;
  BsConfig cfg{2, 4, 96, 1};
  BsCodec codec(fx.ctx, "bs", bands::GenMusical(1025, 64, 44100, 2048), cfg);
  Tensor x = RandomTensor({4, 1025, 2}, fx.rng).To(DType::kF32);
  auto enc = codec.Encode(x);
  EXPECT_EQ(enc.z.shape(), (Shape{96, 64, 2}));
  EXPECT_EQ(codec.Decode(enc.z, enc).shape(), (Shape{4, 4, 1025, 2}));
}

TEST(BsCodecTest, ZeroInputZeroOutput) {
  Fixture fx;
  BsCodec codec(fx.ctx, "bs", bands::GenUniform(12, 3), {1, 1, 4, 1});
  auto enc = codec.Encode(Tensor::Zeros({2, 12, 2}));
  for (double v : enc.z.data()) EXPECT_EQ(v, 0.0);
}

TEST(BsCodecTest, EncoderBandLocality) {
  Fixture fx;
  auto bands = bands::GenMusical(33, 5, 8000, 64);
  BsCodec codec(fx.ctx, "bs", bands, {1, 1, 6, 1});
  Randomize(fx.params, fx.rng);
  Tensor x = RandomTensor({2, 33, 3}, fx.rng);
  Tensor z = codec.Encode(x).z;
  for (std::int64_t k = 0; k < bands.num_bands(); ++k) {
    Tensor xk = x.Clone();
    auto d = xk.mutable_data();
    for (std::int64_t c = 0; c < 2; ++c)
      for (std::int64_t f = 0; f < 33; ++f)
        for (std::int64_t t = 0; t < 3; ++t)
          if (!bands.bands[k].Contains(f)) d[(c * 33 + f) * 3 + t] = 0.0;
    Tensor zk = codec.Encode(xk).z;
    for (std::int64_t c = 0; c < 6; ++c)
      for (std::int64_t t = 0; t < 3; ++t) EXPECT_EQ(zk.at({c, k, t}), z.at({c, k, t}));
  }
}

TEST(BsCodecTest, DecoderWriteLocality) {
  Fixture fx;
  auto bands = bands::GenMusical(33, 5, 8000, 64);
  BsCodec codec(fx.ctx, "bs", bands, {1, 2, 6, 1});
  Randomize(fx.params, fx.rng);
  Tensor z = RandomTensor({6, 5, 2}, fx.rng);
  Tensor m = codec.Decode(z, {});
  for (std::int64_t k = 0; k < 5; ++k) {
    Tensor zk = z.Clone();
    for (std::int64_t c = 0; c < 6; ++c)
      for (std::int64_t t = 0; t < 2; ++t) zk.mutable_data()[(c * 5 + k) * 2 + t] += 1.0;
    Tensor mk = codec.Decode(zk, {});
    for (std::int64_t n = 0; n < 2; ++n)
      for (std::int64_t r = 0; r < 2; ++r)
        for (std::int64_t f = 0; f < 33; ++f)
          for (std::int64_t t = 0; t < 2; ++t) {
            if (!bands.bands[k].Contains(f)) {
              EXPECT_EQ(mk.at({n, r, f, t}), m.at({n, r, f, t}));
            }
          }
  }
}

TEST(BsCodecTest, PartitionWritesEachBinOnce) {
  Fixture fx;
  auto bands = bands::GenUniform(12, 3);
  BsCodec codec(fx.ctx, "bs", bands, {1, 1, 4, 1});
  Randomize(fx.params, fx.rng);
  Tensor z = RandomTensor({4, 3, 1}, fx.rng);
  Tensor m = codec.Decode(z, {});
  // Rebuild band 1 on its own: only its own sub-decoder contributes.
  Tensor z1 = z.Clone();
  for (auto& v : z1.mutable_data()) v = 0;
  for (std::int64_t c = 0; c < 4; ++c) z1.mutable_data()[c * 3 + 1] = z.at({c, 1, 0});
  Tensor m1 = codec.Decode(z1, {});
  for (std::int64_t f = 4; f < 8; ++f) EXPECT_EQ(m1.at({0, 0, f, 0}), m.at({0, 0, f, 0}));
}

TEST(BsCodecTest, FullSplitAveragesConstantMasks) {
  Fixture fx;
  BsCodec codec(fx.ctx, "bs", bands::GenFull(8, 2), {1, 1, 4, 1});
  // Zero the output weights; set biases so GLU yields a (k=0) and b (k=1).
  const double a = 0.7, b = -0.3;
  auto set_out = [&](int k, double value) {
    Tensor w = *fx.params.Find(fmt::format("bs.dec.band{}.out.weight", k));
    Tensor bias = *fx.params.Find(fmt::format("bs.dec.band{}.out.bias", k));
    for (auto& v : w.mutable_data()) v = 0.0;
    auto bd = bias.mutable_data();
    const std::size_t half = bd.size() / 2;
    for (std::size_t i = 0; i < half; ++i) {
      bd[i] = 2.0 * value;  // value part
      bd[half + i] = 0.0;   // gate: sigmoid(0) = 1/2
    }
  };
  set_out(0, a);
  set_out(1, b);
  Tensor m = codec.Decode(RandomTensor({4, 2, 3}, fx.rng), {});
  for (double v : m.data()) EXPECT_NEAR(v, (a + b) / 2, 1e-15);
}

TEST(BsCodecTest, ParamCountHandExample) {
  Fixture fx;
  BsConfig cfg{1, 1, 8, 1};
  BsCodec codec(fx.ctx, "bs", bands::GenFull(16, 1), cfg);
  EXPECT_EQ(fx.params.CountWithPrefix("bs.enc."), 296);
  EXPECT_EQ(fx.params.CountWithPrefix("bs.enc.band0.linear"), 264);
  EXPECT_EQ(fx.params.CountWithPrefix("bs.enc.band0.norm"), 32);
  EXPECT_EQ(BsEncoderParamFormula(codec.bands(), cfg), 296);
  EXPECT_EQ(fx.params.CountWithPrefix("bs.dec."), BsDecoderParamFormula(codec.bands(), cfg));
  for (const auto& p : fx.params.all()) {
    EXPECT_EQ(p.name.find("pos_bias"), std::string::npos);
  }
}

TEST(BsCodecTest, FormulaMatchesIntrospectionOnRandomConfigs) {
  for (int seed = 0; seed < 10; ++seed) {
    Fixture fx;
    Rng r(seed);
    BsConfig cfg{1 + seed % 2, 1 + seed % 3, 4 + seed, 1 + seed % 2};
    auto bands = seed % 2 ? bands::GenMusical(33, 4 + seed % 3, 8000, 64)
                          : bands::GenUniform(20, 2 + seed % 5);
    BsCodec codec(fx.ctx, "bs", bands, cfg);
    EXPECT_EQ(fx.params.CountWithPrefix("bs.enc."), BsEncoderParamFormula(bands, cfg));
    EXPECT_EQ(fx.params.CountWithPrefix("bs.dec."), BsDecoderParamFormula(bands, cfg));
  }
}

TEST(BsCodecTest, SmallCountsWithStandInBands) {
  BsConfig cfg{2, 4, 96, 1};
  auto bands = bands::GenMusical(1025, 64, 44100, 2048);
  double enc = static_cast<double>(BsEncoderParamFormula(bands, cfg));
  double dec = static_cast<double>(BsDecoderParamFormula(bands, cfg));
  EXPECT_NEAR(enc / 0.8e6, 1.0, 0.15) << enc;
  EXPECT_NEAR(dec / 28.8e6, 1.0, 0.15) << dec;
}

TEST(BsCodecTest, GradCheckTinyCodec) {
  Fixture fx;
  BsCodec codec(fx.ctx, "bs", bands::GenMusical(17, 4, 8000, 32), {1, 1, 4, 1});
  Randomize(fx.params, fx.rng);
  Tensor x = RandomTensor({2, 17, 2}, fx.rng);
  Tensor w = RandomTensor({1, 2, 17, 2}, fx.rng);
  auto f = [&] {
    auto enc = codec.Encode(x);
    return ops::Sum(ops::Mul(codec.Decode(ops::Tanh(enc.z), enc), w));
  };
  auto report = GradCheck(f, fx.params.all());
  EXPECT_TRUE(report.pass) << report.Summary();
}

}  // namespace
}  // namespace sfc::codec
