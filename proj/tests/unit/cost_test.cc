// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include <gtest/gtest.h>

#include "sfc/cost/cost.h"
#include "sfc/model/model.h"

namespace sfc::cost {
namespace {

TEST(FlopCounterTest, ClosedForms) {
  FlopCounter c;
  c.MatMul(2, 3, 4);
  EXPECT_DOUBLE_EQ(c.total, 48);
  c = {};
  c.Conv(9, 2, 5, 10);
  EXPECT_DOUBLE_EQ(c.total, 2.0 * 9 * 2 * 5 * 10);
  c = {};
  c.Attention(1, 1, 3, 7, 4);
  EXPECT_DOUBLE_EQ(c.total, 2 * (2.0 * 3 * 7 * 4) + 3.0 * 3 * 7);
  c = {};
  c.Scan(2, 5, 3, 4);
  EXPECT_DOUBLE_EQ(c.total, 7.0 * 2 * 5 * 3 * 4);
}

TEST(CostReportTest, ParamsMatchLiveModelExactly) {
  for (const std::string preset : {"tiny", "small"}) {
    for (const std::string codec : {"bs", "sfc_ca", "sfc_mamba"}) {
      const auto cfg = model::Preset(preset, codec);
      const model::Model m(cfg);
      const auto r = Report(cfg);
      EXPECT_EQ(r.TotalParams(), m.params().Count()) << preset << " " << codec;
      double sum = 0;
      for (const auto& c : r.components) {
        EXPECT_GT(c.flops, 0.0);
        sum += c.flops;
      }
      EXPECT_DOUBLE_EQ(sum, r.TotalFlops());
    }
  }
}

TEST(CostReportTest, StructuralCountsSmall) {
  const auto cfg = model::Preset("small", "sfc_ca");
  const model::Model m(cfg);
  EXPECT_EQ(m.params().Find("codec.enc.ca.pos_bias")->numel(), 262400);
  EXPECT_EQ(m.params().Find("codec.dec.ca.pos_bias")->numel(), 262400);
  const auto bs = Report(model::Preset("small", "bs"));
  EXPECT_NEAR(bs.Get("encoder").params / 0.8e6, 1.0, 0.15);
  EXPECT_NEAR(bs.Get("decoder").params / 28.8e6, 1.0, 0.15);
}

TEST(CostReportTest, SfcFlopsExceedBandSplit) {
  const auto bs = Report(model::Preset("small", "bs"));
  const auto ca = Report(model::Preset("small", "sfc_ca"));
  EXPECT_GT(ca.FlopsPerSecond(), bs.FlopsPerSecond());
  EXPECT_EQ(ca.Get("separator").flops, bs.Get("separator").flops);
}

TEST(CostReportTest, SeparatorFlopsIncreaseWithBands) {
  for (const std::string codec : {"bs", "sfc_ca", "sfc_mamba"}) {
    double prev = 0;
    for (int k : {32, 48, 64}) {
      auto cfg = model::Preset("small", codec);
      cfg.bands.num_bands = k;
      const double f = Report(cfg).Get("separator").flops;
      EXPECT_GT(f, prev) << codec << " K=" << k;
      prev = f;
    }
  }
}

TEST(CostReportTest, BandWidthDependence) {
  // Overlapping musical bands cover more bins in total than a partition.
  auto musical = model::Preset("small", "bs");
  auto uniform = musical;
  uniform.bands.kind = "uniform";
  EXPECT_GT(Report(musical).Get("encoder").params, Report(uniform).Get("encoder").params);
  EXPECT_GT(Report(musical).Get("decoder").params, Report(uniform).Get("decoder").params);
  auto ca_musical = model::Preset("small", "sfc_ca");
  auto ca_uniform = ca_musical;
  ca_uniform.bands.kind = "uniform";
  EXPECT_EQ(Report(ca_musical).TotalParams(), Report(ca_uniform).TotalParams());
}

TEST(CostReportTest, SweepCsvDeterministic) {
  const auto a = SweepCsv("tiny", {"bs", "sfc_ca"}, {4, 8});
  EXPECT_EQ(a, SweepCsv("tiny", {"bs", "sfc_ca"}, {4, 8}));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 5);
  EXPECT_EQ(a.rfind("codec,K,", 0), 0u);
  const auto r = Report(model::Preset("tiny", "sfc_ca"));
  EXPECT_NE(r.ToText().find("total params"), std::string::npos);
  EXPECT_EQ(r.ToText(), Report(model::Preset("tiny", "sfc_ca")).ToText());
}

}  // namespace
}  // namespace sfc::cost
