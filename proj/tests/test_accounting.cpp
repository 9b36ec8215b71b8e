// Copyright 2026 The mixconv Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mixconv/accounting.hpp"

#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mixconv/model_zoo.hpp"
#include "mixconv/oracle.hpp"

namespace mixconv {
namespace {

const Shape4 kIn56{1, 56, 56, 32};

TEST(CountLayer, Depthwise) {
  const LayerCost c = count_layer(DepthwiseOp{ConvGeom{3, 1, 1, Padding::kSame, 1}}, kIn56);
  EXPECT_EQ(c.params, 288);
  EXPECT_EQ(c.madds, 903168);
  EXPECT_EQ(c.out, (Shape4{1, 56, 56, 32}));
}

TEST(CountLayer, MixConvTwoGroups) {
  MixConvSpec s;
  s.kernels = {3, 5};
  s.channels = {16, 16};
  const LayerCost c = count_layer(MixConvOp{s}, kIn56);
  EXPECT_EQ(c.params, 544);
  EXPECT_EQ(c.madds, 1705984);
}

TEST(CountLayer, PointwiseDenseBatchNorm) {
  const LayerCost pw = count_layer(PointwiseOp{64, 4}, Shape4{1, 7, 7, 32});
  EXPECT_EQ(pw.params, 32 * 64 / 4);
  EXPECT_EQ(pw.madds, 49 * 32 * 64 / 4);
  const LayerCost dense = count_layer(DenseOp{10}, Shape4{1, 1, 1, 20});
  EXPECT_EQ(dense.params, 210);
  EXPECT_EQ(dense.madds, 200);
  const LayerCost bn = count_layer(BatchNormOp{}, Shape4{1, 7, 7, 24});
  EXPECT_EQ(bn.params, 48);
  EXPECT_EQ(bn.running_params, 48);
  EXPECT_EQ(bn.madds, 0);
  const LayerCost act = count_layer(ActivationOp{}, Shape4{1, 7, 7, 24});
  EXPECT_EQ(act.params, 0);
  EXPECT_EQ(act.madds, 0);
  const LayerCost se = count_layer(SqueezeExciteOp{6}, Shape4{1, 7, 7, 24});
  EXPECT_EQ(se.params, 24 * 6 + 6 + 6 * 24 + 24);
  EXPECT_EQ(se.madds, 2 * 24 * 6);
  EXPECT_EQ(se.out, (Shape4{1, 7, 7, 24}));
  const LayerCost pool = count_layer(PoolOp{}, Shape4{1, 7, 7, 24});
  EXPECT_EQ(pool.out, (Shape4{1, 1, 1, 24}));
}

TEST(CountLayer, DilatedMatchesPlain) {
  const LayerCost plain = count_layer(DepthwiseOp{ConvGeom{3, 1, 1, Padding::kSame, 1}}, kIn56);
  for (std::int64_t d : {2, 3, 4, 6}) {
    const LayerCost dil = count_layer(DepthwiseOp{ConvGeom{3, 1, d, Padding::kSame, 1}}, kIn56);
    EXPECT_EQ(dil.params, plain.params);
    EXPECT_EQ(dil.madds, plain.madds);
  }
}

TEST(CountLayer, InvalidGeometryRejected) {
  EXPECT_THROW(count_layer(DepthwiseOp{ConvGeom{4, 1, 1, Padding::kSame, 1}}, kIn56), GeometryError);
  EXPECT_THROW(count_layer(DepthwiseOp{ConvGeom{3, 2, 2, Padding::kSame, 1}}, kIn56), GeometryError);
  EXPECT_THROW(count_layer(PointwiseOp{30, 4}, kIn56), ConfigError);
}

TEST(CountLayer, MatchesNaiveIterationsAndElementCounts) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    ConvGeom g;
    g.kernel = 2 * rng.uniform_int(1, 3) + 1;
    g.stride = rng.uniform_int(1, 2);
    g.dilation = g.stride == 1 ? rng.uniform_int(1, 2) : 1;
    g.padding = trial % 3 == 0 ? Padding::kValid : Padding::kSame;
    g.multiplier = rng.uniform_int(1, 2);
    const std::int64_t side = rng.uniform_int(g.effective_kernel(), 14);
    const Shape4 in{1, side, side, rng.uniform_int(1, 5)};
    const Tensor x = tensor_randn(in, rng);
    const Tensor w = tensor_randn({g.kernel, g.kernel, in.c, g.multiplier}, rng);
    const LayerCost cost = count_layer(DepthwiseOp{g}, in);
    EXPECT_EQ(cost.madds, oracle::naive_depthwise(x, w, g).iterations);
    EXPECT_EQ(cost.params, static_cast<std::int64_t>(w.size()));

    const std::int64_t groups = rng.uniform_int(1, 3);
    const Shape4 pin{1, side, side, groups * rng.uniform_int(1, 3)};
    const std::int64_t out_c = groups * rng.uniform_int(1, 3);
    const Tensor pw = tensor_randn({1, 1, pin.c / groups, out_c}, rng);
    const LayerCost pcost = count_layer(PointwiseOp{out_c, groups}, pin);
    EXPECT_EQ(pcost.madds, oracle::naive_pointwise(tensor_randn(pin, rng), pw, groups).iterations);
    EXPECT_EQ(pcost.params, static_cast<std::int64_t>(pw.size()));
  }
}

TEST(CountModel, TotalsEqualColumnSums) {
  for (const std::string& name : model_names()) {
    const CostReport r = count_model(build_model(name));
    std::int64_t params = 0, madds = 0;
    for (const CostRow& row : r.rows) {
      EXPECT_GE(row.params, 0);
      EXPECT_GE(row.madds, 0);
      params += row.params;
      madds += row.madds;
    }
    EXPECT_EQ(params, r.total_params) << name;
    EXPECT_EQ(madds, r.total_madds) << name;
  }
}

TEST(CountModel, CsvLayout) {
  const CostReport r = count_model(build_model("mobilenet-v2"));
  const std::string csv = cost_report_csv(r);
  std::istringstream in(csv);
  std::string line, last;
  std::getline(in, line);
  EXPECT_EQ(line, "layer,op,out_h,out_w,out_c,params,madds");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  std::size_t lines = 1;
  while (std::getline(in, line)) {
    last = line;
    ++lines;
  }
  EXPECT_EQ(lines, r.rows.size() + 2);
  EXPECT_EQ(last, "total,,,,," + std::to_string(r.total_params) + "," +
                      std::to_string(r.total_madds));
  EXPECT_EQ(cost_report_json(r).size(), r.rows.size() + 1);
}

TEST(CountModel, StemRowComesFirst) {
  const CostReport r = count_model(build_model("mobilenet-v1"));
  ASSERT_FALSE(r.rows.empty());
  EXPECT_EQ(r.rows.front().layer, "stem.conv");
  EXPECT_EQ(r.rows.front().params, 3 * 3 * 3 * 32);
  EXPECT_EQ(r.rows.front().out, (Shape4{1, 112, 112, 32}));
  EXPECT_EQ(r.rows.back().layer, "head.dense");
  EXPECT_EQ(r.rows.back().params, 1024 * 1000 + 1000);
}

TEST(CountModel, ResolutionErrors) {
  EXPECT_THROW(count_model(build_model("mixnet-s"), 0), ConfigError);
  ModelConfig bad = build_model("mobilenet-v2");
  bad.blocks[3].project_groups = 7;
  EXPECT_THROW(count_model(bad), ConfigError);
}

class KernelSweep : public ::testing::TestWithParam<const char*> {
 protected:
  ModelConfig build(const KernelChoice& c) const {
    return std::string(GetParam()) == "v1" ? build_mobilenet_v1(c) : build_mobilenet_v2(c);
  }
};

TEST_P(KernelSweep, DepthwiseTotalsIncreaseWithKernel) {
  CostReport prev = count_model(build(KernelChoice::depthwise(3)));
  for (std::int64_t k = 5; k <= 13; k += 2) {
    const CostReport cur = count_model(build(KernelChoice::depthwise(k)));
    EXPECT_GT(cur.total_params, prev.total_params) << k;
    EXPECT_GT(cur.total_madds, prev.total_madds) << k;
    prev = cur;
  }
}

TEST_P(KernelSweep, MixConvBelowLargestDepthwise) {
  for (std::int64_t g = 2; g <= 6; ++g) {
    const CostReport mix = count_model(build(KernelChoice::mix(g)));
    const CostReport dw = count_model(build(KernelChoice::depthwise(2 * g + 1)));
    EXPECT_LT(mix.total_params, dw.total_params) << g;
    EXPECT_LT(mix.total_madds, dw.total_madds) << g;
  }
}

TEST_P(KernelSweep, ExponentialNotAboveEqual) {
  for (std::int64_t g = 1; g <= 6; ++g) {
    const CostReport eq = count_model(build(KernelChoice::mix(g)));
    const CostReport ex = count_model(build(KernelChoice::mix(g, PartitionScheme::exponential())));
    EXPECT_LE(ex.total_params, eq.total_params) << g;
    EXPECT_LE(ex.total_madds, eq.total_madds) << g;
  }
}

TEST_P(KernelSweep, DilatedMixMatchesThreeByThreeAtStrideOne) {
  const ModelConfig base_cfg = build(KernelChoice::depthwise(3));
  const CostReport base = count_model(base_cfg);
  for (std::int64_t g = 2; g <= 6; ++g) {
    const CostReport dil = count_model(build(KernelChoice::mix(g, PartitionScheme::equal(), true)));
    const CostReport mix = count_model(build(KernelChoice::mix(g)));
    ASSERT_EQ(dil.rows.size(), base.rows.size());
    for (std::size_t b = 0; b < base_cfg.blocks.size(); ++b) {
      if (base_cfg.blocks[b].stride != 1) continue;
      const std::string name = "blocks." + std::to_string(b) + ".mixconv";
      for (std::size_t i = 0; i < base.rows.size(); ++i) {
        if (base.rows[i].layer != name) continue;
        EXPECT_EQ(dil.rows[i].params, base.rows[i].params) << name;
        EXPECT_EQ(dil.rows[i].madds, base.rows[i].madds) << name;
      }
    }
    EXPECT_LE(dil.total_params, mix.total_params) << g;
    EXPECT_LE(dil.total_madds, mix.total_madds) << g;
  }
}

INSTANTIATE_TEST_SUITE_P(MobileNets, KernelSweep, ::testing::Values("v1", "v2"));

}  // namespace
}  // namespace mixconv
