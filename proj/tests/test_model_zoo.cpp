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

#include "mixconv/model_zoo.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mixconv/accounting.hpp"
#include "mixconv/network.hpp"

namespace mixconv {
namespace {

bool same_report(const CostReport& a, const CostReport& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const CostRow& x = a.rows[i];
    const CostRow& y = b.rows[i];
    if (x.layer != y.layer || x.op != y.op || x.out != y.out || x.params != y.params ||
        x.madds != y.madds)
      return false;
  }
  return a.total_params == b.total_params && a.total_madds == b.total_madds;
}

TEST(ModelZoo, KnownNames) {
  const std::vector<std::string> names = model_names();
  for (const char* n : {"mobilenet-v1", "mobilenet-v2", "mixnet-s", "mixnet-m", "mixnet-l"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  }
  EXPECT_THROW(build_model("nosuch"), LookupError);
}

TEST(ModelZoo, EveryConfigPropagatesAtDeskAndFullScale) {
  for (const std::string& name : model_names()) {
    const ModelConfig c = build_model(name);
    for (std::int64_t res : {224, 32}) {
      EXPECT_NO_THROW(validate_config(c, res)) << name << " @" << res;
    }
    EXPECT_EQ(validate_config(c, 224), (Shape4{1, 1, 1, c.head.classes}));
  }
}

TEST(ModelZoo, JsonRoundTripPreservesCosts) {
  for (const std::string& name : model_names()) {
    const ModelConfig c = build_model(name);
    const std::string text = serialize_config(c);
    const ModelConfig back = parse_config(text);
    EXPECT_EQ(back, c) << name;
    EXPECT_EQ(serialize_config(back), text) << name;
    EXPECT_TRUE(same_report(count_model(back), count_model(c))) << name;
  }
  const ModelConfig dil = build_mobilenet_v2(KernelChoice::mix(4, PartitionScheme::exponential(), true));
  EXPECT_EQ(parse_config(serialize_config(dil)), dil);
}

TEST(ModelZoo, JsonSchemaFields) {
  const nlohmann::json j = config_to_json(build_model("mixnet-s"));
  for (const char* key : {"name", "width_multiplier", "stem", "blocks", "head"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const nlohmann::json& b = j.at("blocks").at(1);
  for (const char* key : {"type", "expansion", "kernels", "channels_out", "stride", "se_ratio",
                          "activation", "pw_groups"}) {
    EXPECT_TRUE(b.contains(key)) << key;
  }
}

TEST(ModelZoo, MalformedConfigsAreRejected) {
  nlohmann::json j = config_to_json(build_model("mobilenet-v2"));
  j["blocks"][0]["type"] = "transformer";
  EXPECT_THROW(config_from_json(j), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  nlohmann::json missing = config_to_json(build_model("mobilenet-v2"));
  missing.erase("blocks");
  EXPECT_THROW(config_from_json(missing), ConfigError);
  nlohmann::json even = config_to_json(build_model("mobilenet-v2"));
  even["blocks"][2]["kernels"] = {4};
  EXPECT_THROW(count_model(config_from_json(even)), ConfigError);
}

TEST(ModelZoo, KernelOverrideValidation) {
  EXPECT_THROW(build_mobilenet_v1(KernelChoice::depthwise(4)), ConfigError);
  EXPECT_THROW(build_mobilenet_v2(KernelChoice::depthwise(1)), ConfigError);
  EXPECT_THROW(build_mobilenet_v2(KernelChoice{{5, 3}, {}, false}), ConfigError);
  EXPECT_THROW(build_mobilenet_v2(KernelChoice{{}, {}, false}), ConfigError);
}

TEST(ModelZoo, OverrideMonotonicityAndDominance) {
  const std::int64_t k3 = count_model(build_mobilenet_v1(KernelChoice::depthwise(3))).total_params;
  const std::int64_t k13 = count_model(build_mobilenet_v1(KernelChoice::depthwise(13))).total_params;
  const std::int64_t mix6 = count_model(build_mobilenet_v1(KernelChoice::mix(6))).total_params;
  EXPECT_GT(k13, k3);
  EXPECT_LT(mix6, k13);
}

TEST(ModelZoo, AblationLayers) {
  const std::vector<std::size_t> layers = mobilenet_v2_ablation_layers();
  ASSERT_EQ(layers.size(), 15u);
  const ModelConfig v2 = build_mobilenet_v2();
  for (std::size_t i : layers) EXPECT_LT(i, v2.blocks.size());
}

TEST(ModelZoo, SubstitutionTouchesOnlyTargetBlock) {
  const ModelConfig v2 = build_mobilenet_v2();
  const CostReport base = count_model(v2);
  const KernelChoice mix3579{{3, 5, 7, 9}, {}, false};
  for (std::size_t i : mobilenet_v2_ablation_layers()) {
    for (const KernelChoice& choice : {KernelChoice::depthwise(9), mix3579}) {
      const ModelConfig sub = substitute_block(v2, i, choice);
      const CostReport r = count_model(sub);
      ASSERT_EQ(r.rows.size(), base.rows.size());
      const std::string target = "blocks." + std::to_string(i) + ".mixconv";
      for (std::size_t row = 0; row < r.rows.size(); ++row) {
        if (r.rows[row].layer == target) {
          EXPECT_GT(r.rows[row].params, base.rows[row].params);
        } else {
          EXPECT_EQ(r.rows[row].params, base.rows[row].params) << r.rows[row].layer;
          EXPECT_EQ(r.rows[row].madds, base.rows[row].madds) << r.rows[row].layer;
        }
      }
      for (std::size_t b = 0; b < v2.blocks.size(); ++b) {
        if (b != i) EXPECT_EQ(sub.blocks[b], v2.blocks[b]);
      }
    }
  }
  EXPECT_THROW(substitute_block(v2, v2.blocks.size(), KernelChoice::depthwise(5)), ConfigError);
}

TEST(ModelZoo, HalfCostAblation) {
  const CostReport mix = count_model(build_mobilenet_v2(KernelChoice{{3, 5, 7, 9}, {}, false}));
  const CostReport dw9 = count_model(build_mobilenet_v2(KernelChoice::depthwise(9)));
  const double params = static_cast<double>(mix.depthwise_params()) / static_cast<double>(dw9.depthwise_params());
  const double madds = static_cast<double>(mix.depthwise_madds()) / static_cast<double>(dw9.depthwise_madds());
  EXPECT_GE(params, 0.45);
  EXPECT_LE(params, 0.60);
  EXPECT_GE(madds, 0.45);
  EXPECT_LE(madds, 0.60);
}

TEST(ModelZoo, MixNetKernelSchedules) {
  for (MixNetVariant v : {MixNetVariant::kS, MixNetVariant::kM, MixNetVariant::kL}) {
    const ModelConfig c = build_mixnet(v);
    for (const BlockConfig& b : c.blocks) {
      const auto g = static_cast<std::int64_t>(b.kernels.size());
      EXPECT_GE(g, 1);
      EXPECT_LE(g, 5);
      EXPECT_EQ(b.kernels, default_kernels(g));
    }
  }
}

TEST(ModelZoo, MixNetLIsWidthScaledM) {
  const ModelConfig m = build_mixnet(MixNetVariant::kM);
  const ModelConfig l = build_mixnet(MixNetVariant::kL);
  ASSERT_EQ(l.blocks.size(), m.blocks.size());
  EXPECT_DOUBLE_EQ(l.width_multiplier, 1.3);
  EXPECT_EQ(l.stem.channels, round_channels(m.stem.channels, 1.3));
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    EXPECT_EQ(l.blocks[i].channels_out, round_channels(m.blocks[i].channels_out, 1.3));
    EXPECT_EQ(l.blocks[i].kernels, m.blocks[i].kernels);
  }
}

TEST(WidthMultiplier, Rounding) {
  EXPECT_EQ(round_channels(16, 1.3), 24);
  EXPECT_EQ(round_channels(3, 1.0), 3);
  EXPECT_EQ(round_channels(4, 0.5), 8);
  for (std::int64_t c = 8; c <= 1536; c += 8) {
    for (double f : {0.35, 0.5, 0.75, 1.3, 1.4, 2.0}) {
      const std::int64_t r = round_channels(c, f);
      EXPECT_EQ(r % 8, 0);
      EXPECT_GE(r, 8);
      EXPECT_GE(static_cast<double>(r), 0.9 * static_cast<double>(c) * f);
      EXPECT_LE(std::abs(static_cast<double>(r) - c * f), 8.0);
    }
  }
}

TEST(WidthMultiplier, IdentityAndDoubling) {
  const ModelConfig m = build_mixnet(MixNetVariant::kM);
  ModelConfig same = apply_width_multiplier(m, 1.0);
  EXPECT_EQ(same.blocks, m.blocks);
  EXPECT_EQ(same.stem, m.stem);
  const ModelConfig twice = apply_width_multiplier(m, 2.0);
  EXPECT_EQ(twice.stem.channels, 2 * m.stem.channels);
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    EXPECT_EQ(twice.blocks[i].channels_out, 2 * m.blocks[i].channels_out);
  }
  EXPECT_THROW(apply_width_multiplier(m, 0.0), ConfigError);
  EXPECT_THROW(apply_width_multiplier(m, -1.0), ConfigError);
}

TEST(ParamLayout, TotalMatchesAccounting) {
  for (const std::string& name : model_names()) {
    const ModelConfig c = build_model(name);
    std::int64_t total = 0;
    for (const ParamDecl& d : param_layout(c)) total += d.shape.elements();
    EXPECT_EQ(total, count_model(c).total_params) << name;
  }
}

}  // namespace
}  // namespace mixconv
