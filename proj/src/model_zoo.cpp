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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mixconv/accounting.hpp"

namespace mixconv {

namespace {

// Block stacks, one string per stage, decoded by decode_stage():
//   r<repeats> k<k1.k2...> a<..> p<..> s<ss> e<expansion> i<in> o<out>
//   se<ratio> sw dwsep
// a/p list one entry per 1x1 conv group ("a1.1" is two groups). The first
// repeat carries the stride; "sw" selects swish, otherwise relu; "dwsep"
// marks a MobileNetV1 depthwise-separable layer.

// MobileNetV1, 224x224 input, 32-channel stride-2 stem, no head conv.
constexpr std::string_view kMobileNetV1[] = {
    "r1_k3_s11_i32_o64_dwsep",      // 112x112
    "r1_k3_s22_i64_o128_dwsep",     // 56x56
    "r1_k3_s11_i128_o128_dwsep",
    "r1_k3_s22_i128_o256_dwsep",    // 28x28
    "r1_k3_s11_i256_o256_dwsep",
    "r1_k3_s22_i256_o512_dwsep",    // 14x14
    "r5_k3_s11_i512_o512_dwsep",
    "r1_k3_s22_i512_o1024_dwsep",   // 7x7
    "r1_k3_s11_i1024_o1024_dwsep",
};

// MobileNetV2 bottlenecks (t, c, n, s), 32-channel stem, 1280-channel head.
constexpr std::string_view kMobileNetV2[] = {
    "r1_k3_s11_e1_i32_o16",    // 112x112
    "r2_k3_s22_e6_i16_o24",    // 56x56
    "r3_k3_s22_e6_i24_o32",    // 28x28
    "r4_k3_s22_e6_i32_o64",    // 14x14
    "r3_k3_s11_e6_i64_o96",
    "r3_k3_s22_e6_i96_o160",   // 7x7
    "r1_k3_s11_e6_i160_o320",
};

// MixNet-S: kernel groups and tensor shapes per stage of the published
// architecture figure; expansion, 1x1 grouping and SE ratios follow the
// reference model definition released with it. 16-channel stem,
// 1536-channel head.
constexpr std::string_view kMixNetS[] = {
    "r1_k3_a1_p1_s11_e1_i16_o16",                    // 112x112x16
    "r1_k3_a1.1_p1.1_s22_e6_i16_o24",                // 56x56x24
    "r1_k3_a1.1_p1.1_s11_e3_i24_o24",
    "r1_k3.5.7_a1_p1_s22_e6_i24_o40_se0.5_sw",       // 28x28x40
    "r3_k3.5_a1.1_p1.1_s11_e6_i40_o40_se0.5_sw",
    "r1_k3.5.7_a1_p1.1_s22_e6_i40_o80_se0.25_sw",    // 14x14x80
    "r2_k3.5_a1_p1.1_s11_e6_i80_o80_se0.25_sw",
    "r1_k3.5.7_a1.1_p1.1_s11_e6_i80_o120_se0.5_sw",  // 14x14x120
    "r2_k3.5.7.9_a1.1_p1.1_s11_e3_i120_o120_se0.5_sw",
    "r1_k3.5.7.9.11_a1_p1_s22_e6_i120_o200_se0.5_sw",  // 7x7x200
    "r2_k3.5.7.9_a1_p1.1_s11_e6_i200_o200_se0.5_sw",
};

// MixNet-M: as above, 24-channel stem, 1536-channel head.
constexpr std::string_view kMixNetM[] = {
    "r1_k3_a1_p1_s11_e1_i24_o24",                    // 112x112x24
    "r1_k3.5.7_a1.1_p1.1_s22_e6_i24_o32",            // 56x56x32
    "r1_k3_a1.1_p1.1_s11_e3_i32_o32",
    "r1_k3.5.7.9_a1_p1_s22_e6_i32_o40_se0.5_sw",     // 28x28x40
    "r3_k3.5_a1.1_p1.1_s11_e6_i40_o40_se0.5_sw",
    "r1_k3.5.7_a1_p1_s22_e6_i40_o80_se0.25_sw",      // 14x14x80
    "r3_k3.5.7.9_a1.1_p1.1_s11_e6_i80_o80_se0.25_sw",
    "r1_k3_a1_p1_s11_e6_i80_o120_se0.5_sw",          // 14x14x120
    "r3_k3.5.7.9_a1.1_p1.1_s11_e3_i120_o120_se0.5_sw",
    "r1_k3.5.7.9_a1_p1_s22_e6_i120_o200_se0.5_sw",   // 7x7x200
    "r3_k3.5.7.9_a1_p1.1_s11_e6_i200_o200_se0.5_sw",
};

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::int64_t to_int(const std::string& s, std::string_view stage) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + s + "' in stage '" + std::string(stage) + "'");
  }
}

struct Stage {
  std::int64_t repeats = 1;
  std::int64_t in = 0;
  BlockConfig block;
};

Stage decode_stage(std::string_view text) {
  Stage st;
  for (const std::string& tok : split(text, '_')) {
    if (tok == "sw") {
      st.block.activation = Activation::kSwish;
    } else if (tok == "dwsep") {
      st.block.type = BlockType::kSeparable;
    } else if (tok.rfind("se", 0) == 0) {
      st.block.se_ratio = std::stod(tok.substr(2));
    } else if (tok.size() > 1) {
      const std::string v = tok.substr(1);
      switch (tok[0]) {
        case 'r':
          st.repeats = to_int(v, text);
          break;
        case 'k':
          st.block.kernels.clear();
          for (const auto& k : split(v, '.')) st.block.kernels.push_back(to_int(k, text));
          break;
        case 'a':
          st.block.expand_groups = static_cast<std::int64_t>(split(v, '.').size());
          break;
        case 'p':
          st.block.project_groups = static_cast<std::int64_t>(split(v, '.').size());
          break;
        case 's':
          st.block.stride = to_int(v.substr(0, 1), text);
          break;
        case 'e':
          st.block.expansion = to_int(v, text);
          break;
        case 'i':
          st.in = to_int(v, text);
          break;
        case 'o':
          st.block.channels_out = to_int(v, text);
          break;
        default:
          throw ConfigError("unknown token '" + tok + "' in stage '" +
                            std::string(text) + "'");
      }
    } else {
      throw ConfigError("bad token '" + tok + "'");
    }
  }
  return st;
}

template <std::size_t N>
std::vector<BlockConfig> decode_stack(const std::string_view (&stages)[N],
                                      std::int64_t stem_channels) {
  std::vector<BlockConfig> blocks;
  std::int64_t channels = stem_channels;
  for (std::string_view text : stages) {
    const Stage st = decode_stage(text);
    if (st.in != channels) {
      throw ConfigError("stage '" + std::string(text) + "' expects " +
                        std::to_string(st.in) + " input channels, has " +
                        std::to_string(channels));
    }
    for (std::int64_t r = 0; r < st.repeats; ++r) {
      BlockConfig b = st.block;
      if (r > 0) b.stride = 1;
      blocks.push_back(b);
    }
    channels = st.block.channels_out;
  }
  return blocks;
}

}  // namespace

// ---------------------------------------------------------------------------

MixConvSpec block_mix_spec(const BlockConfig& block, std::int64_t channels) {
  MixConvSpec spec;
  spec.kernels = block.kernels;
  spec.dilations = block.dilations;
  spec.stride = block.stride;
  spec.multiplier = 1;
  try {
    spec.channels =
        block.partition.apply(channels, static_cast<std::int64_t>(block.kernels.size()));
  } catch (const PartitionError& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

InvertedResidualSpec block_ir_spec(const BlockConfig& block,
                                   std::int64_t in_channels) {
  InvertedResidualSpec spec;
  spec.in_channels = in_channels;
  spec.out_channels = block.channels_out;
  spec.expansion = block.expansion;
  spec.mix = block_mix_spec(block, in_channels * block.expansion);
  if (block.se_ratio) spec.se = SqueezeExciteSpec{*block.se_ratio, block.activation};
  spec.activation = block.activation;
  spec.expand_groups = block.expand_groups;
  spec.project_groups = block.project_groups;
  spec.residual = spec.residual_allowed();
  return spec;
}

std::vector<std::int64_t> block_input_channels(const ModelConfig& config) {
  std::vector<std::int64_t> in;
  std::int64_t c = config.stem.channels;
  for (const auto& b : config.blocks) {
    in.push_back(c);
    c = b.channels_out;
  }
  return in;
}

Shape4 validate_config(const ModelConfig& config, std::int64_t resolution) {
  const CostReport report = count_model(config, resolution);
  return report.rows.back().out;
}

// ---------------------------------------------------------------------------

void KernelChoice::validate() const {
  if (kernels.empty()) throw ConfigError("kernel override is empty");
  std::int64_t prev = 0;
  for (auto k : kernels) {
    if (k < 3 || k % 2 == 0 || k <= prev) {
      throw ConfigError("kernel override must be odd, >= 3 and increasing");
    }
    prev = k;
  }
}

void apply_kernel_choice(BlockConfig& block, const KernelChoice& choice) {
  choice.validate();
  block.partition = choice.partition;
  block.dilations.clear();
  block.kernels = choice.kernels;
  if (choice.dilated && block.stride == 1) {
    for (auto k : choice.kernels) block.dilations.push_back((k - 1) / 2);
    std::fill(block.kernels.begin(), block.kernels.end(), 3);
  }
}

ModelConfig build_mobilenet_v1(const KernelChoice& choice) {
  ModelConfig config;
  config.name = "mobilenet-v1";
  config.stem = StemConfig{32, 3, 2, Activation::kRelu};
  config.blocks = decode_stack(kMobileNetV1, 32);
  config.head = HeadConfig{0, Activation::kRelu, 1000};
  for (auto& b : config.blocks) apply_kernel_choice(b, choice);
  return config;
}

ModelConfig build_mobilenet_v2(const KernelChoice& choice) {
  ModelConfig config;
  config.name = "mobilenet-v2";
  config.stem = StemConfig{32, 3, 2, Activation::kRelu};
  config.blocks = decode_stack(kMobileNetV2, 32);
  config.head = HeadConfig{1280, Activation::kRelu, 1000};
  for (auto& b : config.blocks) apply_kernel_choice(b, choice);
  return config;
}

ModelConfig build_mixnet(MixNetVariant variant) {
  ModelConfig config;
  switch (variant) {
    case MixNetVariant::kS:
      config.name = "mixnet-s";
      config.stem = StemConfig{16, 3, 2, Activation::kRelu};
      config.blocks = decode_stack(kMixNetS, 16);
      break;
    case MixNetVariant::kM:
    case MixNetVariant::kL:
      config.name = "mixnet-m";
      config.stem = StemConfig{24, 3, 2, Activation::kRelu};
      config.blocks = decode_stack(kMixNetM, 24);
      break;
  }
  config.head = HeadConfig{1536, Activation::kRelu, 1000};
  if (variant == MixNetVariant::kL) {
    config = apply_width_multiplier(config, 1.3);
    config.name = "mixnet-l";
  }
  return config;
}

std::vector<std::string> model_names() {
  return {"mobilenet-v1", "mobilenet-v2", "mixnet-s", "mixnet-m", "mixnet-l"};
}

ModelConfig build_model(std::string_view name) {
  if (name == "mobilenet-v1") return build_mobilenet_v1();
  if (name == "mobilenet-v2") return build_mobilenet_v2();
  if (name == "mixnet-s") return build_mixnet(MixNetVariant::kS);
  if (name == "mixnet-m") return build_mixnet(MixNetVariant::kM);
  if (name == "mixnet-l") return build_mixnet(MixNetVariant::kL);
  throw LookupError("unknown model '" + std::string(name) + "'");
}

ModelConfig substitute_block(const ModelConfig& config, std::size_t index,
                             const KernelChoice& choice) {
  if (index >= config.blocks.size()) {
    throw ConfigError("block index " + std::to_string(index) + " out of range (" +
                      std::to_string(config.blocks.size()) + " blocks)");
  }
  ModelConfig out = config;
  apply_kernel_choice(out.blocks[index], choice);
  return out;
}

std::vector<std::size_t> mobilenet_v2_ablation_layers() {
  std::vector<std::size_t> layers;
  for (std::size_t i = 1; i <= 15; ++i) layers.push_back(i);
  return layers;
}

std::int64_t round_channels(std::int64_t channels, double factor) {
  if (factor == 1.0) return channels;
  constexpr std::int64_t kDivisor = 8;
  const double target = static_cast<double>(channels) * factor;
  std::int64_t rounded = std::max<std::int64_t>(
      kDivisor,
      static_cast<std::int64_t>(target + kDivisor / 2.0) / kDivisor * kDivisor);
  if (static_cast<double>(rounded) < 0.9 * target) rounded += kDivisor;
  return rounded;
}

ModelConfig apply_width_multiplier(const ModelConfig& config, double factor) {
  if (!(factor > 0.0)) throw ConfigError("width multiplier must be positive");
  ModelConfig out = config;
  out.width_multiplier = config.width_multiplier * factor;
  out.stem.channels = round_channels(config.stem.channels, factor);
  for (auto& b : out.blocks) b.channels_out = round_channels(b.channels_out, factor);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string block_type_name(BlockType t) {
  return t == BlockType::kSeparable ? "dwsep" : "ir";
}

BlockType parse_block_type(const std::string& s) {
  if (s == "ir") return BlockType::kInvertedResidual;
  if (s == "dwsep") return BlockType::kSeparable;
  throw ConfigError("unknown block type '" + s + "'");
}

nlohmann::json partition_to_json(const PartitionScheme& p) {
  switch (p.kind) {
    case PartitionScheme::Kind::kEqual:
      return "equal";
    case PartitionScheme::Kind::kExponential:
      return "exponential";
    case PartitionScheme::Kind::kExplicit:
      break;
  }
  return p.counts;
}

PartitionScheme partition_from_json(const nlohmann::json& j) {
  if (j.is_array()) return PartitionScheme::explicit_counts(j.get<std::vector<std::int64_t>>());
  const auto s = j.get<std::string>();
  if (s == "equal") return PartitionScheme::equal();
  if (s == "exponential") return PartitionScheme::exponential();
  throw ConfigError("unknown partition '" + s + "'");
}

template <typename T>
T require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

nlohmann::json config_to_json(const ModelConfig& config) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : config.blocks) {
    nlohmann::json jb;
    jb["type"] = block_type_name(b.type);
    jb["expansion"] = b.expansion;
    jb["kernels"] = b.kernels;
    if (!b.dilations.empty()) jb["dilations"] = b.dilations;
    jb["partition"] = partition_to_json(b.partition);
    jb["channels_out"] = b.channels_out;
    jb["stride"] = b.stride;
    jb["se_ratio"] = b.se_ratio ? nlohmann::json(*b.se_ratio) : nlohmann::json(nullptr);
    jb["activation"] = to_string(b.activation);
    jb["pw_groups"] = {b.expand_groups, b.project_groups};
    blocks.push_back(std::move(jb));
  }
  nlohmann::json j;
  j["name"] = config.name;
  j["width_multiplier"] = config.width_multiplier;
  j["in_channels"] = config.in_channels;
  j["stem"] = {{"channels", config.stem.channels},
               {"kernel", config.stem.kernel},
               {"stride", config.stem.stride},
               {"activation", to_string(config.stem.activation)}};
  j["blocks"] = std::move(blocks);
  j["head"] = {{"channels", config.head.channels},
               {"activation", to_string(config.head.activation)},
               {"classes", config.head.classes}};
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.name = require<std::string>(j, "name");
    c.width_multiplier = j.value("width_multiplier", 1.0);
    c.in_channels = j.value("in_channels", std::int64_t{3});
    const auto& stem = j.at("stem");
    c.stem.channels = require<std::int64_t>(stem, "channels");
    c.stem.kernel = stem.value("kernel", std::int64_t{3});
    c.stem.stride = stem.value("stride", std::int64_t{2});
    c.stem.activation = parse_activation(stem.value("activation", std::string("relu")));
    for (const auto& jb : j.at("blocks")) {
      BlockConfig b;
      b.type = parse_block_type(jb.value("type", std::string("ir")));
      b.expansion = jb.value("expansion", std::int64_t{1});
      b.kernels = require<std::vector<std::int64_t>>(jb, "kernels");
      if (jb.contains("dilations")) {
        b.dilations = jb.at("dilations").get<std::vector<std::int64_t>>();
      }
      if (jb.contains("partition")) b.partition = partition_from_json(jb.at("partition"));
      b.channels_out = require<std::int64_t>(jb, "channels_out");
      b.stride = jb.value("stride", std::int64_t{1});
      if (jb.contains("se_ratio") && !jb.at("se_ratio").is_null()) {
        b.se_ratio = jb.at("se_ratio").get<double>();
      }
      b.activation = parse_activation(jb.value("activation", std::string("relu")));
      if (jb.contains("pw_groups")) {
        const auto& g = jb.at("pw_groups");
        if (g.is_array()) {
          if (g.size() != 2) throw ConfigError("pw_groups must list [expand, project]");
          b.expand_groups = g.at(0).get<std::int64_t>();
          b.project_groups = g.at(1).get<std::int64_t>();
        } else {
          b.expand_groups = b.project_groups = g.get<std::int64_t>();
        }
      }
      c.blocks.push_back(std::move(b));
    }
    const auto& head = j.at("head");
    c.head.channels = head.value("channels", std::int64_t{0});
    c.head.activation = parse_activation(head.value("activation", std::string("relu")));
    c.head.classes = head.value("classes", std::int64_t{1000});
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
}

std::string serialize_config(const ModelConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

ModelConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("model config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace mixconv
