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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixconv/mixconv.hpp"
#include "mixconv/nn.hpp"

namespace mixconv {

enum class BlockType {
  kInvertedResidual,  // "ir": expand, MixConv, SE, project, skip
  kSeparable,         // "dwsep": MixConv, BN, act, 1x1, BN, act (MobileNetV1)
};

/// One layer of the block stack. Input channels come from the previous layer.
struct BlockConfig {
  BlockType type = BlockType::kInvertedResidual;
  std::int64_t expansion = 1;
  std::vector<std::int64_t> kernels{3};
  std::vector<std::int64_t> dilations;  // empty means undilated
  PartitionScheme partition;
  std::int64_t channels_out = 16;
  std::int64_t stride = 1;
  std::optional<double> se_ratio;  // of the block's input channels
  Activation activation = Activation::kRelu;
  std::int64_t expand_groups = 1;
  std::int64_t project_groups = 1;

  friend bool operator==(const BlockConfig&, const BlockConfig&) = default;
};

/// Dense k x k convolution, BN and activation.
struct StemConfig {
  std::int64_t channels = 32;
  std::int64_t kernel = 3;
  std::int64_t stride = 2;
  Activation activation = Activation::kRelu;

  friend bool operator==(const StemConfig&, const StemConfig&) = default;
};

/// Optional 1x1 conv + BN + activation (channels == 0 skips it), global
/// average pool, then a dense classifier with bias.
struct HeadConfig {
  std::int64_t channels = 0;
  Activation activation = Activation::kRelu;
  std::int64_t classes = 1000;

  friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

struct ModelConfig {
  std::string name;
  double width_multiplier = 1.0;
  std::int64_t in_channels = 3;
  StemConfig stem;
  std::vector<BlockConfig> blocks;
  HeadConfig head;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Channel partition for a block's MixConv over `channels` channels.
MixConvSpec block_mix_spec(const BlockConfig& block, std::int64_t channels);

/// Layer-level spec of an "ir" block fed with `in_channels` channels.
InvertedResidualSpec block_ir_spec(const BlockConfig& block,
                                   std::int64_t in_channels);

/// Input channel count of every block, in order.
std::vector<std::int64_t> block_input_channels(const ModelConfig& config);

/// Checks every block and propagates shapes from a square input of side
/// `resolution`; returns the logits shape for batch 1. Throws ConfigError.
Shape4 validate_config(const ModelConfig& config, std::int64_t resolution);

// ---------------------------------------------------------------------------
// Depthwise kernel overrides

/// Which depthwise kernel(s) a network uses. A single kernel is a vanilla
/// depthwise convolution; several kernels form a MixConv. With `dilated`,
/// stride-1 layers replace each k x k group by a 3 x 3 kernel with dilation
/// (k - 1) / 2; stride-2 layers keep the undilated kernels.
struct KernelChoice {
  std::vector<std::int64_t> kernels{3};
  PartitionScheme partition;
  bool dilated = false;

  static KernelChoice depthwise(std::int64_t k) { return {{k}, {}, false}; }
  /// Kernels {3, 5, ..., 2g+1}.
  static KernelChoice mix(std::int64_t g,
                          PartitionScheme scheme = PartitionScheme::equal(),
                          bool dilated = false) {
    return {default_kernels(g), std::move(scheme), dilated};
  }
  /// Throws ConfigError unless the kernels are odd, >= 3 and increasing.
  void validate() const;
};

/// Sets `block`'s kernels, partition and dilations from `choice`.
void apply_kernel_choice(BlockConfig& block, const KernelChoice& choice);

ModelConfig build_mobilenet_v1(const KernelChoice& choice = KernelChoice::depthwise(3));
ModelConfig build_mobilenet_v2(const KernelChoice& choice = KernelChoice::depthwise(3));

enum class MixNetVariant { kS, kM, kL };

ModelConfig build_mixnet(MixNetVariant variant);

/// Builds any zoo model by CLI name: mobilenet-v1, mobilenet-v2, mixnet-s,
/// mixnet-m, mixnet-l. Throws LookupError for other names.
ModelConfig build_model(std::string_view name);
std::vector<std::string> model_names();

/// Replaces the depthwise kernels of block `index` only.
ModelConfig substitute_block(const ModelConfig& config, std::size_t index,
                             const KernelChoice& choice);

/// The 15 MobileNetV2 blocks used for single-layer kernel ablations: every
/// bottleneck except the first (expansion 1) and the last (320 channels).
std::vector<std::size_t> mobilenet_v2_ablation_layers();

/// round(channels * factor) to the nearest multiple of 8, at least 8 and
/// never below 90% of the unrounded value. factor == 1 returns `channels`.
std::int64_t round_channels(std::int64_t channels, double factor);

/// Scales the stem and every block's output channels. The classifier head
/// keeps its width.
ModelConfig apply_width_multiplier(const ModelConfig& config, double factor);

// ---------------------------------------------------------------------------
// JSON schema:
//   {"name", "width_multiplier", "in_channels",
//    "stem": {"channels", "kernel", "stride", "activation"},
//    "blocks": [{"type": "ir"|"dwsep", "expansion", "kernels": [...],
//                "dilations": [...], "partition": "equal"|"exponential"|[...],
//                "channels_out", "stride", "se_ratio": number|null,
//                "activation", "pw_groups": [expand, project]}],
//    "head": {"channels", "activation", "classes"}}
// "dilations", "partition" and "in_channels" are optional on input;
// "pw_groups" also accepts a single integer for both.

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);
std::string serialize_config(const ModelConfig& config);
ModelConfig parse_config(std::string_view text);

}  // namespace mixconv
