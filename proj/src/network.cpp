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

#include "mixconv/network.hpp"

#include "mixconv/accounting.hpp"

namespace mixconv {

namespace {

class LayoutBuilder {
 public:
  void weight(const std::string& name, Shape4 shape, std::int64_t fan_in) {
    params.push_back({name, shape, ParamRole::kWeight, fan_in});
  }
  void bias(const std::string& name, std::int64_t c) {
    params.push_back({name, Shape4{1, 1, 1, c}, ParamRole::kBias, 1});
  }
  void bn(const std::string& name, std::int64_t c) {
    params.push_back({name + ".gamma", Shape4{1, 1, 1, c}, ParamRole::kGamma, 1});
    params.push_back({name + ".beta", Shape4{1, 1, 1, c}, ParamRole::kBeta, 1});
    bns.emplace_back(name, c);
  }
  void mixconv(const std::string& name, const MixConvSpec& spec) {
    for (std::int64_t t = 0; t < spec.groups(); ++t) {
      const auto i = static_cast<std::size_t>(t);
      const std::int64_t k = spec.kernels[i];
      weight(name + ".w" + std::to_string(t), Shape4{k, k, spec.channels[i], spec.multiplier},
             k * k);
    }
  }
  void pointwise(const std::string& name, std::int64_t c_in, std::int64_t c_out,
                 std::int64_t groups) {
    weight(name + ".w", Shape4{1, 1, c_in / groups, c_out}, c_in / groups);
  }

  std::vector<ParamDecl> params;
  std::vector<std::pair<std::string, std::int64_t>> bns;
};

LayoutBuilder build_layout(const ModelConfig& config) {
  // Shape checks (divisibility, partitions) happen in plan_model.
  plan_model(config, 32);
  LayoutBuilder b;
  const std::int64_t k = config.stem.kernel;
  b.weight("stem.conv.w", Shape4{k, k, config.in_channels, config.stem.channels},
           k * k * config.in_channels);
  b.bn("stem.bn", config.stem.channels);
  std::int64_t c = config.stem.channels;
  for (std::size_t i = 0; i < config.blocks.size(); ++i) {
    const BlockConfig& blk = config.blocks[i];
    const std::string name = "blocks." + std::to_string(i);
    if (blk.type == BlockType::kSeparable) {
      const MixConvSpec mix = block_mix_spec(blk, c);
      b.mixconv(name + ".mixconv", mix);
      b.bn(name + ".mixconv_bn", c);
      b.pointwise(name + ".project", c, blk.channels_out, blk.project_groups);
      b.bn(name + ".project_bn", blk.channels_out);
    } else {
      const InvertedResidualSpec spec = block_ir_spec(blk, c);
      const std::int64_t ex = spec.expanded_channels();
      if (spec.expansion != 1) {
        b.pointwise(name + ".expand", c, ex, spec.expand_groups);
        b.bn(name + ".expand_bn", ex);
      }
      b.mixconv(name + ".mixconv", spec.mix);
      b.bn(name + ".mixconv_bn", ex);
      if (spec.se) {
        const std::int64_t r = spec.se->reduced_channels(c);
        b.weight(name + ".se.reduce_w", Shape4{1, 1, ex, r}, ex);
        b.bias(name + ".se.reduce_b", r);
        b.weight(name + ".se.expand_w", Shape4{1, 1, r, ex}, r);
        b.bias(name + ".se.expand_b", ex);
      }
      b.pointwise(name + ".project", ex, blk.channels_out, spec.project_groups);
      b.bn(name + ".project_bn", blk.channels_out);
    }
    c = blk.channels_out;
  }
  if (config.head.channels > 0) {
    b.pointwise("head.conv", c, config.head.channels, 1);
    b.bn("head.bn", config.head.channels);
    c = config.head.channels;
  }
  b.weight("head.dense.w", Shape4{1, 1, c, config.head.classes}, c);
  b.bias("head.dense.b", config.head.classes);
  return b;
}

}  // namespace

std::vector<ParamDecl> param_layout(const ModelConfig& config) {
  return build_layout(config).params;
}

std::vector<std::pair<std::string, std::int64_t>> batchnorm_layout(
    const ModelConfig& config) {
  return build_layout(config).bns;
}

std::int64_t NetworkParams::trainable_count() const {
  std::int64_t total = 0;
  for (const auto& [name, t] : tensors) total += static_cast<std::int64_t>(t.size());
  return total;
}

namespace {

class Binder {
 public:
  Binder(Tape& tape, NetworkParams& params, std::map<std::string, Var>* vars)
      : tape_(tape), params_(params), vars_(vars) {}

  Var param(const std::string& name) {
    auto it = params_.tensors.find(name);
    if (it == params_.tensors.end()) {
      throw LookupError("missing parameter '" + name + "'");
    }
    const Var v = tape_.parameter(name, it->second);
    if (vars_) (*vars_)[name] = v;
    return v;
  }

  ad::BatchNormVars bn(const std::string& name) {
    auto it = params_.stats.find(name);
    if (it == params_.stats.end()) {
      throw LookupError("missing batch norm statistics '" + name + "'");
    }
    return ad::BatchNormVars{param(name + ".gamma"), param(name + ".beta"), &it->second};
  }

  std::vector<Var> mix_kernels(const std::string& name, std::int64_t groups) {
    std::vector<Var> ks;
    for (std::int64_t t = 0; t < groups; ++t) ks.push_back(param(name + ".w" + std::to_string(t)));
    return ks;
  }

 private:
  Tape& tape_;
  NetworkParams& params_;
  std::map<std::string, Var>* vars_;
};

}  // namespace

Var network_forward(Tape& tape, const ModelConfig& config, NetworkParams& params,
                    Var images, BatchNormMode mode,
                    std::map<std::string, Var>* vars) {
  Binder bind(tape, params, vars);
  const ConvGeom stem{config.stem.kernel, config.stem.stride, 1, Padding::kSame, 1};
  Var h = ad::conv2d(tape, images, bind.param("stem.conv.w"), stem);
  h = ad::batchnorm(tape, h, bind.bn("stem.bn"), mode);
  h = ad::activation(tape, h, config.stem.activation);

  std::int64_t c = config.stem.channels;
  for (std::size_t i = 0; i < config.blocks.size(); ++i) {
    const BlockConfig& blk = config.blocks[i];
    const std::string name = "blocks." + std::to_string(i);
    if (blk.type == BlockType::kSeparable) {
      const MixConvSpec mix = block_mix_spec(blk, c);
      h = ad::mixconv(tape, h, bind.mix_kernels(name + ".mixconv", mix.groups()), mix);
      h = ad::batchnorm(tape, h, bind.bn(name + ".mixconv_bn"), mode);
      h = ad::activation(tape, h, blk.activation);
      h = ad::pointwise(tape, h, bind.param(name + ".project.w"), blk.project_groups);
      h = ad::batchnorm(tape, h, bind.bn(name + ".project_bn"), mode);
      h = ad::activation(tape, h, blk.activation);
    } else {
      const InvertedResidualSpec spec = block_ir_spec(blk, c);
      ad::InvertedResidualVars v;
      if (spec.expansion != 1) {
        v.expand_w = bind.param(name + ".expand.w");
        v.expand_bn = bind.bn(name + ".expand_bn");
      }
      v.mix_kernels = bind.mix_kernels(name + ".mixconv", spec.mix.groups());
      v.mix_bn = bind.bn(name + ".mixconv_bn");
      if (spec.se) {
        v.se = ad::SqueezeExciteVars{
            bind.param(name + ".se.reduce_w"), bind.param(name + ".se.reduce_b"),
            bind.param(name + ".se.expand_w"), bind.param(name + ".se.expand_b")};
      }
      v.project_w = bind.param(name + ".project.w");
      v.project_bn = bind.bn(name + ".project_bn");
      h = ad::inverted_residual(tape, h, spec, v, mode);
    }
    c = blk.channels_out;
  }
  if (config.head.channels > 0) {
    h = ad::pointwise(tape, h, bind.param("head.conv.w"), 1);
    h = ad::batchnorm(tape, h, bind.bn("head.bn"), mode);
    h = ad::activation(tape, h, config.head.activation);
  }
  h = ad::global_avg_pool(tape, h);
  return ad::dense(tape, h, bind.param("head.dense.w"), bind.param("head.dense.b"));
}

Tensor network_logits(const ModelConfig& config, NetworkParams& params,
                      const Tensor& images, BatchNormMode mode) {
  Tape tape;
  const Var x = tape.input(images);
  return tape.value(network_forward(tape, config, params, x, mode));
}

}  // namespace mixconv
