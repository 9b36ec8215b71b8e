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
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixconv/conv_ops.hpp"
#include "mixconv/mixconv.hpp"
#include "mixconv/tensor.hpp"

namespace mixconv {

struct ModelConfig;

// Layer descriptions for static cost counting. FLOPS throughout this module
// means multiply-adds.

/// Dense k x k convolution (stems).
struct ConvOp {
  ConvGeom geom;
  std::int64_t out_channels = 0;
};
struct DepthwiseOp {
  ConvGeom geom;
};
struct PointwiseOp {
  std::int64_t out_channels = 0;
  std::int64_t groups = 1;
};
struct MixConvOp {
  MixConvSpec spec;
};
/// Fully connected with bias.
struct DenseOp {
  std::int64_t out_channels = 0;
};
struct BatchNormOp {};
/// Two dense layers c -> reduced -> c with biases.
struct SqueezeExciteOp {
  std::int64_t reduced = 1;
};
struct ActivationOp {};
struct PoolOp {};

using LayerOp = std::variant<ConvOp, DepthwiseOp, PointwiseOp, MixConvOp, DenseOp,
                             BatchNormOp, SqueezeExciteOp, ActivationOp, PoolOp>;

/// Short name used in reports: conv, depthwise, pointwise, mixconv, dense,
/// batchnorm, se, activation, pool.
std::string op_kind(const LayerOp& op);

struct LayerCost {
  Shape4 out;
  std::int64_t params = 0;
  std::int64_t madds = 0;
  /// Non-trainable state (BN running mean and variance).
  std::int64_t running_params = 0;
};

/// Parameters and multiply-adds of one layer applied to `in` (batch 1).
///
/// depthwise: k^2 c m params, out_h out_w k^2 c m madds (dilation is free);
/// pointwise: c_in c_out / G both per pixel; MixConv: sum over groups;
/// dense: d_in d_out + d_out params, d_in d_out madds; BN: 2c params, no
/// madds; SE: its two dense layers; activations and pooling: nothing.
LayerCost count_layer(const LayerOp& op, const Shape4& in);

struct CostRow {
  std::string layer;
  std::string op;
  Shape4 out;
  std::int64_t params = 0;
  std::int64_t madds = 0;
};

struct CostReport {
  std::vector<CostRow> rows;
  std::int64_t total_params = 0;
  std::int64_t total_madds = 0;
  std::int64_t running_params = 0;

  /// Totals restricted to rows whose op is `op`.
  std::int64_t params_of(const std::string& op) const;
  std::int64_t madds_of(const std::string& op) const;
  /// Depthwise and MixConv rows together.
  std::int64_t depthwise_params() const;
  std::int64_t depthwise_madds() const;
};

struct PlannedLayer {
  std::string name;
  LayerOp op;
  Shape4 in;
};

/// Every counted layer of `config` at a square input of side `resolution`,
/// in execution order. Activations and residual adds are omitted. Throws
/// ConfigError when a block is invalid or shapes do not propagate.
std::vector<PlannedLayer> plan_model(const ModelConfig& config,
                                     std::int64_t resolution);

CostReport count_model(const ModelConfig& config, std::int64_t resolution = 224);

/// `layer,op,out_h,out_w,out_c,params,madds`, one row per layer, then a
/// `total` row. LF line endings.
std::string cost_report_csv(const CostReport& report);
nlohmann::json cost_report_json(const CostReport& report);

}  // namespace mixconv
