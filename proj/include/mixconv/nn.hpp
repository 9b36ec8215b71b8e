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
#include <span>
#include <string>
#include <vector>

#include "mixconv/conv_ops.hpp"
#include "mixconv/mixconv.hpp"
#include "mixconv/tape.hpp"
#include "mixconv/tensor.hpp"

namespace mixconv {

enum class Activation { kNone, kRelu, kSwish };

std::string to_string(Activation act);
/// Accepts "none", "relu" and "swish"; throws ConfigError otherwise.
Activation parse_activation(const std::string& name);

Tensor sigmoid_forward(const Tensor& x);
Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);
/// x * sigmoid(x).
Tensor swish_forward(const Tensor& x);
Tensor swish_backward(const Tensor& x, const Tensor& dy);
Tensor activation_forward(Activation act, const Tensor& x);
Tensor activation_backward(Activation act, const Tensor& x, const Tensor& dy);

// ---------------------------------------------------------------------------
// Batch normalization

enum class BatchNormMode { kTrain, kInfer };

/// Per-channel running statistics and hyperparameters. Train-mode forward
/// updates running = momentum * running + (1 - momentum) * batch.
struct RunningStats {
  std::vector<double> mean;
  std::vector<double> var;
  double epsilon = 1e-3;
  double momentum = 0.99;

  /// Zero mean, unit variance.
  static RunningStats fresh(std::int64_t channels);
  std::int64_t channels() const { return static_cast<std::int64_t>(mean.size()); }
};

struct BatchNormState {
  Tensor gamma;  // (1, 1, 1, c)
  Tensor beta;   // (1, 1, 1, c)
  RunningStats stats;

  /// gamma = 1, beta = 0, fresh statistics.
  static BatchNormState fresh(std::int64_t channels);
};

/// Train mode normalizes with the batch statistics over (n, h, w) and updates
/// the running statistics in `state`; infer mode reads the running statistics.
Tensor batchnorm_forward(const Tensor& x, BatchNormState& state,
                         BatchNormMode mode);

struct BatchNormGrads {
  Tensor dx;
  Tensor dgamma;
  Tensor dbeta;
};

/// Adjoint of batchnorm_forward for the same `x` and mode. Train mode
/// recomputes the batch statistics from `x`.
BatchNormGrads batchnorm_backward(const Tensor& x, const BatchNormState& state,
                                  BatchNormMode mode, const Tensor& dy);

// ---------------------------------------------------------------------------
// Dense, pooling, gating, loss

/// Fully connected layer applied at every pixel: w is (1, 1, d_in, d_out) and
/// b is (1, 1, 1, d_out).
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct DenseGrads {
  Tensor dx;
  Tensor dw;
  Tensor db;
};

DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy);

/// Mean over (h, w): (n, h, w, c) -> (n, 1, 1, c).
Tensor global_avg_pool_forward(const Tensor& x);
Tensor global_avg_pool_backward(const Shape4& in_shape, const Tensor& dy);

/// y[n, y, x, c] = x[n, y, x, c] * gate[n, 0, 0, c].
Tensor scale_channels_forward(const Tensor& x, const Tensor& gate);

struct ScaleGrads {
  Tensor dx;
  Tensor dgate;
};

ScaleGrads scale_channels_backward(const Tensor& x, const Tensor& gate,
                                   const Tensor& dy);

struct LossResult {
  double loss = 0.0;
  Tensor dlogits;
};

/// Mean softmax cross-entropy over the batch. `logits` is (n, 1, 1, classes).
LossResult softmax_cross_entropy(const Tensor& logits,
                                 std::span<const std::int64_t> labels);

// ---------------------------------------------------------------------------
// Squeeze-and-excitation

struct SqueezeExciteSpec {
  /// Reduced width as a fraction of the block's input channels.
  double ratio = 0.25;
  Activation activation = Activation::kSwish;

  /// max(1, floor(base_channels * ratio)).
  std::int64_t reduced_channels(std::int64_t base_channels) const;
};

struct SqueezeExciteWeights {
  Tensor reduce_w;  // (1, 1, c, r)
  Tensor reduce_b;  // (1, 1, 1, r)
  Tensor expand_w;  // (1, 1, r, c)
  Tensor expand_b;  // (1, 1, 1, c)
};

/// Pool over (h, w), dense reduce, activation, dense expand, sigmoid gate,
/// then scale x per channel.
Tensor squeeze_excite(const Tensor& x, const SqueezeExciteSpec& spec,
                      const SqueezeExciteWeights& weights);

struct SqueezeExciteGrads {
  Tensor dx;
  SqueezeExciteWeights dweights;
};

SqueezeExciteGrads squeeze_excite_backward(const Tensor& x,
                                           const SqueezeExciteSpec& spec,
                                           const SqueezeExciteWeights& weights,
                                           const Tensor& dy);

// ---------------------------------------------------------------------------
// Inverted residual block

/// 1x1 expand (absent when expansion is 1), BN, activation, MixConv, BN,
/// activation, optional SE, 1x1 project, BN, and the skip connection when
/// `residual` is set. There is no activation after the projection.
struct InvertedResidualSpec {
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t expansion = 1;
  MixConvSpec mix;  // over the expanded channels; carries the stride
  std::optional<SqueezeExciteSpec> se;
  Activation activation = Activation::kRelu;
  std::int64_t expand_groups = 1;
  std::int64_t project_groups = 1;
  bool residual = false;

  std::int64_t expanded_channels() const { return in_channels * expansion; }
  bool residual_allowed() const {
    return mix.stride == 1 && in_channels == out_channels;
  }
  /// Throws ShapeError when `residual` disagrees with residual_allowed() or
  /// the MixConv does not cover the expanded channels.
  void validate() const;
};

struct InvertedResidualParams {
  std::optional<Tensor> expand_w;  // (1, 1, c_in / groups, expanded)
  BatchNormState expand_bn;
  std::vector<Tensor> mix_kernels;
  BatchNormState mix_bn;
  std::optional<SqueezeExciteWeights> se;
  Tensor project_w;  // (1, 1, expanded / groups, c_out)
  BatchNormState project_bn;
};

Tensor inverted_residual(const Tensor& x, const InvertedResidualSpec& spec,
                         InvertedResidualParams& params,
                         BatchNormMode mode = BatchNormMode::kInfer);

// ---------------------------------------------------------------------------
// Tape-recorded versions of the layers above.
namespace ad {

Var conv2d(Tape& tape, Var x, Var w, const ConvGeom& geom);
Var depthwise(Tape& tape, Var x, Var w, const ConvGeom& geom);
Var pointwise(Tape& tape, Var x, Var w, std::int64_t groups);
Var mixconv(Tape& tape, Var x, std::span<const Var> kernels,
            const MixConvSpec& spec);
Var activation(Tape& tape, Var x, Activation act);
Var sigmoid(Tape& tape, Var x);

struct BatchNormVars {
  Var gamma;
  Var beta;
  RunningStats* stats = nullptr;
};

Var batchnorm(Tape& tape, Var x, const BatchNormVars& bn, BatchNormMode mode);
Var dense(Tape& tape, Var x, Var w, Var b);
Var global_avg_pool(Tape& tape, Var x);
Var scale_channels(Tape& tape, Var x, Var gate);
Var add(Tape& tape, Var a, Var b);

struct SqueezeExciteVars {
  Var reduce_w;
  Var reduce_b;
  Var expand_w;
  Var expand_b;
};

Var squeeze_excite(Tape& tape, Var x, const SqueezeExciteSpec& spec,
                   const SqueezeExciteVars& se);

/// Scalar (1, 1, 1, 1) mean cross-entropy.
Var softmax_cross_entropy(Tape& tape, Var logits,
                          std::vector<std::int64_t> labels);

struct InvertedResidualVars {
  std::optional<Var> expand_w;
  std::optional<BatchNormVars> expand_bn;
  std::vector<Var> mix_kernels;
  BatchNormVars mix_bn;
  std::optional<SqueezeExciteVars> se;
  Var project_w;
  BatchNormVars project_bn;
};

Var inverted_residual(Tape& tape, Var x, const InvertedResidualSpec& spec,
                      const InvertedResidualVars& vars, BatchNormMode mode);

/// Registers every tensor of `params` on `tape` under `prefix`.
InvertedResidualVars register_params(Tape& tape, const std::string& prefix,
                                     InvertedResidualParams& params);

}  // namespace ad

}  // namespace mixconv
