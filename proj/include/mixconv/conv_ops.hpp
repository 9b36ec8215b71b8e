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

#include "mixconv/tensor.hpp"

namespace mixconv {

enum class Padding { kSame, kValid };

/// Geometry of a square convolution window.
///
/// Taps are spaced `dilation` pixels apart, so the window covers
/// (kernel - 1) * dilation + 1 pixels. Dilation above 1 is only defined for
/// stride 1.
struct ConvGeom {
  std::int64_t kernel = 3;
  std::int64_t stride = 1;
  std::int64_t dilation = 1;
  Padding padding = Padding::kSame;
  std::int64_t multiplier = 1;

  /// Throws GeometryError on an even or non-positive kernel, stride outside
  /// {1, 2}, dilation < 1, dilation combined with stride 2, or multiplier < 1.
  void validate() const;
  std::int64_t effective_kernel() const { return (kernel - 1) * dilation + 1; }
};

struct PadAmounts {
  std::int64_t top = 0;
  std::int64_t bottom = 0;
  std::int64_t left = 0;
  std::int64_t right = 0;

  friend bool operator==(const PadAmounts&, const PadAmounts&) = default;
};

struct PadResult {
  PadAmounts pad;  // square: top == left, bottom == right
  std::int64_t out_extent = 0;
};

/// Padding and output extent along one spatial axis.
///
/// `same`: out = ceil(in / stride), total = max((out-1)*stride + k_eff - in, 0),
/// with the odd pixel going after (bottom/right). `valid`: zero padding and
/// out = floor((in - k_eff) / stride) + 1.
PadResult pad_compute(std::int64_t in_extent, const ConvGeom& geom);

/// Output shape of a spatial window op with `out_channels` channels.
Shape4 conv_output_shape(const Shape4& in, const ConvGeom& geom,
                         std::int64_t out_channels);

// Depthwise convolution. The kernel is shaped (k, k, c, m); output channel
// z = ch * m + j reads input channel ch. Each output element sums its taps
// with the row offset outer and the column offset inner, both ascending, and
// skips taps that fall in the zero padding.
Tensor depthwise_forward(const Tensor& x, const Tensor& w, const ConvGeom& geom);

struct ConvGrads {
  Tensor dx;
  Tensor dw;
};

ConvGrads depthwise_backward(const Tensor& x, const Tensor& w,
                             const ConvGeom& geom, const Tensor& dy);

// 1x1 convolution with optional channel groups. The kernel is stored compactly
// as (1, 1, c_in / groups, c_out): output channel o of group g reads input
// channels [g * c_in/groups, (g+1) * c_in/groups).
Tensor pointwise_forward(const Tensor& x, const Tensor& w, std::int64_t groups);
ConvGrads pointwise_backward(const Tensor& x, const Tensor& w,
                             std::int64_t groups, const Tensor& dy);

// Dense k x k convolution with kernel (k, k, c_in, c_out). Used by network
// stems; geom.multiplier is ignored.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const ConvGeom& geom);
ConvGrads conv2d_backward(const Tensor& x, const Tensor& w,
                          const ConvGeom& geom, const Tensor& dy);

}  // namespace mixconv
