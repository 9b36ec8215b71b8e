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
#include <span>
#include <vector>

#include "mixconv/conv_ops.hpp"
#include "mixconv/tensor.hpp"

namespace mixconv {

/// c = 32, g = 4 gives (8, 8, 8, 8). When g does not divide c the leading
/// (smallest-kernel) groups take one extra channel each.
std::vector<std::int64_t> partition_equal(std::int64_t c, std::int64_t g);

/// Group i < g takes max(1, floor(c / 2^i)) channels; the last group takes the
/// rest. c = 32, g = 4 gives (16, 8, 4, 4).
std::vector<std::int64_t> partition_exponential(std::int64_t c, std::int64_t g);

struct PartitionScheme {
  enum class Kind { kEqual, kExponential, kExplicit };
  Kind kind = Kind::kEqual;
  std::vector<std::int64_t> counts;  // kExplicit only

  static PartitionScheme equal() { return {}; }
  static PartitionScheme exponential() { return {Kind::kExponential, {}}; }
  static PartitionScheme explicit_counts(std::vector<std::int64_t> counts) {
    return {Kind::kExplicit, std::move(counts)};
  }

  /// Channel counts for `c` channels over `g` groups. Throws PartitionError
  /// if the result would not be positive counts summing to c.
  std::vector<std::int64_t> apply(std::int64_t c, std::int64_t g) const;

  friend bool operator==(const PartitionScheme&, const PartitionScheme&) = default;
};

/// {3, 5, ..., 2g + 1}.
std::vector<std::int64_t> default_kernels(std::int64_t g);

/// A mixed depthwise convolution: input channels are split into groups and
/// group t is convolved depthwise with its own k_t x k_t kernel (dilated by
/// d_t). Stride, multiplier and `same` padding are shared by all groups.
struct MixConvSpec {
  std::vector<std::int64_t> kernels;
  std::vector<std::int64_t> channels;
  std::vector<std::int64_t> dilations;  // empty means 1 for every group
  std::int64_t multiplier = 1;
  std::int64_t stride = 1;

  /// Spec with kernels {3, 5, ..., 2g+1} and channels from `scheme`.
  static MixConvSpec with_default_kernels(
      std::int64_t c, std::int64_t g,
      const PartitionScheme& scheme = PartitionScheme::equal(),
      std::int64_t multiplier = 1, std::int64_t stride = 1);

  std::int64_t groups() const { return static_cast<std::int64_t>(kernels.size()); }
  std::int64_t dilation(std::int64_t t) const;
  std::int64_t in_channels() const;
  std::int64_t out_channels() const { return multiplier * in_channels(); }
  ConvGeom group_geom(std::int64_t t) const;

  /// Throws SpecError when group lists disagree in length, a group is empty,
  /// or effective kernel extents are not strictly increasing odd values.
  /// Group geometry problems surface as GeometryError.
  void validate() const;

  friend bool operator==(const MixConvSpec&, const MixConvSpec&) = default;
};

/// Fused forward pass over all groups; output channels are the concatenation
/// of each group's depthwise output. `kernels[t]` is shaped
/// (k_t, k_t, c_t, multiplier).
Tensor mixconv_forward(const Tensor& x, std::span<const Tensor> kernels,
                       const MixConvSpec& spec);

struct MixConvGrads {
  Tensor dx;
  std::vector<Tensor> dkernels;
};

MixConvGrads mixconv_backward(const Tensor& x, std::span<const Tensor> kernels,
                              const MixConvSpec& spec, const Tensor& dy);

/// Sum over groups of k_t^2 * c_t * m.
std::int64_t mixconv_param_count(const MixConvSpec& spec);

}  // namespace mixconv
