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
#include <string>
#include <vector>

#include "mixconv/conv_ops.hpp"
#include "mixconv/mixconv.hpp"
#include "mixconv/tensor.hpp"

namespace mixconv::oracle {

// Reference implementations written as plain loops over an explicitly padded
// input. They visit every tap (padding included) in the same order as the
// library kernels, so forward results agree bit for bit.

struct Counted {
  Tensor y;
  /// Multiply-accumulate iterations executed, padding taps included.
  std::int64_t iterations = 0;
};

Counted naive_depthwise(const Tensor& x, const Tensor& w, const ConvGeom& geom);
Counted naive_pointwise(const Tensor& x, const Tensor& w, std::int64_t groups);

/// Slice each group's channels, run depthwise_forward, concatenate.
Tensor composed_mixconv(const Tensor& x, std::span<const Tensor> kernels,
                        const MixConvSpec& spec);
MixConvGrads composed_mixconv_backward(const Tensor& x,
                                       std::span<const Tensor> kernels,
                                       const MixConvSpec& spec, const Tensor& dy);

struct SuiteReport {
  std::string suite;
  std::int64_t cases = 0;
  double max_abs_diff = 0.0;
  bool passed() const { return max_abs_diff == 0.0; }
};

/// "mixconv-equivalence", "mixconv-reduction", "depthwise-naive",
/// "pointwise-naive", "mixconv-backward".
std::vector<std::string> suite_names();

/// Runs `cases` random cases drawn from `seed`. Throws LookupError for an
/// unknown suite.
SuiteReport run_suite(const std::string& suite, std::int64_t cases,
                      std::uint64_t seed);

}  // namespace mixconv::oracle
