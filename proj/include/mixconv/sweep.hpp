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
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mixconv {

enum class SweepMode { kDepthwise, kMixConv, kMixConvExp, kMixConvDilated };

std::string to_string(SweepMode mode);
/// "depthwise", "mixconv", "mixconv-exp" or "mixconv-dilated"; throws
/// ConfigError otherwise.
SweepMode parse_sweep_mode(std::string_view name);

struct SweepSpec {
  std::string base = "mobilenet-v2";  // mobilenet-v1 or mobilenet-v2
  std::vector<std::int64_t> kernels{3, 5, 7, 9, 11, 13};
  SweepMode mode = SweepMode::kDepthwise;
  std::int64_t resolution = 224;

  /// Throws ConfigError unless the base is a MobileNet, the kernels are odd,
  /// strictly ascending and start at 3, and the resolution is positive.
  void validate() const;
};

/// Parses "3,5,7" or the odd range "3..13".
std::vector<std::int64_t> parse_kernel_list(std::string_view text);

struct SweepRow {
  std::int64_t max_kernel = 0;
  SweepMode mode = SweepMode::kDepthwise;
  std::int64_t params = 0;
  std::int64_t madds = 0;
};

/// One row per kernel-list prefix {3}, {3, 5}, ...: depthwise mode applies the
/// prefix's largest kernel to every depthwise layer, the MixConv modes apply
/// the whole prefix as groups.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

/// Header `max_kernel,mode,params,madds`.
std::string sweep_csv(const std::vector<SweepRow>& rows);
nlohmann::json sweep_json(const std::vector<SweepRow>& rows);

}  // namespace mixconv
