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

#include "mixconv/sweep.hpp"

#include <charconv>
#include <sstream>

#include "mixconv/accounting.hpp"
#include "mixconv/error.hpp"
#include "mixconv/model_zoo.hpp"

namespace mixconv {

std::string to_string(SweepMode mode) {
  switch (mode) {
    case SweepMode::kDepthwise: return "depthwise";
    case SweepMode::kMixConv: return "mixconv";
    case SweepMode::kMixConvExp: return "mixconv-exp";
    case SweepMode::kMixConvDilated: return "mixconv-dilated";
  }
  return "depthwise";
}

SweepMode parse_sweep_mode(std::string_view name) {
  for (SweepMode m : {SweepMode::kDepthwise, SweepMode::kMixConv, SweepMode::kMixConvExp,
                      SweepMode::kMixConvDilated}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown sweep mode '" + std::string(name) + "'");
}

void SweepSpec::validate() const {
  if (base != "mobilenet-v1" && base != "mobilenet-v2") {
    throw ConfigError("sweep base must be mobilenet-v1 or mobilenet-v2, got '" + base + "'");
  }
  if (kernels.empty() || kernels.front() != 3) {
    throw ConfigError("sweep kernels must start at 3");
  }
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (kernels[i] % 2 == 0) {
      throw ConfigError("sweep kernel " + std::to_string(kernels[i]) + " is even");
    }
    if (i > 0 && kernels[i] <= kernels[i - 1]) {
      throw ConfigError("sweep kernels must be strictly ascending");
    }
  }
  if (resolution < 1) throw ConfigError("resolution must be positive");
}

namespace {

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError("bad kernel size '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::vector<std::int64_t> parse_kernel_list(std::string_view text) {
  std::vector<std::int64_t> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const std::int64_t lo = parse_int(text.substr(0, dots));
    const std::int64_t hi = parse_int(text.substr(dots + 2));
    if (lo % 2 == 0 || hi % 2 == 0 || hi < lo) {
      throw ConfigError("kernel range '" + std::string(text) + "' needs odd ends, low first");
    }
    for (std::int64_t k = lo; k <= hi; k += 2) out.push_back(k);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    out.push_back(parse_int(text.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepRow> rows;
  for (std::size_t n = 1; n <= spec.kernels.size(); ++n) {
    const std::vector<std::int64_t> prefix(spec.kernels.begin(),
                                           spec.kernels.begin() + static_cast<std::ptrdiff_t>(n));
    KernelChoice choice;
    switch (spec.mode) {
      case SweepMode::kDepthwise: choice = KernelChoice::depthwise(prefix.back()); break;
      case SweepMode::kMixConv: choice = {prefix, PartitionScheme::equal(), false}; break;
      case SweepMode::kMixConvExp: choice = {prefix, PartitionScheme::exponential(), false}; break;
      case SweepMode::kMixConvDilated: choice = {prefix, PartitionScheme::equal(), true}; break;
    }
    const ModelConfig model = spec.base == "mobilenet-v1" ? build_mobilenet_v1(choice)
                                                          : build_mobilenet_v2(choice);
    const CostReport report = count_model(model, spec.resolution);
    rows.push_back({prefix.back(), spec.mode, report.total_params, report.total_madds});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "max_kernel,mode,params,madds\n";
  for (const auto& r : rows) {
    os << r.max_kernel << ',' << to_string(r.mode) << ',' << r.params << ',' << r.madds << '\n';
  }
  return os.str();
}

nlohmann::json sweep_json(const std::vector<SweepRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"max_kernel", r.max_kernel},
                   {"mode", to_string(r.mode)},
                   {"params", r.params},
                   {"madds", r.madds}});
  }
  return out;
}

}  // namespace mixconv
