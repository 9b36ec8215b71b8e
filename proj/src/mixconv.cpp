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

#include "mixconv/mixconv.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace mixconv {

std::vector<std::int64_t> partition_equal(std::int64_t c, std::int64_t g) {
  if (g < 1 || c < g) {
    throw PartitionError("equal partition needs c >= g >= 1, got c=" +
                         std::to_string(c) + " g=" + std::to_string(g));
  }
  std::vector<std::int64_t> counts(static_cast<std::size_t>(g), c / g);
  for (std::int64_t i = 0; i < c % g; ++i) ++counts[static_cast<std::size_t>(i)];
  return counts;
}

std::vector<std::int64_t> partition_exponential(std::int64_t c, std::int64_t g) {
  if (g < 1 || c < 1) {
    throw PartitionError("exponential partition needs c, g >= 1");
  }
  std::vector<std::int64_t> counts;
  std::int64_t used = 0;
  for (std::int64_t i = 1; i < g; ++i) {
    const std::int64_t share = i < 63 ? c >> i : 0;
    counts.push_back(std::max<std::int64_t>(1, share));
    used += counts.back();
  }
  if (c - used < 1) {
    throw PartitionError("exponential partition of c=" + std::to_string(c) +
                         " into g=" + std::to_string(g) +
                         " leaves the last group empty");
  }
  counts.push_back(c - used);
  return counts;
}

std::vector<std::int64_t> PartitionScheme::apply(std::int64_t c,
                                                 std::int64_t g) const {
  switch (kind) {
    case Kind::kEqual:
      return partition_equal(c, g);
    case Kind::kExponential:
      return partition_exponential(c, g);
    case Kind::kExplicit:
      break;
  }
  if (static_cast<std::int64_t>(counts.size()) != g) {
    throw PartitionError("explicit partition has " +
                         std::to_string(counts.size()) + " groups, expected " +
                         std::to_string(g));
  }
  if (std::any_of(counts.begin(), counts.end(), [](auto v) { return v < 1; })) {
    throw PartitionError("explicit partition has an empty group");
  }
  if (std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) != c) {
    throw PartitionError("explicit partition does not sum to " +
                         std::to_string(c));
  }
  return counts;
}

std::vector<std::int64_t> default_kernels(std::int64_t g) {
  std::vector<std::int64_t> k;
  for (std::int64_t t = 1; t <= g; ++t) k.push_back(2 * t + 1);
  return k;
}

MixConvSpec MixConvSpec::with_default_kernels(std::int64_t c, std::int64_t g,
                                              const PartitionScheme& scheme,
                                              std::int64_t multiplier,
                                              std::int64_t stride) {
  MixConvSpec spec;
  spec.kernels = default_kernels(g);
  spec.channels = scheme.apply(c, g);
  spec.multiplier = multiplier;
  spec.stride = stride;
  return spec;
}

std::int64_t MixConvSpec::dilation(std::int64_t t) const {
  return dilations.empty() ? 1 : dilations[static_cast<std::size_t>(t)];
}

std::int64_t MixConvSpec::in_channels() const {
  return std::accumulate(channels.begin(), channels.end(), std::int64_t{0});
}

ConvGeom MixConvSpec::group_geom(std::int64_t t) const {
  return ConvGeom{kernels[static_cast<std::size_t>(t)], stride, dilation(t),
                  Padding::kSame, multiplier};
}

void MixConvSpec::validate() const {
  if (kernels.empty()) throw SpecError("mixconv needs at least one group");
  if (channels.size() != kernels.size()) {
    throw SpecError("mixconv has " + std::to_string(kernels.size()) +
                    " kernels but " + std::to_string(channels.size()) +
                    " channel groups");
  }
  if (!dilations.empty() && dilations.size() != kernels.size()) {
    throw SpecError("mixconv dilation list length does not match group count");
  }
  std::int64_t previous_extent = 0;
  for (std::int64_t t = 0; t < groups(); ++t) {
    const auto idx = static_cast<std::size_t>(t);
    if (channels[idx] < 1) {
      throw SpecError("mixconv group " + std::to_string(t) + " is empty");
    }
    if (kernels[idx] < 1 || kernels[idx] % 2 == 0) {
      throw SpecError("mixconv kernel sizes must be odd, got " +
                      std::to_string(kernels[idx]));
    }
    const ConvGeom geom = group_geom(t);
    geom.validate();
    if (geom.effective_kernel() <= previous_extent) {
      throw SpecError("mixconv kernel extents must be strictly increasing");
    }
    previous_extent = geom.effective_kernel();
  }
}

namespace {

struct GroupLayout {
  ConvGeom geom;
  std::int64_t c0;  // first input channel
  std::int64_t c;
  std::int64_t pad_top;
  std::int64_t pad_left;
};

std::vector<GroupLayout> layout_for(const Tensor& x,
                                    std::span<const Tensor> kernels,
                                    const MixConvSpec& spec,
                                    std::int64_t& out_h, std::int64_t& out_w) {
  spec.validate();
  const Shape4& xs = x.shape();
  if (xs.c != spec.in_channels()) {
    throw ShapeError("mixconv input has " + std::to_string(xs.c) +
                     " channels, spec partitions " +
                     std::to_string(spec.in_channels()));
  }
  if (static_cast<std::int64_t>(kernels.size()) != spec.groups()) {
    throw ShapeError("mixconv got " + std::to_string(kernels.size()) +
                     " kernels for " + std::to_string(spec.groups()) + " groups");
  }
  std::vector<GroupLayout> groups;
  std::int64_t c0 = 0;
  for (std::int64_t t = 0; t < spec.groups(); ++t) {
    const auto idx = static_cast<std::size_t>(t);
    const ConvGeom geom = spec.group_geom(t);
    const Shape4 expected{geom.kernel, geom.kernel, spec.channels[idx],
                          spec.multiplier};
    if (kernels[idx].shape() != expected) {
      throw ShapeError("mixconv group " + std::to_string(t) + " kernel " +
                       kernels[idx].shape().str() + ", expected " +
                       expected.str());
    }
    const PadResult ph = pad_compute(xs.h, geom);
    const PadResult pw = pad_compute(xs.w, geom);
    out_h = ph.out_extent;
    out_w = pw.out_extent;
    groups.push_back({geom, c0, spec.channels[idx], ph.pad.top, pw.pad.left});
    c0 += spec.channels[idx];
  }
  return groups;
}

}  // namespace

Tensor mixconv_forward(const Tensor& x, std::span<const Tensor> kernels,
                       const MixConvSpec& spec) {
  std::int64_t out_h = 0, out_w = 0;
  const auto groups = layout_for(x, kernels, spec, out_h, out_w);
  const Shape4& xs = x.shape();
  const std::int64_t m = spec.multiplier, s = spec.stride;
  const Shape4 ys{xs.n, out_h, out_w, xs.c * m};
  std::vector<double> y(ys.elements(), 0.0);
  const auto xd = x.data();

  for (std::int64_t n = 0; n < xs.n; ++n) {
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
      for (std::int64_t ox = 0; ox < out_w; ++ox) {
        double* pixel = y.data() + ys.index(n, oy, ox, 0);
        for (std::size_t t = 0; t < groups.size(); ++t) {
          const GroupLayout& gl = groups[t];
          const std::int64_t k = gl.geom.kernel, d = gl.geom.dilation;
          const auto wd = kernels[t].data();
          double* out = pixel + gl.c0 * m;
          for (std::int64_t i = 0; i < k; ++i) {
            const std::int64_t iy = oy * s - gl.pad_top + i * d;
            if (iy < 0 || iy >= xs.h) continue;
            for (std::int64_t j = 0; j < k; ++j) {
              const std::int64_t ix = ox * s - gl.pad_left + j * d;
              if (ix < 0 || ix >= xs.w) continue;
              const double* xp = xd.data() + xs.index(n, iy, ix, gl.c0);
              const double* wp = wd.data() + ((i * k + j) * gl.c) * m;
              for (std::int64_t z = 0; z < gl.c * m; ++z) {
                out[z] += xp[z / m] * wp[z];
              }
            }
          }
        }
      }
    }
  }
  return Tensor(ys, std::move(y));
}

MixConvGrads mixconv_backward(const Tensor& x, std::span<const Tensor> kernels,
                              const MixConvSpec& spec, const Tensor& dy) {
  std::int64_t out_h = 0, out_w = 0;
  const auto groups = layout_for(x, kernels, spec, out_h, out_w);
  const Shape4& xs = x.shape();
  const std::int64_t m = spec.multiplier, s = spec.stride;
  const Shape4 ys{xs.n, out_h, out_w, xs.c * m};
  if (dy.shape() != ys) {
    throw ShapeError("mixconv gradient shape " + dy.shape().str() +
                     " does not match output " + ys.str());
  }
  std::vector<double> dx(xs.elements(), 0.0);
  std::vector<std::vector<double>> dw;
  for (const auto& k : kernels) dw.emplace_back(k.size(), 0.0);
  const auto xd = x.data();
  const auto gd = dy.data();

  for (std::int64_t n = 0; n < xs.n; ++n) {
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
      for (std::int64_t ox = 0; ox < out_w; ++ox) {
        const double* pixel = gd.data() + ys.index(n, oy, ox, 0);
        for (std::size_t t = 0; t < groups.size(); ++t) {
          const GroupLayout& gl = groups[t];
          const std::int64_t k = gl.geom.kernel, d = gl.geom.dilation;
          const auto wd = kernels[t].data();
          const double* g = pixel + gl.c0 * m;
          for (std::int64_t i = 0; i < k; ++i) {
            const std::int64_t iy = oy * s - gl.pad_top + i * d;
            if (iy < 0 || iy >= xs.h) continue;
            for (std::int64_t j = 0; j < k; ++j) {
              const std::int64_t ix = ox * s - gl.pad_left + j * d;
              if (ix < 0 || ix >= xs.w) continue;
              const std::size_t xoff = xs.index(n, iy, ix, gl.c0);
              const auto woff = static_cast<std::size_t>((i * k + j) * gl.c * m);
              for (std::int64_t z = 0; z < gl.c * m; ++z) {
                dx[xoff + z / m] += wd[woff + z] * g[z];
                dw[t][woff + z] += xd[xoff + z / m] * g[z];
              }
            }
          }
        }
      }
    }
  }
  MixConvGrads grads{Tensor(xs, std::move(dx)), {}};
  for (std::size_t t = 0; t < dw.size(); ++t) {
    grads.dkernels.emplace_back(kernels[t].shape(), std::move(dw[t]));
  }
  return grads;
}

std::int64_t mixconv_param_count(const MixConvSpec& spec) {
  std::int64_t total = 0;
  for (std::size_t t = 0; t < spec.kernels.size(); ++t) {
    total += spec.kernels[t] * spec.kernels[t] * spec.channels[t] * spec.multiplier;
  }
  return total;
}

}  // namespace mixconv
