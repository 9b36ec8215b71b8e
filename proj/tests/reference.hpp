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

// Test-only reference implementations and numeric helpers.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mixconv/conv_ops.hpp"
#include "mixconv/tensor.hpp"

namespace mixconv::testing {

/// Direct depthwise convolution with explicit in-bounds checks. Taps are
/// visited i outer, j inner.
inline Tensor reference_depthwise(const Tensor& x, const Tensor& w, const ConvGeom& g) {
  const Shape4& s = x.shape();
  const PadResult ph = pad_compute(s.h, g);
  const PadResult pw = pad_compute(s.w, g);
  const std::int64_t m = g.multiplier;
  const Shape4 ys{s.n, ph.out_extent, pw.out_extent, s.c * m};
  std::vector<double> y(ys.elements());
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t oy = 0; oy < ys.h; ++oy)
      for (std::int64_t ox = 0; ox < ys.w; ++ox)
        for (std::int64_t z = 0; z < ys.c; ++z) {
          double acc = 0.0;
          for (std::int64_t i = 0; i < g.kernel; ++i)
            for (std::int64_t j = 0; j < g.kernel; ++j) {
              const std::int64_t iy = oy * g.stride - ph.pad.top + i * g.dilation;
              const std::int64_t ix = ox * g.stride - pw.pad.left + j * g.dilation;
              if (iy < 0 || iy >= s.h || ix < 0 || ix >= s.w) continue;
              acc += x.at(n, iy, ix, z / m) * w.at(i, j, z / m, z % m);
            }
          y[ys.index(n, oy, ox, z)] = acc;
        }
  return Tensor(ys, std::move(y));
}

/// Dense k x k convolution, taps i, j, then input channel.
inline Tensor reference_conv2d(const Tensor& x, const Tensor& w, const ConvGeom& g) {
  const Shape4& s = x.shape();
  const PadResult ph = pad_compute(s.h, g);
  const PadResult pw = pad_compute(s.w, g);
  const Shape4 ys{s.n, ph.out_extent, pw.out_extent, w.shape().c};
  std::vector<double> y(ys.elements());
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t oy = 0; oy < ys.h; ++oy)
      for (std::int64_t ox = 0; ox < ys.w; ++ox)
        for (std::int64_t o = 0; o < ys.c; ++o) {
          double acc = 0.0;
          for (std::int64_t i = 0; i < g.kernel; ++i)
            for (std::int64_t j = 0; j < g.kernel; ++j) {
              const std::int64_t iy = oy * g.stride - ph.pad.top + i * g.dilation;
              const std::int64_t ix = ox * g.stride - pw.pad.left + j * g.dilation;
              if (iy < 0 || iy >= s.h || ix < 0 || ix >= s.w) continue;
              for (std::int64_t ci = 0; ci < s.c; ++ci) acc += x.at(n, iy, ix, ci) * w.at(i, j, ci, o);
            }
          y[ys.index(n, oy, ox, o)] = acc;
        }
  return Tensor(ys, std::move(y));
}

/// Matrix product per pixel with a block-diagonal (grouped) weight.
inline Tensor reference_pointwise(const Tensor& x, const Tensor& w, std::int64_t groups) {
  const Shape4& s = x.shape();
  const std::int64_t cin_g = s.c / groups, c_out = w.shape().c, cout_g = c_out / groups;
  const Shape4 ys{s.n, s.h, s.w, c_out};
  std::vector<double> y(ys.elements());
  for (std::int64_t p = 0; p < s.n * s.h * s.w; ++p)
    for (std::int64_t o = 0; o < c_out; ++o) {
      double acc = 0.0;
      const std::int64_t g = o / cout_g;
      for (std::int64_t ci = 0; ci < cin_g; ++ci) {
        acc += x[static_cast<std::size_t>(p * s.c + g * cin_g + ci)] *
               w[static_cast<std::size_t>(ci * c_out + o)];
      }
      y[static_cast<std::size_t>(p * c_out + o)] = acc;
    }
  return Tensor(ys, std::move(y));
}

/// Central differences of `f` with respect to every element of `at`.
inline Tensor numeric_gradient(const std::function<double(const Tensor&)>& f,
                               const Tensor& at, double step = 1e-5) {
  std::vector<double> g(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    std::vector<double> v = at.to_vector();
    v[i] = at[i] + step;
    const double up = f(Tensor(at.shape(), v));
    v[i] = at[i] - step;
    const double down = f(Tensor(at.shape(), v));
    g[i] = (up - down) / (2.0 * step);
  }
  return Tensor(at.shape(), std::move(g));
}

inline double max_relative_error(const Tensor& analytic, const Tensor& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], f = numeric[i];
    worst = std::max(worst, std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-8}));
  }
  return worst;
}

/// 0.5 * ||t||^2.
inline double half_sq_norm(const Tensor& t) { return 0.5 * tensor_dot(t, t); }

}  // namespace mixconv::testing
