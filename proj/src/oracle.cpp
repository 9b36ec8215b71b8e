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

#include "mixconv/oracle.hpp"

#include <algorithm>

#include "mixconv/error.hpp"

namespace mixconv::oracle {

namespace {

// Zero-padded copy of x with the `same`/`valid` amounts for geom.
struct Padded {
  std::vector<double> data;
  std::int64_t h = 0, w = 0, c = 0;
  std::int64_t out_h = 0, out_w = 0;

  double at(std::int64_t n, std::int64_t y, std::int64_t x, std::int64_t z) const {
    return data[static_cast<std::size_t>(((n * h + y) * w + x) * c + z)];
  }
};

Padded pad_input(const Tensor& x, const ConvGeom& geom) {
  const Shape4& s = x.shape();
  const PadResult ph = pad_compute(s.h, geom);
  const PadResult pw = pad_compute(s.w, geom);
  Padded p;
  p.h = s.h + ph.pad.top + ph.pad.bottom;
  p.w = s.w + pw.pad.left + pw.pad.right;
  p.c = s.c;
  p.out_h = ph.out_extent;
  p.out_w = pw.out_extent;
  p.data.assign(static_cast<std::size_t>(s.n * p.h * p.w * p.c), 0.0);
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t y = 0; y < s.h; ++y)
      for (std::int64_t xx = 0; xx < s.w; ++xx)
        for (std::int64_t z = 0; z < s.c; ++z)
          p.data[static_cast<std::size_t>(
              ((n * p.h + y + ph.pad.top) * p.w + xx + pw.pad.left) * p.c + z)] =
              x.at(n, y, xx, z);
  return p;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

Counted naive_depthwise(const Tensor& x, const Tensor& w, const ConvGeom& geom) {
  geom.validate();
  const Shape4& xs = x.shape();
  const std::int64_t k = geom.kernel, m = geom.multiplier;
  require(w.shape() == Shape4{k, k, xs.c, m}, "oracle depthwise kernel shape");
  const Padded p = pad_input(x, geom);
  const Shape4 ys{xs.n, p.out_h, p.out_w, xs.c * m};
  std::vector<double> y(ys.elements(), 0.0);
  std::int64_t iterations = 0;
  for (std::int64_t n = 0; n < xs.n; ++n)
    for (std::int64_t oy = 0; oy < p.out_h; ++oy)
      for (std::int64_t ox = 0; ox < p.out_w; ++ox)
        for (std::int64_t ch = 0; ch < xs.c; ++ch)
          for (std::int64_t q = 0; q < m; ++q) {
            // Padding taps add +-0, which leaves the sum unchanged.
            double acc = 0.0;
            for (std::int64_t i = 0; i < k; ++i)
              for (std::int64_t j = 0; j < k; ++j) {
                acc += p.at(n, oy * geom.stride + i * geom.dilation,
                            ox * geom.stride + j * geom.dilation, ch) *
                       w.at(i, j, ch, q);
                ++iterations;
              }
            y[ys.index(n, oy, ox, ch * m + q)] = acc;
          }
  return {Tensor(ys, std::move(y)), iterations};
}

Counted naive_pointwise(const Tensor& x, const Tensor& w, std::int64_t groups) {
  const Shape4& xs = x.shape();
  require(groups >= 1 && xs.c % groups == 0, "oracle pointwise groups");
  const std::int64_t cin_g = xs.c / groups;
  const std::int64_t c_out = w.shape().c;
  require(w.shape() == Shape4{1, 1, cin_g, c_out} && c_out % groups == 0,
          "oracle pointwise kernel shape");
  const std::int64_t cout_g = c_out / groups;
  const Shape4 ys{xs.n, xs.h, xs.w, c_out};
  std::vector<double> y(ys.elements(), 0.0);
  std::int64_t iterations = 0;
  for (std::int64_t n = 0; n < xs.n; ++n)
    for (std::int64_t r = 0; r < xs.h; ++r)
      for (std::int64_t col = 0; col < xs.w; ++col)
        for (std::int64_t o = 0; o < c_out; ++o) {
          const std::int64_t g = o / cout_g;
          double acc = 0.0;
          for (std::int64_t ci = 0; ci < cin_g; ++ci) {
            acc += x.at(n, r, col, g * cin_g + ci) * w.at(0, 0, ci, o);
            ++iterations;
          }
          y[ys.index(n, r, col, o)] = acc;
        }
  return {Tensor(ys, std::move(y)), iterations};
}

Tensor composed_mixconv(const Tensor& x, std::span<const Tensor> kernels,
                        const MixConvSpec& spec) {
  spec.validate();
  require(static_cast<std::int64_t>(kernels.size()) == spec.groups(),
          "oracle mixconv kernel count");
  std::vector<Tensor> parts;
  std::int64_t lo = 0;
  for (std::int64_t t = 0; t < spec.groups(); ++t) {
    const std::int64_t hi = lo + spec.channels[static_cast<std::size_t>(t)];
    parts.push_back(depthwise_forward(tensor_slice_channels(x, lo, hi),
                                      kernels[static_cast<std::size_t>(t)],
                                      spec.group_geom(t)));
    lo = hi;
  }
  return tensor_concat_channels(parts);
}

MixConvGrads composed_mixconv_backward(const Tensor& x,
                                       std::span<const Tensor> kernels,
                                       const MixConvSpec& spec, const Tensor& dy) {
  spec.validate();
  require(static_cast<std::int64_t>(kernels.size()) == spec.groups(),
          "oracle mixconv kernel count");
  std::vector<Tensor> dxs;
  MixConvGrads grads;
  std::int64_t lo = 0;
  for (std::int64_t t = 0; t < spec.groups(); ++t) {
    const std::int64_t hi = lo + spec.channels[static_cast<std::size_t>(t)];
    ConvGrads g = depthwise_backward(
        tensor_slice_channels(x, lo, hi), kernels[static_cast<std::size_t>(t)],
        spec.group_geom(t),
        tensor_slice_channels(dy, lo * spec.multiplier, hi * spec.multiplier));
    dxs.push_back(std::move(g.dx));
    grads.dkernels.push_back(std::move(g.dw));
    lo = hi;
  }
  grads.dx = tensor_concat_channels(dxs);
  return grads;
}

namespace {

struct MixCase {
  Tensor x;
  std::vector<Tensor> kernels;
  MixConvSpec spec;
};

MixCase random_mix_case(Rng& rng, std::int64_t groups) {
  MixCase c;
  c.spec.kernels = default_kernels(groups);
  for (std::int64_t t = 0; t < groups; ++t) c.spec.channels.push_back(rng.uniform_int(1, 3));
  c.spec.stride = rng.uniform_int(1, 2);
  c.spec.multiplier = rng.uniform_int(1, 2);
  const Shape4 xs{rng.uniform_int(1, 2), rng.uniform_int(4, 12), rng.uniform_int(4, 12),
                  c.spec.in_channels()};
  c.x = tensor_randn(xs, rng);
  for (std::int64_t t = 0; t < groups; ++t) {
    const std::int64_t k = c.spec.kernels[static_cast<std::size_t>(t)];
    c.kernels.push_back(tensor_randn(
        Shape4{k, k, c.spec.channels[static_cast<std::size_t>(t)], c.spec.multiplier}, rng));
  }
  return c;
}

ConvGeom random_geom(Rng& rng) {
  ConvGeom g;
  g.kernel = 2 * rng.uniform_int(0, 4) + 1;
  g.stride = rng.uniform_int(1, 2);
  g.dilation = g.stride == 1 ? rng.uniform_int(1, 2) : 1;
  g.padding = rng.uniform_int(0, 3) == 0 ? Padding::kValid : Padding::kSame;
  g.multiplier = rng.uniform_int(1, 2);
  return g;
}

double case_diff(const std::string& suite, Rng& rng) {
  if (suite == "mixconv-equivalence") {
    const MixCase c = random_mix_case(rng, rng.uniform_int(1, 5));
    return tensor_max_abs_diff(mixconv_forward(c.x, c.kernels, c.spec),
                               composed_mixconv(c.x, c.kernels, c.spec));
  }
  if (suite == "mixconv-reduction") {
    const MixCase c = random_mix_case(rng, 1);
    return tensor_max_abs_diff(mixconv_forward(c.x, c.kernels, c.spec),
                               depthwise_forward(c.x, c.kernels[0], c.spec.group_geom(0)));
  }
  if (suite == "depthwise-naive") {
    ConvGeom g = random_geom(rng);
    const std::int64_t ext = g.effective_kernel() + rng.uniform_int(0, 6);
    const Shape4 xs{rng.uniform_int(1, 2), ext, ext + rng.uniform_int(0, 2),
                    rng.uniform_int(1, 4)};
    const Tensor x = tensor_randn(xs, rng);
    const Tensor w = tensor_randn(Shape4{g.kernel, g.kernel, xs.c, g.multiplier}, rng);
    return tensor_max_abs_diff(depthwise_forward(x, w, g), naive_depthwise(x, w, g).y);
  }
  if (suite == "pointwise-naive") {
    const std::int64_t groups = rng.uniform_int(1, 3);
    const std::int64_t c_in = groups * rng.uniform_int(1, 4);
    const std::int64_t c_out = groups * rng.uniform_int(1, 4);
    const Tensor x = tensor_randn(
        Shape4{rng.uniform_int(1, 2), rng.uniform_int(1, 6), rng.uniform_int(1, 6), c_in}, rng);
    const Tensor w = tensor_randn(Shape4{1, 1, c_in / groups, c_out}, rng);
    return tensor_max_abs_diff(pointwise_forward(x, w, groups),
                               naive_pointwise(x, w, groups).y);
  }
  if (suite == "mixconv-backward") {
    const MixCase c = random_mix_case(rng, rng.uniform_int(1, 5));
    const Tensor dy = tensor_randn(mixconv_forward(c.x, c.kernels, c.spec).shape(), rng);
    const MixConvGrads fused = mixconv_backward(c.x, c.kernels, c.spec, dy);
    const MixConvGrads composed = composed_mixconv_backward(c.x, c.kernels, c.spec, dy);
    double diff = tensor_max_abs_diff(fused.dx, composed.dx);
    for (std::size_t t = 0; t < fused.dkernels.size(); ++t) {
      diff = std::max(diff, tensor_max_abs_diff(fused.dkernels[t], composed.dkernels[t]));
    }
    return diff;
  }
  throw LookupError("unknown oracle suite '" + suite + "'");
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"mixconv-equivalence", "mixconv-reduction", "depthwise-naive",
          "pointwise-naive", "mixconv-backward"};
}

SuiteReport run_suite(const std::string& suite, std::int64_t cases, std::uint64_t seed) {
  const auto names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    throw LookupError("unknown oracle suite '" + suite + "'");
  }
  if (cases < 1) throw ConfigError("oracle cases must be positive");
  Rng rng(seed);
  SuiteReport report{suite, cases, 0.0};
  for (std::int64_t i = 0; i < cases; ++i) {
    report.max_abs_diff = std::max(report.max_abs_diff, case_diff(suite, rng));
  }
  return report;
}

}  // namespace mixconv::oracle
