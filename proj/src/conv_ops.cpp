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

#include "mixconv/conv_ops.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace mixconv {

void ConvGeom::validate() const {
  if (kernel < 1 || kernel % 2 == 0) {
    throw GeometryError("kernel size must be odd and positive, got " +
                        std::to_string(kernel));
  }
  if (stride != 1 && stride != 2) {
    throw GeometryError("stride must be 1 or 2, got " + std::to_string(stride));
  }
  if (dilation < 1) {
    throw GeometryError("dilation must be >= 1, got " +
                        std::to_string(dilation));
  }
  if (dilation > 1 && stride != 1) {
    throw GeometryError("dilation " + std::to_string(dilation) +
                        " is not supported with stride " +
                        std::to_string(stride));
  }
  if (multiplier < 1) {
    throw GeometryError("channel multiplier must be >= 1");
  }
}

PadResult pad_compute(std::int64_t in_extent, const ConvGeom& geom) {
  geom.validate();
  if (in_extent < 1) throw GeometryError("input extent must be >= 1");
  const std::int64_t k_eff = geom.effective_kernel();
  PadResult r;
  if (geom.padding == Padding::kValid) {
    if (k_eff > in_extent) {
      throw GeometryError("valid padding: window " + std::to_string(k_eff) +
                          " exceeds input extent " + std::to_string(in_extent));
    }
    r.out_extent = (in_extent - k_eff) / geom.stride + 1;
    return r;
  }
  r.out_extent = (in_extent + geom.stride - 1) / geom.stride;
  const std::int64_t total =
      std::max<std::int64_t>((r.out_extent - 1) * geom.stride + k_eff - in_extent, 0);
  const std::int64_t before = total / 2;
  r.pad = PadAmounts{before, total - before, before, total - before};
  return r;
}

Shape4 conv_output_shape(const Shape4& in, const ConvGeom& geom,
                         std::int64_t out_channels) {
  return Shape4{in.n, pad_compute(in.h, geom).out_extent,
                pad_compute(in.w, geom).out_extent, out_channels};
}

namespace {

struct Window {
  std::int64_t out_h, out_w, pad_top, pad_left;
};

Window window_for(const Shape4& in, const ConvGeom& geom) {
  const PadResult ph = pad_compute(in.h, geom);
  const PadResult pw = pad_compute(in.w, geom);
  return {ph.out_extent, pw.out_extent, ph.pad.top, pw.pad.left};
}

void check_depthwise(const Tensor& x, const Tensor& w, const ConvGeom& geom) {
  geom.validate();
  const Shape4& ws = w.shape();
  if (ws.n != geom.kernel || ws.h != geom.kernel) {
    throw ShapeError("depthwise kernel " + ws.str() +
                     " does not match kernel size " +
                     std::to_string(geom.kernel));
  }
  if (ws.w != x.shape().c) {
    throw ShapeError("depthwise kernel channels " + std::to_string(ws.w) +
                     " != input channels " + std::to_string(x.shape().c));
  }
  if (ws.c != geom.multiplier) {
    throw ShapeError("depthwise kernel multiplier " + std::to_string(ws.c) +
                     " != geometry multiplier " +
                     std::to_string(geom.multiplier));
  }
}

void check_grad_shape(const Tensor& dy, const Shape4& expected) {
  if (dy.shape() != expected) {
    throw ShapeError("gradient shape " + dy.shape().str() +
                     " does not match forward output " + expected.str());
  }
}

}  // namespace

Tensor depthwise_forward(const Tensor& x, const Tensor& w, const ConvGeom& geom) {
  check_depthwise(x, w, geom);
  const Shape4& xs = x.shape();
  const std::int64_t k = geom.kernel, d = geom.dilation, s = geom.stride;
  const std::int64_t m = geom.multiplier, c = xs.c;
  const Window win = window_for(xs, geom);
  const Shape4 ys{xs.n, win.out_h, win.out_w, c * m};
  std::vector<double> y(ys.elements(), 0.0);
  const auto xd = x.data();
  const auto wd = w.data();

  for (std::int64_t n = 0; n < xs.n; ++n) {
    for (std::int64_t oy = 0; oy < win.out_h; ++oy) {
      for (std::int64_t ox = 0; ox < win.out_w; ++ox) {
        double* out = y.data() + ys.index(n, oy, ox, 0);
        for (std::int64_t i = 0; i < k; ++i) {
          const std::int64_t iy = oy * s - win.pad_top + i * d;
          if (iy < 0 || iy >= xs.h) continue;
          for (std::int64_t j = 0; j < k; ++j) {
            const std::int64_t ix = ox * s - win.pad_left + j * d;
            if (ix < 0 || ix >= xs.w) continue;
            const double* xp = xd.data() + xs.index(n, iy, ix, 0);
            const double* wp = wd.data() + ((i * k + j) * c) * m;
            for (std::int64_t z = 0; z < c * m; ++z) {
              out[z] += xp[z / m] * wp[z];
            }
          }
        }
      }
    }
  }
  return Tensor(ys, std::move(y));
}

ConvGrads depthwise_backward(const Tensor& x, const Tensor& w,
                             const ConvGeom& geom, const Tensor& dy) {
  check_depthwise(x, w, geom);
  const Shape4& xs = x.shape();
  const std::int64_t k = geom.kernel, d = geom.dilation, s = geom.stride;
  const std::int64_t m = geom.multiplier, c = xs.c;
  const Window win = window_for(xs, geom);
  const Shape4 ys{xs.n, win.out_h, win.out_w, c * m};
  check_grad_shape(dy, ys);
  std::vector<double> dx(xs.elements(), 0.0);
  std::vector<double> dw(w.size(), 0.0);
  const auto xd = x.data();
  const auto wd = w.data();
  const auto gd = dy.data();

  for (std::int64_t n = 0; n < xs.n; ++n) {
    for (std::int64_t oy = 0; oy < win.out_h; ++oy) {
      for (std::int64_t ox = 0; ox < win.out_w; ++ox) {
        const double* g = gd.data() + ys.index(n, oy, ox, 0);
        for (std::int64_t i = 0; i < k; ++i) {
          const std::int64_t iy = oy * s - win.pad_top + i * d;
          if (iy < 0 || iy >= xs.h) continue;
          for (std::int64_t j = 0; j < k; ++j) {
            const std::int64_t ix = ox * s - win.pad_left + j * d;
            if (ix < 0 || ix >= xs.w) continue;
            const std::size_t xoff = xs.index(n, iy, ix, 0);
            const std::size_t woff = static_cast<std::size_t>((i * k + j) * c * m);
            for (std::int64_t z = 0; z < c * m; ++z) {
              dx[xoff + z / m] += wd[woff + z] * g[z];
              dw[woff + z] += xd[xoff + z / m] * g[z];
            }
          }
        }
      }
    }
  }
  return {Tensor(xs, std::move(dx)), Tensor(w.shape(), std::move(dw))};
}

namespace {

void check_pointwise(const Tensor& x, const Tensor& w, std::int64_t groups) {
  const Shape4& ws = w.shape();
  const std::int64_t c_in = x.shape().c;
  if (groups < 1) throw ShapeError("pointwise groups must be >= 1");
  if (ws.n != 1 || ws.h != 1) {
    throw ShapeError("pointwise kernel must be 1x1, got " + ws.str());
  }
  if (c_in % groups != 0 || ws.c % groups != 0) {
    throw ShapeError("pointwise channels " + std::to_string(c_in) + "->" +
                     std::to_string(ws.c) + " not divisible by groups " +
                     std::to_string(groups));
  }
  if (ws.w != c_in / groups) {
    throw ShapeError("pointwise kernel input extent " + std::to_string(ws.w) +
                     " != " + std::to_string(c_in / groups));
  }
}

}  // namespace

Tensor pointwise_forward(const Tensor& x, const Tensor& w, std::int64_t groups) {
  check_pointwise(x, w, groups);
  const Shape4& xs = x.shape();
  const std::int64_t c_out = w.shape().c;
  const std::int64_t cin_g = xs.c / groups, cout_g = c_out / groups;
  const Shape4 ys{xs.n, xs.h, xs.w, c_out};
  std::vector<double> y(ys.elements(), 0.0);
  const auto xd = x.data();
  const auto wd = w.data();
  const std::int64_t pixels = xs.n * xs.h * xs.w;
  for (std::int64_t p = 0; p < pixels; ++p) {
    const double* xp = xd.data() + p * xs.c;
    double* out = y.data() + p * c_out;
    for (std::int64_t g = 0; g < groups; ++g) {
      for (std::int64_t ci = 0; ci < cin_g; ++ci) {
        const double xv = xp[g * cin_g + ci];
        const double* wr = wd.data() + ci * c_out + g * cout_g;
        double* o = out + g * cout_g;
        for (std::int64_t co = 0; co < cout_g; ++co) o[co] += xv * wr[co];
      }
    }
  }
  return Tensor(ys, std::move(y));
}

ConvGrads pointwise_backward(const Tensor& x, const Tensor& w,
                             std::int64_t groups, const Tensor& dy) {
  check_pointwise(x, w, groups);
  const Shape4& xs = x.shape();
  const std::int64_t c_out = w.shape().c;
  const std::int64_t cin_g = xs.c / groups, cout_g = c_out / groups;
  check_grad_shape(dy, Shape4{xs.n, xs.h, xs.w, c_out});
  std::vector<double> dx(xs.elements(), 0.0);
  std::vector<double> dw(w.size(), 0.0);
  const auto xd = x.data();
  const auto wd = w.data();
  const auto gd = dy.data();
  const std::int64_t pixels = xs.n * xs.h * xs.w;
  for (std::int64_t p = 0; p < pixels; ++p) {
    const double* xp = xd.data() + p * xs.c;
    const double* gp = gd.data() + p * c_out;
    double* dxp = dx.data() + p * xs.c;
    for (std::int64_t g = 0; g < groups; ++g) {
      for (std::int64_t ci = 0; ci < cin_g; ++ci) {
        const double xv = xp[g * cin_g + ci];
        const std::int64_t row = ci * c_out + g * cout_g;
        double acc = 0.0;
        for (std::int64_t co = 0; co < cout_g; ++co) {
          const double gv = gp[g * cout_g + co];
          acc += wd[row + co] * gv;
          dw[row + co] += xv * gv;
        }
        dxp[g * cin_g + ci] += acc;
      }
    }
  }
  return {Tensor(xs, std::move(dx)), Tensor(w.shape(), std::move(dw))};
}

namespace {

void check_conv2d(const Tensor& x, const Tensor& w, const ConvGeom& geom) {
  ConvGeom g = geom;
  g.multiplier = 1;
  g.validate();
  const Shape4& ws = w.shape();
  if (ws.n != geom.kernel || ws.h != geom.kernel || ws.w != x.shape().c) {
    throw ShapeError("conv kernel " + ws.str() + " incompatible with input " +
                     x.shape().str() + " and kernel size " +
                     std::to_string(geom.kernel));
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const ConvGeom& geom) {
  check_conv2d(x, w, geom);
  const Shape4& xs = x.shape();
  const std::int64_t k = geom.kernel, d = geom.dilation, s = geom.stride;
  const std::int64_t c_in = xs.c, c_out = w.shape().c;
  const Window win = window_for(xs, geom);
  const Shape4 ys{xs.n, win.out_h, win.out_w, c_out};
  std::vector<double> y(ys.elements(), 0.0);
  const auto xd = x.data();
  const auto wd = w.data();
  for (std::int64_t n = 0; n < xs.n; ++n) {
    for (std::int64_t oy = 0; oy < win.out_h; ++oy) {
      for (std::int64_t ox = 0; ox < win.out_w; ++ox) {
        double* out = y.data() + ys.index(n, oy, ox, 0);
        for (std::int64_t i = 0; i < k; ++i) {
          const std::int64_t iy = oy * s - win.pad_top + i * d;
          if (iy < 0 || iy >= xs.h) continue;
          for (std::int64_t j = 0; j < k; ++j) {
            const std::int64_t ix = ox * s - win.pad_left + j * d;
            if (ix < 0 || ix >= xs.w) continue;
            const double* xp = xd.data() + xs.index(n, iy, ix, 0);
            for (std::int64_t ci = 0; ci < c_in; ++ci) {
              const double* wr = wd.data() + ((i * k + j) * c_in + ci) * c_out;
              for (std::int64_t co = 0; co < c_out; ++co) out[co] += xp[ci] * wr[co];
            }
          }
        }
      }
    }
  }
  return Tensor(ys, std::move(y));
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& w,
                          const ConvGeom& geom, const Tensor& dy) {
  check_conv2d(x, w, geom);
  const Shape4& xs = x.shape();
  const std::int64_t k = geom.kernel, d = geom.dilation, s = geom.stride;
  const std::int64_t c_in = xs.c, c_out = w.shape().c;
  const Window win = window_for(xs, geom);
  const Shape4 ys{xs.n, win.out_h, win.out_w, c_out};
  check_grad_shape(dy, ys);
  std::vector<double> dx(xs.elements(), 0.0);
  std::vector<double> dw(w.size(), 0.0);
  const auto xd = x.data();
  const auto wd = w.data();
  const auto gd = dy.data();
  for (std::int64_t n = 0; n < xs.n; ++n) {
    for (std::int64_t oy = 0; oy < win.out_h; ++oy) {
      for (std::int64_t ox = 0; ox < win.out_w; ++ox) {
        const double* g = gd.data() + ys.index(n, oy, ox, 0);
        for (std::int64_t i = 0; i < k; ++i) {
          const std::int64_t iy = oy * s - win.pad_top + i * d;
          if (iy < 0 || iy >= xs.h) continue;
          for (std::int64_t j = 0; j < k; ++j) {
            const std::int64_t ix = ox * s - win.pad_left + j * d;
            if (ix < 0 || ix >= xs.w) continue;
            const std::size_t xoff = xs.index(n, iy, ix, 0);
            for (std::int64_t ci = 0; ci < c_in; ++ci) {
              const std::int64_t row = ((i * k + j) * c_in + ci) * c_out;
              double acc = 0.0;
              for (std::int64_t co = 0; co < c_out; ++co) {
                acc += wd[row + co] * g[co];
                dw[row + co] += xd[xoff + ci] * g[co];
              }
              dx[xoff + ci] += acc;
            }
          }
        }
      }
    }
  }
  return {Tensor(xs, std::move(dx)), Tensor(w.shape(), std::move(dw))};
}

}  // namespace mixconv
