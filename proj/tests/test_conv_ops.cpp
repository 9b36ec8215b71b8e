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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mixconv/oracle.hpp"
#include "reference.hpp"

namespace mixconv {
namespace {

using testing::half_sq_norm;
using testing::max_relative_error;
using testing::numeric_gradient;

ConvGeom geom(std::int64_t k, std::int64_t s = 1, std::int64_t d = 1, std::int64_t m = 1,
              Padding p = Padding::kSame) {
  return ConvGeom{k, s, d, p, m};
}

TEST(PadCompute, SameExamples) {
  PadResult r = pad_compute(7, geom(3));
  EXPECT_EQ(r.out_extent, 7);
  EXPECT_EQ(r.pad.top, 1);
  EXPECT_EQ(r.pad.bottom, 1);

  r = pad_compute(7, geom(3, 2));
  EXPECT_EQ(r.out_extent, 4);
  EXPECT_EQ(r.pad.top + r.pad.bottom, 2);
  EXPECT_EQ(r.pad.top, 1);

  r = pad_compute(5, geom(3, 1, 4));
  EXPECT_EQ(r.out_extent, 5);
  EXPECT_EQ(r.pad.top, 4);
  EXPECT_EQ(r.pad.bottom, 4);
}

TEST(PadCompute, OddTotalGoesAfter) {
  // in 8, k 3, s 2: out 4, total (4-1)*2+3-8 = 1.
  const PadResult r = pad_compute(8, geom(3, 2));
  EXPECT_EQ(r.out_extent, 4);
  EXPECT_EQ(r.pad.top, 0);
  EXPECT_EQ(r.pad.bottom, 1);
}

TEST(PadCompute, SameLawOverManyGeometries) {
  for (std::int64_t in = 1; in <= 20; ++in)
    for (std::int64_t k : {1, 3, 5, 7})
      for (std::int64_t s : {1, 2})
        for (std::int64_t d : {1, 2, 3}) {
          if (d > 1 && s == 2) continue;
          const ConvGeom g = geom(k, s, d);
          const PadResult r = pad_compute(in, g);
          const std::int64_t out = (in + s - 1) / s;
          const std::int64_t total = std::max<std::int64_t>((out - 1) * s + g.effective_kernel() - in, 0);
          EXPECT_EQ(r.out_extent, out);
          EXPECT_EQ(r.pad.top, total / 2);
          EXPECT_EQ(r.pad.top + r.pad.bottom, total);
          EXPECT_EQ(r.pad, (PadAmounts{r.pad.top, r.pad.bottom, r.pad.top, r.pad.bottom}));
        }
}

TEST(PadCompute, Valid) {
  const PadResult r = pad_compute(7, geom(3, 2, 1, 1, Padding::kValid));
  EXPECT_EQ(r.out_extent, 3);
  EXPECT_EQ(r.pad, PadAmounts{});
  EXPECT_THROW(pad_compute(4, geom(3, 1, 2, 1, Padding::kValid)), GeometryError);
}

TEST(ConvGeom, Validation) {
  EXPECT_THROW(geom(4).validate(), GeometryError);
  EXPECT_THROW(geom(0).validate(), GeometryError);
  EXPECT_THROW(geom(3, 3).validate(), GeometryError);
  EXPECT_THROW(geom(3, 1, 0).validate(), GeometryError);
  EXPECT_THROW(geom(3, 2, 2).validate(), GeometryError);
  EXPECT_THROW(geom(3, 1, 1, 0).validate(), GeometryError);
  EXPECT_NO_THROW(geom(3, 1, 4).validate());
  EXPECT_EQ(geom(3, 1, 4).effective_kernel(), 9);
}

TEST(DepthwiseForward, OnesCountInBoundsTaps) {
  const Tensor x({1, 3, 3, 1}, Fill::ones());
  const Tensor w({3, 3, 1, 1}, Fill::ones());
  EXPECT_EQ(depthwise_forward(x, w, geom(3)).to_vector(),
            (std::vector<double>{4, 6, 4, 6, 9, 6, 4, 6, 4}));
}

TEST(DepthwiseForward, OneByOneIsScaling) {
  const Tensor x = tensor_new({2, 3, 4, 3}, Fill::normal(0, 1, 5));
  const Tensor w({1, 1, 3, 1}, Fill::constant(2.0));
  EXPECT_EQ(tensor_max_abs_diff(depthwise_forward(x, w, geom(1)), tensor_scale(x, 2.0)), 0.0);
}

TEST(DepthwiseForward, MatchesNaiveLoopsExactly) {
  Rng rng(7);
  const Tensor x = tensor_randn({1, 5, 5, 3}, rng);
  const Tensor w = tensor_randn({3, 3, 3, 2}, rng);
  const ConvGeom g = geom(3, 1, 1, 2);
  const Tensor y = depthwise_forward(x, w, g);
  EXPECT_EQ(y.shape(), (Shape4{1, 5, 5, 6}));
  EXPECT_EQ(tensor_max_abs_diff(y, testing::reference_depthwise(x, w, g)), 0.0);
  EXPECT_EQ(tensor_max_abs_diff(y, oracle::naive_depthwise(x, w, g).y), 0.0);
}

TEST(DepthwiseForward, MatchesNaiveLoopsOverRandomGeometries) {
  Rng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const std::int64_t s = rng.uniform_int(1, 2);
    const ConvGeom g = geom(2 * rng.uniform_int(0, 3) + 1, s, s == 1 ? rng.uniform_int(1, 3) : 1,
                            rng.uniform_int(1, 3));
    const Tensor x = tensor_randn({rng.uniform_int(1, 2), rng.uniform_int(1, 9),
                                   rng.uniform_int(1, 9), rng.uniform_int(1, 4)},
                                  rng);
    const Tensor w = tensor_randn({g.kernel, g.kernel, x.shape().c, g.multiplier}, rng);
    EXPECT_EQ(tensor_max_abs_diff(depthwise_forward(x, w, g),
                                  testing::reference_depthwise(x, w, g)),
              0.0);
  }
}

TEST(DepthwiseForward, Errors) {
  const Tensor x({1, 4, 4, 2}, Fill::ones());
  EXPECT_THROW(depthwise_forward(x, Tensor({3, 3, 3, 1}, Fill::ones()), geom(3)), ShapeError);
  EXPECT_THROW(depthwise_forward(x, Tensor({3, 3, 2, 1}, Fill::ones()), geom(5)), ShapeError);
  EXPECT_THROW(depthwise_forward(x, Tensor({3, 3, 2, 1}, Fill::ones()), geom(3, 2, 2)),
               GeometryError);
}

TEST(DepthwiseForward, ShapeLawAndLinearity) {
  Rng rng(4);
  const ConvGeom g = geom(5, 1, 1, 2);
  const Tensor a = tensor_randn({2, 6, 7, 3}, rng);
  const Tensor b = tensor_randn({2, 6, 7, 3}, rng);
  const Tensor w = tensor_randn({5, 5, 3, 2}, rng);
  const Tensor ya = depthwise_forward(a, w, g);
  EXPECT_EQ(ya.shape(), (Shape4{2, 6, 7, 6}));
  const Tensor sum = depthwise_forward(tensor_add(a, b), w, g);
  EXPECT_LT(tensor_max_abs_diff(sum, tensor_add(ya, depthwise_forward(b, w, g))), 1e-12);
  EXPECT_LT(tensor_max_abs_diff(depthwise_forward(tensor_scale(a, 0.5), w, g),
                                tensor_scale(ya, 0.5)),
            1e-15);
}

TEST(DepthwiseBackward, ZeroAndScalarCases) {
  Rng rng(8);
  const Tensor x = tensor_randn({1, 4, 4, 2}, rng);
  const Tensor w = tensor_randn({3, 3, 2, 1}, rng);
  ConvGrads g0 = depthwise_backward(x, w, geom(3), Tensor({1, 4, 4, 2}, Fill::zeros()));
  EXPECT_EQ(tensor_max_abs_diff(g0.dx, Tensor(x.shape(), Fill::zeros())), 0.0);
  EXPECT_EQ(tensor_max_abs_diff(g0.dw, Tensor(w.shape(), Fill::zeros())), 0.0);

  const Tensor x1 = tensor_randn({1, 3, 3, 1}, rng);
  const Tensor dy = tensor_randn({1, 3, 3, 1}, rng);
  ConvGrads g1 = depthwise_backward(x1, Tensor({1, 1, 1, 1}, Fill::constant(2.0)), geom(1), dy);
  EXPECT_EQ(tensor_max_abs_diff(g1.dx, tensor_scale(dy, 2.0)), 0.0);
  EXPECT_NEAR(g1.dw[0], tensor_dot(x1, dy), 1e-14);
}

TEST(DepthwiseBackward, FiniteDifferencesOfHalfSquaredNorm) {
  Rng rng(12);
  for (int trial = 0; trial < 8; ++trial) {
    const std::int64_t s = rng.uniform_int(1, 2);
    const ConvGeom g = geom(2 * rng.uniform_int(0, 2) + 1, s, s == 1 ? rng.uniform_int(1, 2) : 1,
                            rng.uniform_int(1, 2));
    const Tensor x = tensor_randn({1, rng.uniform_int(3, 5), rng.uniform_int(3, 5), 2}, rng);
    const Tensor w = tensor_randn({g.kernel, g.kernel, 2, g.multiplier}, rng);
    const Tensor y = depthwise_forward(x, w, g);
    const ConvGrads grads = depthwise_backward(x, w, g, y);
    const Tensor ndx = numeric_gradient(
        [&](const Tensor& v) { return half_sq_norm(depthwise_forward(v, w, g)); }, x);
    const Tensor ndw = numeric_gradient(
        [&](const Tensor& v) { return half_sq_norm(depthwise_forward(x, v, g)); }, w);
    EXPECT_LT(max_relative_error(grads.dx, ndx), 1e-4);
    EXPECT_LT(max_relative_error(grads.dw, ndw), 1e-4);
  }
}

// <forward(x, w), dy> = <x, dx> = <w, dw> since the map is bilinear.
TEST(DepthwiseBackward, AdjointDotProduct) {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const std::int64_t s = rng.uniform_int(1, 2);
    const ConvGeom g = geom(2 * rng.uniform_int(0, 3) + 1, s, s == 1 ? rng.uniform_int(1, 3) : 1,
                            rng.uniform_int(1, 2));
    const Tensor x = tensor_randn({2, rng.uniform_int(2, 8), rng.uniform_int(2, 8), 3}, rng);
    const Tensor w = tensor_randn({g.kernel, g.kernel, 3, g.multiplier}, rng);
    const Tensor y = depthwise_forward(x, w, g);
    const Tensor dy = tensor_randn(y.shape(), rng);
    const ConvGrads grads = depthwise_backward(x, w, g, dy);
    const double lhs = tensor_dot(y, dy);
    const double scale = std::max(1.0, std::abs(lhs));
    EXPECT_LT(std::abs(lhs - tensor_dot(x, grads.dx)) / scale, 1e-10);
    EXPECT_LT(std::abs(lhs - tensor_dot(w, grads.dw)) / scale, 1e-10);
  }
}

TEST(PointwiseForward, DotProductAndGroups) {
  const Tensor x(Shape4{1, 1, 1, 2}, std::vector<double>{3, 4});
  const Tensor w(Shape4{1, 1, 2, 1}, std::vector<double>{1, 1});
  EXPECT_EQ(pointwise_forward(x, w, 1)[0], 7.0);

  // groups = 2 equals two independent 2 -> 2 convolutions.
  Rng rng(2);
  const Tensor x4 = tensor_randn({1, 3, 3, 4}, rng);
  const Tensor w4 = tensor_randn({1, 1, 2, 4}, rng);
  const Tensor y = pointwise_forward(x4, w4, 2);
  const Tensor lo = pointwise_forward(tensor_slice_channels(x4, 0, 2),
                                      Tensor({1, 1, 2, 2}, std::vector<double>{w4[0], w4[1], w4[4], w4[5]}), 1);
  const Tensor hi = pointwise_forward(tensor_slice_channels(x4, 2, 4),
                                      Tensor({1, 1, 2, 2}, std::vector<double>{w4[2], w4[3], w4[6], w4[7]}), 1);
  EXPECT_EQ(tensor_max_abs_diff(y, tensor_concat_channels(std::vector<Tensor>{lo, hi})), 0.0);
}

TEST(PointwiseForward, MatchesMatmulPerPixel) {
  Rng rng(3);
  const Tensor x = tensor_randn({1, 4, 4, 8}, rng);
  const Tensor w = tensor_randn({1, 1, 8, 16}, rng);
  const Tensor y = pointwise_forward(x, w, 1);
  EXPECT_EQ(y.shape(), (Shape4{1, 4, 4, 16}));
  EXPECT_EQ(tensor_max_abs_diff(y, testing::reference_pointwise(x, w, 1)), 0.0);
  const Tensor w2 = tensor_randn({1, 1, 4, 16}, rng);
  EXPECT_EQ(tensor_max_abs_diff(pointwise_forward(x, w2, 2),
                                testing::reference_pointwise(x, w2, 2)),
            0.0);
}

TEST(PointwiseForward, IndivisibleChannels) {
  const Tensor x({1, 2, 2, 3}, Fill::ones());
  EXPECT_THROW(pointwise_forward(x, Tensor({1, 1, 1, 4}, Fill::ones()), 2), ShapeError);
  EXPECT_THROW(pointwise_forward(Tensor({1, 2, 2, 4}, Fill::ones()),
                                 Tensor({1, 1, 2, 3}, Fill::ones()), 2),
               ShapeError);
}

TEST(PointwiseBackward, ZeroIdentityAndFiniteDifferences) {
  Rng rng(6);
  const Tensor x = tensor_randn({2, 3, 3, 4}, rng);
  const Tensor dy = tensor_randn({2, 3, 3, 4}, rng);
  std::vector<double> eye(16, 0.0);
  for (int i = 0; i < 4; ++i) eye[static_cast<std::size_t>(i * 4 + i)] = 1.0;
  const Tensor identity({1, 1, 4, 4}, eye);
  EXPECT_EQ(tensor_max_abs_diff(pointwise_backward(x, identity, 1, dy).dx, dy), 0.0);
  const ConvGrads zero = pointwise_backward(x, identity, 1, Tensor(dy.shape(), Fill::zeros()));
  EXPECT_EQ(tensor_sum(zero.dw), 0.0);
  EXPECT_EQ(tensor_sum(zero.dx), 0.0);

  for (std::int64_t groups : {1, 2}) {
    const Tensor w = tensor_randn({1, 1, 4 / groups, 6}, rng);
    const ConvGrads g = pointwise_backward(x, w, groups, pointwise_forward(x, w, groups));
    EXPECT_LT(max_relative_error(
                  g.dx, numeric_gradient([&](const Tensor& v) {
                    return half_sq_norm(pointwise_forward(v, w, groups));
                  }, x)),
              1e-4);
    EXPECT_LT(max_relative_error(
                  g.dw, numeric_gradient([&](const Tensor& v) {
                    return half_sq_norm(pointwise_forward(x, v, groups));
                  }, w)),
              1e-4);
  }
}

TEST(PointwiseBackward, AdjointDotProduct) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t groups = rng.uniform_int(1, 2);
    const Tensor x = tensor_randn({2, 3, 2, groups * rng.uniform_int(1, 4)}, rng);
    const Tensor w = tensor_randn({1, 1, x.shape().c / groups, groups * rng.uniform_int(1, 4)}, rng);
    const Tensor y = pointwise_forward(x, w, groups);
    const Tensor dy = tensor_randn(y.shape(), rng);
    const ConvGrads g = pointwise_backward(x, w, groups, dy);
    const double lhs = tensor_dot(y, dy);
    const double scale = std::max(1.0, std::abs(lhs));
    EXPECT_LT(std::abs(lhs - tensor_dot(x, g.dx)) / scale, 1e-10);
    EXPECT_LT(std::abs(lhs - tensor_dot(w, g.dw)) / scale, 1e-10);
  }
}

TEST(Conv2d, MatchesReferenceAndAdjoint) {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const ConvGeom g = geom(2 * rng.uniform_int(0, 2) + 1, rng.uniform_int(1, 2));
    const Tensor x = tensor_randn({rng.uniform_int(1, 2), rng.uniform_int(3, 8),
                                   rng.uniform_int(3, 8), rng.uniform_int(1, 3)},
                                  rng);
    const Tensor w = tensor_randn({g.kernel, g.kernel, x.shape().c, rng.uniform_int(1, 4)}, rng);
    const Tensor y = conv2d_forward(x, w, g);
    EXPECT_LT(tensor_max_abs_diff(y, testing::reference_conv2d(x, w, g)), 1e-12);
    const Tensor dy = tensor_randn(y.shape(), rng);
    const ConvGrads grads = conv2d_backward(x, w, g, dy);
    const double lhs = tensor_dot(y, dy);
    const double scale = std::max(1.0, std::abs(lhs));
    EXPECT_LT(std::abs(lhs - tensor_dot(x, grads.dx)) / scale, 1e-10);
    EXPECT_LT(std::abs(lhs - tensor_dot(w, grads.dw)) / scale, 1e-10);
  }
}

TEST(NaiveOracle, IterationCountsMatchClosedForm) {
  const Tensor x({1, 56, 56, 32}, Fill::ones());
  const Tensor w({3, 3, 32, 1}, Fill::ones());
  EXPECT_EQ(oracle::naive_depthwise(x, w, geom(3)).iterations, 903168);
  const Tensor pw({1, 1, 16, 8}, Fill::ones());
  EXPECT_EQ(oracle::naive_pointwise(Tensor({1, 5, 5, 32}, Fill::ones()), pw, 2).iterations,
            5 * 5 * 32 * 8 / 2);
}

}  // namespace
}  // namespace mixconv
