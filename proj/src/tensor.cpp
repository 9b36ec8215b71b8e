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

#include "mixconv/tensor.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mixconv {

void Shape4::validate() const {
  if (n < 1 || h < 1 || w < 1 || c < 1) {
    throw SizeError("tensor extents must be positive, got " + str());
  }
  constexpr auto kMax = std::numeric_limits<std::size_t>::max() / sizeof(double);
  std::size_t total = 1;
  for (auto e : {n, h, w, c}) {
    const auto u = static_cast<std::size_t>(e);
    if (total > kMax / u) {
      throw SizeError("element count overflows for shape " + str());
    }
    total *= u;
  }
}

std::size_t Shape4::elements() const {
  return static_cast<std::size_t>(n) * static_cast<std::size_t>(h) *
         static_cast<std::size_t>(w) * static_cast<std::size_t>(c);
}

std::string Shape4::str() const {
  std::ostringstream os;
  os << "(" << n << "," << h << "," << w << "," << c << ")";
  return os.str();
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(engine_() % span);
}

double Rng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return mean + stddev * r * std::cos(theta);
}

Tensor::Tensor(Shape4 shape, Fill fill) : shape_(shape) {
  shape_.validate();
  const std::size_t count = shape_.elements();
  switch (fill.kind) {
    case Fill::Kind::kZeros:
      data_.assign(count, 0.0);
      break;
    case Fill::Kind::kOnes:
      data_.assign(count, 1.0);
      break;
    case Fill::Kind::kConstant:
      data_.assign(count, fill.value);
      break;
    case Fill::Kind::kNormal: {
      Rng rng(fill.seed);
      data_.resize(count);
      for (auto& v : data_) v = rng.normal(fill.mean, fill.stddev);
      break;
    }
  }
}

Tensor::Tensor(Shape4 shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  shape_.validate();
  if (data_.size() != shape_.elements()) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

Tensor tensor_new(Shape4 shape, Fill fill) { return Tensor(shape, fill); }

Tensor tensor_slice_channels(const Tensor& x, std::int64_t lo, std::int64_t hi) {
  const Shape4& s = x.shape();
  if (lo < 0 || hi > s.c || lo >= hi) {
    throw BoundsError("channel slice [" + std::to_string(lo) + "," +
                      std::to_string(hi) + ") invalid for " + s.str());
  }
  const Shape4 out{s.n, s.h, s.w, hi - lo};
  std::vector<double> data;
  data.reserve(out.elements());
  const auto src = x.data();
  const std::size_t pixels = static_cast<std::size_t>(s.n * s.h * s.w);
  for (std::size_t p = 0; p < pixels; ++p) {
    const auto base = p * static_cast<std::size_t>(s.c);
    data.insert(data.end(), src.begin() + static_cast<std::ptrdiff_t>(base + lo),
                src.begin() + static_cast<std::ptrdiff_t>(base + hi));
  }
  return Tensor(out, std::move(data));
}

Tensor tensor_concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat of an empty list");
  const Shape4& first = parts.front().shape();
  std::int64_t channels = 0;
  for (const auto& p : parts) {
    const Shape4& s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ShapeError("concat spatial mismatch: " + first.str() + " vs " +
                       s.str());
    }
    channels += s.c;
  }
  const Shape4 out{first.n, first.h, first.w, channels};
  std::vector<double> data;
  data.reserve(out.elements());
  const std::size_t pixels =
      static_cast<std::size_t>(first.n * first.h * first.w);
  for (std::size_t p = 0; p < pixels; ++p) {
    for (const auto& part : parts) {
      const auto c = static_cast<std::size_t>(part.shape().c);
      const auto src = part.data().subspan(p * c, c);
      data.insert(data.end(), src.begin(), src.end());
    }
  }
  return Tensor(out, std::move(data));
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() +
                     " vs " + b.shape().str());
  }
}

}  // namespace

double tensor_max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

Tensor tensor_add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return Tensor(a.shape(), std::move(out));
}

Tensor tensor_scale(const Tensor& a, double alpha) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * a[i];
  return Tensor(a.shape(), std::move(out));
}

double tensor_dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double tensor_sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return acc;
}

Tensor tensor_randn(Shape4 shape, Rng& rng, double stddev) {
  shape.validate();
  std::vector<double> data(shape.elements());
  for (auto& v : data) v = rng.normal(0.0, stddev);
  return Tensor(shape, std::move(data));
}

}  // namespace mixconv
