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

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mixconv/error.hpp"

namespace mixconv {

/// Extents of a 4-D tensor in batch, height, width, channel order.
struct Shape4 {
  std::int64_t n = 1;
  std::int64_t h = 1;
  std::int64_t w = 1;
  std::int64_t c = 1;

  /// Throws SizeError unless all extents are positive and the element count
  /// fits in std::size_t.
  void validate() const;
  std::size_t elements() const;
  std::size_t index(std::int64_t in, std::int64_t y, std::int64_t x,
                    std::int64_t z) const {
    return static_cast<std::size_t>(((in * h + y) * w + x) * c + z);
  }
  std::string str() const;

  friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// Seeded 64-bit generator. Bits come from std::mt19937_64, whose output
/// sequence is fixed by the standard; uniform and normal variates are derived
/// here (53-bit mantissa mapping, Box-Muller) so the doubles are identical
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal(double mean = 0.0, double stddev = 1.0);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct Fill {
  enum class Kind { kZeros, kOnes, kConstant, kNormal };
  Kind kind = Kind::kZeros;
  double value = 0.0;
  double mean = 0.0;
  double stddev = 1.0;
  std::uint64_t seed = 0;

  static Fill zeros() { return {}; }
  static Fill ones() { return {Kind::kOnes}; }
  static Fill constant(double v) { return {Kind::kConstant, v}; }
  static Fill normal(double mean, double stddev, std::uint64_t seed) {
    return {Kind::kNormal, 0.0, mean, stddev, seed};
  }
};

/// Dense NHWC tensor of doubles. Immutable once constructed; every operation
/// returns a new tensor.
class Tensor {
 public:
  Tensor() : Tensor(Shape4{}, Fill::zeros()) {}
  Tensor(Shape4 shape, Fill fill);
  /// Takes ownership of `data`; its length must equal shape.elements().
  Tensor(Shape4 shape, std::vector<double> data);

  const Shape4& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::int64_t n, std::int64_t y, std::int64_t x,
            std::int64_t z) const {
    return data_[shape_.index(n, y, x, z)];
  }

  /// Copy of the underlying buffer, for building a modified tensor.
  std::vector<double> to_vector() const { return data_; }

 private:
  Shape4 shape_;
  std::vector<double> data_;
};

Tensor tensor_new(Shape4 shape, Fill fill);

/// Channels [lo, hi) of `x`.
Tensor tensor_slice_channels(const Tensor& x, std::int64_t lo, std::int64_t hi);

/// Concatenates along the channel axis, left to right.
Tensor tensor_concat_channels(std::span<const Tensor> parts);

double tensor_max_abs_diff(const Tensor& a, const Tensor& b);

// Elementwise helpers used throughout the layers and tests.
Tensor tensor_add(const Tensor& a, const Tensor& b);
Tensor tensor_scale(const Tensor& a, double alpha);
/// Sum of elementwise products, accumulated in flat index order.
double tensor_dot(const Tensor& a, const Tensor& b);
double tensor_sum(const Tensor& a);

/// Fills a tensor of the given shape from `rng` (standard normal), advancing
/// the generator.
Tensor tensor_randn(Shape4 shape, Rng& rng, double stddev = 1.0);

}  // namespace mixconv
