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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mixconv/tensor.hpp"

namespace mixconv {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Minimal reverse-mode tape. Ops append nodes in execution order; backward()
/// walks the nodes in exact reverse order and calls each node's adjoint,
/// which pushes gradients into its inputs through accumulate().
///
/// A tape is single-owner and is not safe to share across threads.
class Tape {
 public:
  using Adjoint = std::function<void(const Tensor& dy, Tape& tape)>;

  Var input(Tensor value);
  Var parameter(std::string name, Tensor value);
  Var record(Tensor value, Adjoint adjoint);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient accumulated during the last backward(), zeros if none reached.
  Tensor grad(Var v) const;
  bool has_grad(Var v) const { return nodes_.at(v.id).grad.has_value(); }

  void accumulate(Var v, const Tensor& g);

  /// Clears previous gradients, seeds `out` with `seed` and runs every
  /// recorded adjoint in reverse order.
  void backward(Var out, const Tensor& seed);
  /// Seeds a scalar output with 1.
  void backward(Var out);

  /// Registered parameters in registration order.
  std::vector<std::pair<std::string, Var>> parameters() const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::optional<Tensor> grad;
    Adjoint adjoint;
    std::string name;
    bool is_parameter = false;
  };
  std::vector<Node> nodes_;
};

}  // namespace mixconv
