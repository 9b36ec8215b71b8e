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

#include "mixconv/tape.hpp"

namespace mixconv {

Var Tape::input(Tensor value) {
  nodes_.push_back(Node{std::move(value), std::nullopt, nullptr, {}, false});
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(std::string name, Tensor value) {
  nodes_.push_back(
      Node{std::move(value), std::nullopt, nullptr, std::move(name), true});
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, Adjoint adjoint) {
  nodes_.push_back(
      Node{std::move(value), std::nullopt, std::move(adjoint), {}, false});
  return Var{nodes_.size() - 1};
}

Tensor Tape::grad(Var v) const {
  const Node& node = nodes_.at(v.id);
  if (node.grad) return *node.grad;
  return Tensor(node.value.shape(), Fill::zeros());
}

void Tape::accumulate(Var v, const Tensor& g) {
  Node& node = nodes_.at(v.id);
  if (g.shape() != node.value.shape()) {
    throw ShapeError("gradient " + g.shape().str() + " for value " +
                     node.value.shape().str());
  }
  node.grad = node.grad ? tensor_add(*node.grad, g) : g;
}

void Tape::backward(Var out, const Tensor& seed) {
  for (auto& node : nodes_) node.grad.reset();
  accumulate(out, seed);
  for (std::size_t i = out.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.adjoint || !node.grad) continue;
    const Tensor dy = *node.grad;
    node.adjoint(dy, *this);
  }
}

void Tape::backward(Var out) {
  backward(out, Tensor(value(out).shape(), Fill::ones()));
}

std::vector<std::pair<std::string, Var>> Tape::parameters() const {
  std::vector<std::pair<std::string, Var>> params;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_parameter) params.emplace_back(nodes_[i].name, Var{i});
  }
  return params;
}

}  // namespace mixconv
