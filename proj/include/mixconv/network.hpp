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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mixconv/model_zoo.hpp"
#include "mixconv/nn.hpp"
#include "mixconv/tape.hpp"

namespace mixconv {

enum class ParamRole { kWeight, kBias, kGamma, kBeta };

struct ParamDecl {
  std::string name;
  Shape4 shape;
  ParamRole role = ParamRole::kWeight;
  std::int64_t fan_in = 1;  // weights only
};

/// Trainable tensors of `config` in execution order.
std::vector<ParamDecl> param_layout(const ModelConfig& config);

/// Names of the batch-norm layers of `config` in execution order; each owns
/// `<name>.gamma` and `<name>.beta`.
std::vector<std::pair<std::string, std::int64_t>> batchnorm_layout(
    const ModelConfig& config);

struct NetworkParams {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, RunningStats> stats;

  std::int64_t trainable_count() const;
};

/// Records the forward pass of `config` on `tape`. Parameters are registered
/// as tape parameters under their layout names and returned in `vars`.
Var network_forward(Tape& tape, const ModelConfig& config, NetworkParams& params,
                    Var images, BatchNormMode mode,
                    std::map<std::string, Var>* vars = nullptr);

/// Logits for `images` without keeping the tape.
Tensor network_logits(const ModelConfig& config, NetworkParams& params,
                      const Tensor& images, BatchNormMode mode);

}  // namespace mixconv
