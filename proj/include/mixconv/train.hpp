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
#include <string>
#include <string_view>
#include <vector>

#include "mixconv/model_zoo.hpp"
#include "mixconv/network.hpp"
#include "mixconv/tensor.hpp"

namespace mixconv {

/// Oriented two-frequency textures: image i has label i % classes, and class
/// c is a sinusoid pair (periods 8 px and 3 px) along direction c * pi /
/// classes with random amplitudes, phases and per-channel gains, plus
/// Gaussian noise.
struct SyntheticDataset {
  Tensor images;  // (N, side, side, 3)
  std::vector<std::int64_t> labels;
  std::int64_t classes = 3;

  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
  Tensor gather(std::span<const std::int64_t> indices) const;
  std::vector<std::int64_t> gather_labels(std::span<const std::int64_t> indices) const;
};

SyntheticDataset make_synthetic_dataset(std::int64_t samples, std::int64_t classes,
                                        std::uint64_t seed, std::int64_t side = 16);

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::int64_t batch_size = 32;
  std::int64_t steps = 2000;
  std::uint64_t seed = 1;
  std::int64_t samples = 600;
  std::int64_t resolution = 16;
  std::int64_t log_every = 10;
  ModelConfig model;
};

/// The model JSON schema with an extra "train" object holding any of
/// learning_rate, momentum, batch_size, steps, seed, samples, resolution,
/// log_every.
TrainConfig parse_train_config(std::string_view text);
std::string serialize_train_config(const TrainConfig& config);

/// Three MixConv {3x3, 5x5} inverted-residual blocks on 16x16x3 inputs with a
/// 3-way classifier; SGD with momentum 0.9, lr 0.05, batch 32, 2000 steps.
TrainConfig toy_train_config();

/// Weights ~ normal(0, sqrt(2 / fan_in)) drawn in layout order, biases and
/// BN beta 0, BN gamma 1, fresh running statistics.
NetworkParams init_params(const ModelConfig& config, std::uint64_t seed);

struct LogEntry {
  std::int64_t step = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Entries every `log_every` steps carry the mini-batch loss and accuracy.
/// The last entry (step == steps) holds loss and accuracy over the whole
/// training set with BN running statistics.
struct RunLog {
  std::vector<LogEntry> entries;
  double final_accuracy() const { return entries.empty() ? 0.0 : entries.back().accuracy; }
};

/// Throws TrainingDivergedError on a non-finite loss.
RunLog train(const TrainConfig& config);

/// `step,loss,accuracy` with a header row.
std::string run_log_csv(const RunLog& log);
nlohmann::json run_log_json(const RunLog& log);

// ---------------------------------------------------------------------------
// Gradient checks

/// |a - f| / max(|a|, |f|, 1e-8).
double relative_error(double analytic, double numeric);

struct GradcheckReport {
  std::string op;
  std::int64_t trials = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_rel_error < tolerance; }
};

/// Registered differentiable ops: conv2d, depthwise, pointwise, mixconv,
/// batchnorm, se, dense, loss, swish, inverted_residual.
std::vector<std::string> gradcheck_ops();

/// Compares analytic gradients of every input against central differences
/// (step 1e-5) of L = <r, op(inputs)> for a random r (the loss op is checked
/// on its scalar value directly). Shapes and values are drawn from `seed`.
/// Throws LookupError for unregistered ops.
GradcheckReport gradcheck(const std::string& op, std::int64_t trials,
                          std::uint64_t seed);

}  // namespace mixconv
