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

#include "mixconv/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

namespace mixconv {

namespace {

// Decorrelates the streams drawn from one user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Tensor SyntheticDataset::gather(std::span<const std::int64_t> indices) const {
  const Shape4& s = images.shape();
  const auto per_image = static_cast<std::size_t>(s.h * s.w * s.c);
  std::vector<double> data;
  data.reserve(indices.size() * per_image);
  const auto src = images.data();
  for (auto i : indices) {
    const auto begin = src.begin() + static_cast<std::ptrdiff_t>(i * per_image);
    data.insert(data.end(), begin, begin + static_cast<std::ptrdiff_t>(per_image));
  }
  return Tensor(Shape4{static_cast<std::int64_t>(indices.size()), s.h, s.w, s.c},
                std::move(data));
}

std::vector<std::int64_t> SyntheticDataset::gather_labels(
    std::span<const std::int64_t> indices) const {
  std::vector<std::int64_t> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(labels[static_cast<std::size_t>(i)]);
  return out;
}

SyntheticDataset make_synthetic_dataset(std::int64_t samples, std::int64_t classes,
                                        std::uint64_t seed, std::int64_t side) {
  if (samples < 1 || classes < 1 || side < 1) {
    throw ConfigError("dataset needs positive samples, classes and side");
  }
  constexpr double kLowPeriod = 8.0;
  constexpr double kHighPeriod = 3.0;
  constexpr double kNoise = 1.0;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  Rng rng(seed);
  const Shape4 shape{samples, side, side, 3};
  std::vector<double> data(shape.elements());
  SyntheticDataset ds;
  ds.classes = classes;
  for (std::int64_t i = 0; i < samples; ++i) {
    const std::int64_t label = i % classes;
    ds.labels.push_back(label);
    const double theta = std::numbers::pi * static_cast<double>(label) /
                         static_cast<double>(classes);
    const double ct = std::cos(theta), st = std::sin(theta);
    const double amp_lo = 0.5 + 0.5 * rng.uniform();
    const double amp_hi = 0.5 + 0.5 * rng.uniform();
    const double phase_lo = kTwoPi * rng.uniform();
    const double phase_hi = kTwoPi * rng.uniform();
    double gains[3];
    for (double& g : gains) g = 0.5 + rng.uniform();
    for (std::int64_t y = 0; y < side; ++y) {
      for (std::int64_t x = 0; x < side; ++x) {
        const double u = static_cast<double>(x) * ct + static_cast<double>(y) * st;
        const double v = amp_lo * std::sin(kTwoPi * u / kLowPeriod + phase_lo) +
                         amp_hi * std::sin(kTwoPi * u / kHighPeriod + phase_hi);
        for (std::int64_t c = 0; c < 3; ++c) {
          data[shape.index(i, y, x, c)] = gains[c] * v + rng.normal(0.0, kNoise);
        }
      }
    }
  }
  ds.images = Tensor(shape, std::move(data));
  return ds;
}

// ---------------------------------------------------------------------------

TrainConfig parse_train_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("train config is not valid JSON: ") + e.what());
  }
  TrainConfig c;
  c.model = config_from_json(j);
  if (j.contains("train")) {
    try {
      const auto& t = j.at("train");
      c.learning_rate = t.value("learning_rate", c.learning_rate);
      c.momentum = t.value("momentum", c.momentum);
      c.batch_size = t.value("batch_size", c.batch_size);
      c.steps = t.value("steps", c.steps);
      c.seed = t.value("seed", c.seed);
      c.samples = t.value("samples", c.samples);
      c.resolution = t.value("resolution", c.resolution);
      c.log_every = t.value("log_every", c.log_every);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed train section: ") + e.what());
    }
  }
  if (!(c.learning_rate >= 0.0) || !(c.momentum >= 0.0) || c.batch_size < 1 ||
      c.steps < 1 || c.samples < 1 || c.log_every < 1 || c.resolution < 1) {
    throw ConfigError("train settings must be positive");
  }
  return c;
}

std::string serialize_train_config(const TrainConfig& config) {
  nlohmann::json j = config_to_json(config.model);
  j["train"] = {{"learning_rate", config.learning_rate},
                {"momentum", config.momentum},
                {"batch_size", config.batch_size},
                {"steps", config.steps},
                {"seed", config.seed},
                {"samples", config.samples},
                {"resolution", config.resolution},
                {"log_every", config.log_every}};
  return j.dump(2) + "\n";
}

TrainConfig toy_train_config() {
  ModelConfig m;
  m.name = "toy-mixconv";
  m.stem = StemConfig{16, 3, 2, Activation::kRelu};
  BlockConfig b;
  b.kernels = {3, 5};
  b.expansion = 2;
  b.activation = Activation::kSwish;
  b.channels_out = 16;
  b.stride = 1;
  m.blocks.push_back(b);  // 8x8
  b.se_ratio = 0.25;
  m.blocks.push_back(b);
  b.stride = 2;
  b.se_ratio.reset();
  b.channels_out = 24;
  m.blocks.push_back(b);  // 8x8 -> 4x4
  m.head = HeadConfig{0, Activation::kRelu, 3};
  TrainConfig c;
  c.model = m;
  return c;
}

NetworkParams init_params(const ModelConfig& config, std::uint64_t seed) {
  NetworkParams params;
  Rng rng(seed);
  for (const ParamDecl& p : param_layout(config)) {
    switch (p.role) {
      case ParamRole::kWeight:
        params.tensors.emplace(
            p.name,
            tensor_randn(p.shape, rng, std::sqrt(2.0 / static_cast<double>(p.fan_in))));
        break;
      case ParamRole::kGamma:
        params.tensors.emplace(p.name, Tensor(p.shape, Fill::ones()));
        break;
      case ParamRole::kBias:
      case ParamRole::kBeta:
        params.tensors.emplace(p.name, Tensor(p.shape, Fill::zeros()));
        break;
    }
  }
  for (const auto& [name, c] : batchnorm_layout(config)) {
    params.stats.emplace(name, RunningStats::fresh(c));
  }
  return params;
}

namespace {

double accuracy_of(const Tensor& logits, std::span<const std::int64_t> labels) {
  const auto classes = static_cast<std::size_t>(logits.shape().c);
  std::int64_t correct = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const auto row = logits.data().subspan(n * classes, classes);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == labels[n]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

void shuffle(std::vector<std::int64_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

RunLog train(const TrainConfig& config) {
  validate_config(config.model, config.resolution);
  const SyntheticDataset data = make_synthetic_dataset(
      config.samples, config.model.head.classes, derive_seed(config.seed, 0),
      config.resolution);
  NetworkParams params = init_params(config.model, derive_seed(config.seed, 1));
  Rng order_rng(derive_seed(config.seed, 2));

  std::map<std::string, Tensor> velocity;
  for (const auto& [name, t] : params.tensors) {
    velocity.emplace(name, Tensor(t.shape(), Fill::zeros()));
  }

  std::vector<std::int64_t> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const auto batch = static_cast<std::size_t>(std::min(config.batch_size, data.size()));

  RunLog log;
  for (std::int64_t step = 0; step < config.steps; ++step) {
    if (cursor + batch > order.size()) {
      shuffle(order, order_rng);
      cursor = 0;
    }
    const std::span<const std::int64_t> idx(order.data() + cursor, batch);
    cursor += batch;
    const std::vector<std::int64_t> labels = data.gather_labels(idx);

    Tape tape;
    std::map<std::string, Var> vars;
    const Var x = tape.input(data.gather(idx));
    const Var logits =
        network_forward(tape, config.model, params, x, BatchNormMode::kTrain, &vars);
    const Var loss = ad::softmax_cross_entropy(tape, logits, labels);
    const double loss_value = tape.value(loss)[0];
    if (!std::isfinite(loss_value)) {
      throw TrainingDivergedError(step, "non-finite loss at step " + std::to_string(step));
    }
    if (step % config.log_every == 0) {
      log.entries.push_back({step, loss_value, accuracy_of(tape.value(logits), labels)});
    }
    tape.backward(loss);

    for (auto& [name, var] : vars) {
      const Tensor g = tape.grad(var);
      Tensor& v = velocity.at(name);
      Tensor& p = params.tensors.at(name);
      std::vector<double> nv(v.size()), np(p.size());
      for (std::size_t i = 0; i < nv.size(); ++i) {
        nv[i] = config.momentum * v[i] + g[i];
        np[i] = p[i] - config.learning_rate * nv[i];
      }
      v = Tensor(v.shape(), std::move(nv));
      p = Tensor(p.shape(), std::move(np));
    }
  }

  // Whole-set evaluation with running statistics, in batch-sized chunks.
  double loss_sum = 0.0;
  double correct = 0.0;
  std::vector<std::int64_t> all(static_cast<std::size_t>(data.size()));
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t start = 0; start < all.size(); start += batch) {
    const std::size_t len = std::min(batch, all.size() - start);
    const std::span<const std::int64_t> idx(all.data() + start, len);
    const std::vector<std::int64_t> labels = data.gather_labels(idx);
    const Tensor logits =
        network_logits(config.model, params, data.gather(idx), BatchNormMode::kInfer);
    const double chunk_loss = softmax_cross_entropy(logits, labels).loss;
    if (!std::isfinite(chunk_loss)) {
      throw TrainingDivergedError(config.steps, "non-finite evaluation loss");
    }
    loss_sum += chunk_loss * static_cast<double>(len);
    correct += accuracy_of(logits, labels) * static_cast<double>(len);
  }
  const auto n = static_cast<double>(all.size());
  log.entries.push_back({config.steps, loss_sum / n, correct / n});
  return log;
}

std::string run_log_csv(const RunLog& log) {
  std::ostringstream os;
  os << "step,loss,accuracy\n";
  char buf[96];
  for (const auto& e : log.entries) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g\n",
                  static_cast<long long>(e.step), e.loss, e.accuracy);
    os << buf;
  }
  return os.str();
}

nlohmann::json run_log_json(const RunLog& log) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : log.entries) {
    rows.push_back({{"step", e.step}, {"loss", e.loss}, {"accuracy", e.accuracy}});
  }
  return rows;
}

}  // namespace mixconv
