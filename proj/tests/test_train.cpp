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

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mixconv/accounting.hpp"

namespace mixconv {
namespace {

TrainConfig short_config(std::int64_t steps) {
  TrainConfig c = toy_train_config();
  c.steps = steps;
  c.samples = 96;
  c.log_every = 1;
  return c;
}

TEST(SyntheticData, DeterministicAndBalanced) {
  const SyntheticDataset a = make_synthetic_dataset(90, 3, 5);
  const SyntheticDataset b = make_synthetic_dataset(90, 3, 5);
  const SyntheticDataset c = make_synthetic_dataset(90, 3, 6);
  EXPECT_EQ(a.images.shape(), (Shape4{90, 16, 16, 3}));
  EXPECT_EQ(a.images.to_vector(), b.images.to_vector());
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.images.to_vector(), c.images.to_vector());
  std::vector<int> counts(3, 0);
  for (auto l : a.labels) {
    ASSERT_GE(l, 0);
    ASSERT_LT(l, 3);
    ++counts[static_cast<std::size_t>(l)];
  }
  EXPECT_EQ(counts, (std::vector<int>{30, 30, 30}));
  EXPECT_THROW(make_synthetic_dataset(0, 3, 1), ConfigError);
}

TEST(InitParams, DeterministicPerSeed) {
  const ModelConfig m = toy_train_config().model;
  const NetworkParams a = init_params(m, 3);
  const NetworkParams b = init_params(m, 3);
  const NetworkParams c = init_params(m, 4);
  ASSERT_EQ(a.tensors.size(), b.tensors.size());
  bool any_differs = false;
  for (const auto& [name, t] : a.tensors) {
    EXPECT_EQ(t.to_vector(), b.tensors.at(name).to_vector()) << name;
    if (t.to_vector() != c.tensors.at(name).to_vector()) any_differs = true;
  }
  EXPECT_TRUE(any_differs);
  EXPECT_EQ(a.trainable_count(), count_model(m, 16).total_params);
}

TEST(InitParams, BatchNormOnesAndZeros) {
  const ModelConfig m = build_model("mixnet-s");
  const NetworkParams p = init_params(m, 1);
  std::size_t seen = 0;
  for (const ParamDecl& d : param_layout(m)) {
    const std::vector<double> v = p.tensors.at(d.name).to_vector();
    if (d.role == ParamRole::kGamma) {
      for (double e : v) ASSERT_EQ(e, 1.0) << d.name;
      ++seen;
    } else if (d.role == ParamRole::kBeta || d.role == ParamRole::kBias) {
      for (double e : v) ASSERT_EQ(e, 0.0) << d.name;
    }
  }
  EXPECT_GT(seen, 0u);
}

TEST(InitParams, DepthwiseStdFollowsFanIn) {
  ModelConfig m;
  m.name = "dw";
  m.stem = StemConfig{32, 3, 1, Activation::kRelu};
  BlockConfig b;
  b.type = BlockType::kSeparable;
  b.kernels = {3};
  b.channels_out = 32;
  m.blocks.push_back(b);
  m.head = HeadConfig{0, Activation::kRelu, 3};

  std::string name;
  for (const ParamDecl& d : param_layout(m)) {
    if (d.shape == Shape4{3, 3, 32, 1}) name = d.name;
  }
  ASSERT_FALSE(name.empty());
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::vector<double> w = init_params(m, seed).tensors.at(name).to_vector();
    ASSERT_EQ(w.size(), 288u);
    for (double v : w) {
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
  EXPECT_NEAR(sd / std::sqrt(2.0 / 9.0), 1.0, 0.2);
}

TEST(Train, ZeroLearningRateKeepsLossConstant) {
  TrainConfig c = short_config(20);
  c.learning_rate = 0.0;
  c.batch_size = c.samples;  // every step sees the same examples
  const RunLog log = train(c);
  ASSERT_EQ(log.entries.size(), 21u);
  for (std::size_t i = 1; i + 1 < log.entries.size(); ++i) {
    EXPECT_NEAR(log.entries[i].loss, log.entries[0].loss, 1e-12);
  }
}

TEST(Train, SameSeedSameLog) {
  const TrainConfig c = short_config(15);
  const std::string a = run_log_csv(train(c));
  EXPECT_EQ(a, run_log_csv(train(c)));
  TrainConfig other = c;
  other.seed = 2;
  EXPECT_NE(a, run_log_csv(train(other)));
}

TEST(Train, LogLayout) {
  TrainConfig c = short_config(25);
  c.log_every = 10;
  const RunLog log = train(c);
  ASSERT_EQ(log.entries.size(), 4u);
  EXPECT_EQ(log.entries[0].step, 0);
  EXPECT_EQ(log.entries[1].step, 10);
  EXPECT_EQ(log.entries[2].step, 20);
  EXPECT_EQ(log.entries[3].step, 25);
  const std::string csv = run_log_csv(log);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,loss,accuracy");
  EXPECT_EQ(run_log_json(log).size(), 4u);
}

TEST(Train, InitialLossNearChance) {
  // A single batch of 32 carries sizeable sampling noise; the expectation
  // over seeds is what sits near ln C.
  double sum = 0.0;
  constexpr int kSeeds = 20;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    TrainConfig c = short_config(1);
    c.samples = 32;
    c.seed = static_cast<std::uint64_t>(seed);
    sum += train(c).entries.front().loss;
  }
  EXPECT_NEAR(sum / kSeeds / std::log(3.0), 1.0, 0.1);
}

TEST(Train, DivergenceCarriesStep) {
  TrainConfig c = short_config(200);
  c.learning_rate = 1e200;
  try {
    train(c);
    FAIL() << "expected divergence";
  } catch (const TrainingDivergedError& e) {
    EXPECT_GE(e.step(), 1);
    EXPECT_LE(e.step(), 200);
  }
}

TEST(TrainConfig, JsonRoundTrip) {
  TrainConfig c = toy_train_config();
  c.steps = 123;
  c.learning_rate = 0.01;
  const TrainConfig back = parse_train_config(serialize_train_config(c));
  EXPECT_EQ(back.model, c.model);
  EXPECT_EQ(back.steps, 123);
  EXPECT_DOUBLE_EQ(back.learning_rate, 0.01);
  EXPECT_EQ(serialize_train_config(back), serialize_train_config(c));
  EXPECT_THROW(parse_train_config("[]"), ConfigError);
  nlohmann::json j = nlohmann::json::parse(serialize_train_config(c));
  j["train"]["batch_size"] = 0;
  EXPECT_THROW(parse_train_config(j.dump()), ConfigError);
}

TEST(Gradcheck, RegisteredOpsPass) {
  for (const std::string& op : gradcheck_ops()) {
    const GradcheckReport r = gradcheck(op, 5, 11);
    EXPECT_TRUE(r.passed()) << op << " " << r.max_rel_error;
  }
  EXPECT_LT(gradcheck("depthwise", 20, 1).max_rel_error, 1e-4);
  EXPECT_LT(gradcheck("mixconv", 20, 1).max_rel_error, 1e-4);
  const GradcheckReport swish = gradcheck("swish", 20, 1);
  EXPECT_LT(swish.max_rel_error, 1e-6);
  EXPECT_EQ(swish.tolerance, 1e-6);
}

TEST(Gradcheck, UnknownOp) {
  EXPECT_THROW(gradcheck("softplus", 3, 1), LookupError);
}

TEST(Gradcheck, RelativeError) {
  EXPECT_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 1e-9), 0.1);
}

}  // namespace
}  // namespace mixconv
