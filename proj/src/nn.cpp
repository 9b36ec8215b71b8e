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

#include "mixconv/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mixconv {

std::string to_string(Activation act) {
  switch (act) {
    case Activation::kNone:
      return "none";
    case Activation::kRelu:
      return "relu";
    case Activation::kSwish:
      return "swish";
  }
  return "none";
}

Activation parse_activation(const std::string& name) {
  if (name == "none") return Activation::kNone;
  if (name == "relu") return Activation::kRelu;
  if (name == "swish") return Activation::kSwish;
  throw ConfigError("unknown activation '" + name + "'");
}

namespace {

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

template <typename F>
Tensor map(const Tensor& x, F f) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return Tensor(x.shape(), std::move(out));
}

template <typename F>
Tensor map2(const Tensor& x, const Tensor& dy, F f) {
  if (x.shape() != dy.shape()) {
    throw ShapeError("gradient shape " + dy.shape().str() + " vs input " +
                     x.shape().str());
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i], dy[i]);
  return Tensor(x.shape(), std::move(out));
}

Shape4 channel_shape(std::int64_t c) { return Shape4{1, 1, 1, c}; }

}  // namespace

Tensor sigmoid_forward(const Tensor& x) { return map(x, sigmoid); }

Tensor relu_forward(const Tensor& x) {
  return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  return map2(x, dy, [](double v, double g) { return v > 0.0 ? g : 0.0; });
}

Tensor swish_forward(const Tensor& x) {
  return map(x, [](double v) { return v * sigmoid(v); });
}

Tensor swish_backward(const Tensor& x, const Tensor& dy) {
  return map2(x, dy, [](double v, double g) {
    const double s = sigmoid(v);
    return g * (s + v * s * (1.0 - s));
  });
}

Tensor activation_forward(Activation act, const Tensor& x) {
  switch (act) {
    case Activation::kRelu:
      return relu_forward(x);
    case Activation::kSwish:
      return swish_forward(x);
    case Activation::kNone:
      break;
  }
  return x;
}

Tensor activation_backward(Activation act, const Tensor& x, const Tensor& dy) {
  switch (act) {
    case Activation::kRelu:
      return relu_backward(x, dy);
    case Activation::kSwish:
      return swish_backward(x, dy);
    case Activation::kNone:
      break;
  }
  return dy;
}

// ---------------------------------------------------------------------------

RunningStats RunningStats::fresh(std::int64_t channels) {
  RunningStats s;
  s.mean.assign(static_cast<std::size_t>(channels), 0.0);
  s.var.assign(static_cast<std::size_t>(channels), 1.0);
  return s;
}

BatchNormState BatchNormState::fresh(std::int64_t channels) {
  return BatchNormState{Tensor(channel_shape(channels), Fill::ones()),
                        Tensor(channel_shape(channels), Fill::zeros()),
                        RunningStats::fresh(channels)};
}

namespace {

struct ChannelMoments {
  std::vector<double> mean;
  std::vector<double> inv_std;
};

void check_bn(const Tensor& x, const Tensor& gamma, const Tensor& beta,
              const RunningStats& stats) {
  const Shape4 expected = channel_shape(x.shape().c);
  if (gamma.shape() != expected || beta.shape() != expected ||
      stats.channels() != x.shape().c ||
      stats.var.size() != stats.mean.size()) {
    throw ShapeError("batch norm state does not match " +
                     std::to_string(x.shape().c) + " channels");
  }
}

ChannelMoments moments(const Tensor& x, const RunningStats& stats,
                       BatchNormMode mode) {
  const auto c = static_cast<std::size_t>(x.shape().c);
  ChannelMoments m{std::vector<double>(c, 0.0), std::vector<double>(c, 0.0)};
  if (mode == BatchNormMode::kInfer) {
    for (std::size_t z = 0; z < c; ++z) {
      m.mean[z] = stats.mean[z];
      m.inv_std[z] = 1.0 / std::sqrt(stats.var[z] + stats.epsilon);
    }
    return m;
  }
  const std::size_t pixels = x.size() / c;
  std::vector<double> var(c, 0.0);
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t z = 0; z < c; ++z) m.mean[z] += x[p * c + z];
  }
  for (auto& v : m.mean) v /= static_cast<double>(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t z = 0; z < c; ++z) {
      const double d = x[p * c + z] - m.mean[z];
      var[z] += d * d;
    }
  }
  for (std::size_t z = 0; z < c; ++z) {
    var[z] /= static_cast<double>(pixels);
    m.inv_std[z] = 1.0 / std::sqrt(var[z] + stats.epsilon);
  }
  return m;
}

}  // namespace

namespace detail {

Tensor bn_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  RunningStats& stats, BatchNormMode mode) {
  check_bn(x, gamma, beta, stats);
  const ChannelMoments m = moments(x, stats, mode);
  const auto c = static_cast<std::size_t>(x.shape().c);
  const std::size_t pixels = x.size() / c;
  std::vector<double> y(x.size());
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t z = 0; z < c; ++z) {
      const double xhat = (x[p * c + z] - m.mean[z]) * m.inv_std[z];
      y[p * c + z] = gamma[z] * xhat + beta[z];
    }
  }
  if (mode == BatchNormMode::kTrain) {
    for (std::size_t z = 0; z < c; ++z) {
      const double var = 1.0 / (m.inv_std[z] * m.inv_std[z]) - stats.epsilon;
      stats.mean[z] = stats.momentum * stats.mean[z] +
                      (1.0 - stats.momentum) * m.mean[z];
      stats.var[z] = stats.momentum * stats.var[z] +
                     (1.0 - stats.momentum) * std::max(var, 0.0);
    }
  }
  return Tensor(x.shape(), std::move(y));
}

BatchNormGrads bn_backward(const Tensor& x, const Tensor& gamma,
                           const RunningStats& stats, BatchNormMode mode,
                           const Tensor& dy) {
  check_bn(x, gamma, gamma, stats);
  if (dy.shape() != x.shape()) {
    throw ShapeError("batch norm gradient shape mismatch");
  }
  const ChannelMoments m = moments(x, stats, mode);
  const auto c = static_cast<std::size_t>(x.shape().c);
  const std::size_t pixels = x.size() / c;
  std::vector<double> dgamma(c, 0.0), dbeta(c, 0.0);
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t z = 0; z < c; ++z) {
      const double xhat = (x[p * c + z] - m.mean[z]) * m.inv_std[z];
      dbeta[z] += dy[p * c + z];
      dgamma[z] += dy[p * c + z] * xhat;
    }
  }
  std::vector<double> dx(x.size());
  if (mode == BatchNormMode::kInfer) {
    for (std::size_t p = 0; p < pixels; ++p) {
      for (std::size_t z = 0; z < c; ++z) {
        dx[p * c + z] = dy[p * c + z] * gamma[z] * m.inv_std[z];
      }
    }
  } else {
    // With g = dy * gamma: dx = inv_std / N * (N g - sum g - xhat sum(g xhat)),
    // and sum g = gamma * dbeta, sum(g xhat) = gamma * dgamma.
    const auto count = static_cast<double>(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      for (std::size_t z = 0; z < c; ++z) {
        const double xhat = (x[p * c + z] - m.mean[z]) * m.inv_std[z];
        const double g = dy[p * c + z] * gamma[z];
        dx[p * c + z] = m.inv_std[z] / count *
                        (count * g - gamma[z] * dbeta[z] -
                         xhat * gamma[z] * dgamma[z]);
      }
    }
  }
  return {Tensor(x.shape(), std::move(dx)),
          Tensor(channel_shape(x.shape().c), std::move(dgamma)),
          Tensor(channel_shape(x.shape().c), std::move(dbeta))};
}

}  // namespace detail

Tensor batchnorm_forward(const Tensor& x, BatchNormState& state,
                         BatchNormMode mode) {
  return detail::bn_forward(x, state.gamma, state.beta, state.stats, mode);
}

BatchNormGrads batchnorm_backward(const Tensor& x, const BatchNormState& state,
                                  BatchNormMode mode, const Tensor& dy) {
  return detail::bn_backward(x, state.gamma, state.stats, mode, dy);
}

// ---------------------------------------------------------------------------

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::int64_t d_out = w.shape().c;
  if (b.shape() != channel_shape(d_out)) {
    throw ShapeError("dense bias " + b.shape().str() + " for " +
                     std::to_string(d_out) + " outputs");
  }
  const Tensor z = pointwise_forward(x, w, 1);
  std::vector<double> y = z.to_vector();
  const auto d = static_cast<std::size_t>(d_out);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i % d];
  return Tensor(z.shape(), std::move(y));
}

DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy) {
  ConvGrads g = pointwise_backward(x, w, 1, dy);
  const auto d = static_cast<std::size_t>(w.shape().c);
  std::vector<double> db(d, 0.0);
  for (std::size_t i = 0; i < dy.size(); ++i) db[i % d] += dy[i];
  return {std::move(g.dx), std::move(g.dw),
          Tensor(channel_shape(w.shape().c), std::move(db))};
}

Tensor global_avg_pool_forward(const Tensor& x) {
  const Shape4& s = x.shape();
  const auto c = static_cast<std::size_t>(s.c);
  const auto area = static_cast<std::size_t>(s.h * s.w);
  std::vector<double> y(static_cast<std::size_t>(s.n) * c, 0.0);
  for (std::int64_t n = 0; n < s.n; ++n) {
    double* out = y.data() + n * s.c;
    for (std::size_t p = 0; p < area; ++p) {
      const std::size_t base = (static_cast<std::size_t>(n) * area + p) * c;
      for (std::size_t z = 0; z < c; ++z) out[z] += x[base + z];
    }
    for (std::size_t z = 0; z < c; ++z) out[z] /= static_cast<double>(area);
  }
  return Tensor(Shape4{s.n, 1, 1, s.c}, std::move(y));
}

Tensor global_avg_pool_backward(const Shape4& in_shape, const Tensor& dy) {
  if (dy.shape() != Shape4{in_shape.n, 1, 1, in_shape.c}) {
    throw ShapeError("pool gradient shape mismatch");
  }
  const auto c = static_cast<std::size_t>(in_shape.c);
  const auto area = static_cast<std::size_t>(in_shape.h * in_shape.w);
  std::vector<double> dx(in_shape.elements());
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const std::size_t n = i / (area * c);
    dx[i] = dy[n * c + i % c] / static_cast<double>(area);
  }
  return Tensor(in_shape, std::move(dx));
}

namespace {

void check_gate(const Tensor& x, const Tensor& gate) {
  if (gate.shape() != Shape4{x.shape().n, 1, 1, x.shape().c}) {
    throw ShapeError("gate " + gate.shape().str() + " for input " +
                     x.shape().str());
  }
}

}  // namespace

Tensor scale_channels_forward(const Tensor& x, const Tensor& gate) {
  check_gate(x, gate);
  const Shape4& s = x.shape();
  const auto per_image = static_cast<std::size_t>(s.h * s.w * s.c);
  const auto c = static_cast<std::size_t>(s.c);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = x[i] * gate[(i / per_image) * c + i % c];
  }
  return Tensor(s, std::move(y));
}

ScaleGrads scale_channels_backward(const Tensor& x, const Tensor& gate,
                                   const Tensor& dy) {
  check_gate(x, gate);
  if (dy.shape() != x.shape()) throw ShapeError("scale gradient shape mismatch");
  const Shape4& s = x.shape();
  const auto per_image = static_cast<std::size_t>(s.h * s.w * s.c);
  const auto c = static_cast<std::size_t>(s.c);
  std::vector<double> dx(x.size()), dgate(gate.size(), 0.0);
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const std::size_t gi = (i / per_image) * c + i % c;
    dx[i] = dy[i] * gate[gi];
    dgate[gi] += dy[i] * x[i];
  }
  return {Tensor(s, std::move(dx)), Tensor(gate.shape(), std::move(dgate))};
}

LossResult softmax_cross_entropy(const Tensor& logits,
                                 std::span<const std::int64_t> labels) {
  const Shape4& s = logits.shape();
  if (s.h != 1 || s.w != 1) {
    throw ShapeError("logits must be (n, 1, 1, classes), got " + s.str());
  }
  if (static_cast<std::int64_t>(labels.size()) != s.n) {
    throw ShapeError("expected " + std::to_string(s.n) + " labels, got " +
                     std::to_string(labels.size()));
  }
  const auto classes = static_cast<std::size_t>(s.c);
  std::vector<double> grad(logits.size());
  double total = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const std::int64_t label = labels[n];
    if (label < 0 || label >= s.c) {
      throw LabelError("label " + std::to_string(label) + " outside [0, " +
                       std::to_string(s.c) + ")");
    }
    const double* row = logits.data().data() + n * classes;
    const double peak = *std::max_element(row, row + classes);
    double denom = 0.0;
    for (std::size_t k = 0; k < classes; ++k) denom += std::exp(row[k] - peak);
    total += std::log(denom) + peak - row[label];
    for (std::size_t k = 0; k < classes; ++k) {
      const double p = std::exp(row[k] - peak) / denom;
      grad[n * classes + k] = p - (static_cast<std::int64_t>(k) == label ? 1.0 : 0.0);
    }
  }
  const auto batch = static_cast<double>(labels.size());
  for (auto& g : grad) g /= batch;
  return {total / batch, Tensor(s, std::move(grad))};
}

// ---------------------------------------------------------------------------

std::int64_t SqueezeExciteSpec::reduced_channels(std::int64_t base_channels) const {
  return std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(static_cast<double>(base_channels) * ratio)));
}

Tensor squeeze_excite(const Tensor& x, const SqueezeExciteSpec& spec,
                      const SqueezeExciteWeights& weights) {
  const Tensor pooled = global_avg_pool_forward(x);
  const Tensor reduced = dense_forward(pooled, weights.reduce_w, weights.reduce_b);
  const Tensor hidden = activation_forward(spec.activation, reduced);
  const Tensor logits = dense_forward(hidden, weights.expand_w, weights.expand_b);
  return scale_channels_forward(x, sigmoid_forward(logits));
}

SqueezeExciteGrads squeeze_excite_backward(const Tensor& x,
                                           const SqueezeExciteSpec& spec,
                                           const SqueezeExciteWeights& weights,
                                           const Tensor& dy) {
  const Tensor pooled = global_avg_pool_forward(x);
  const Tensor reduced = dense_forward(pooled, weights.reduce_w, weights.reduce_b);
  const Tensor hidden = activation_forward(spec.activation, reduced);
  const Tensor logits = dense_forward(hidden, weights.expand_w, weights.expand_b);
  const Tensor gate = sigmoid_forward(logits);

  ScaleGrads sg = scale_channels_backward(x, gate, dy);
  std::vector<double> dlogits(gate.size());
  for (std::size_t i = 0; i < dlogits.size(); ++i) {
    dlogits[i] = sg.dgate[i] * gate[i] * (1.0 - gate[i]);
  }
  const DenseGrads de = dense_backward(
      hidden, weights.expand_w, Tensor(gate.shape(), std::move(dlogits)));
  const Tensor dreduced = activation_backward(spec.activation, reduced, de.dx);
  const DenseGrads dr = dense_backward(pooled, weights.reduce_w, dreduced);
  const Tensor dx_pool = global_avg_pool_backward(x.shape(), dr.dx);
  return {tensor_add(sg.dx, dx_pool),
          SqueezeExciteWeights{dr.dw, dr.db, de.dw, de.db}};
}

// ---------------------------------------------------------------------------

void InvertedResidualSpec::validate() const {
  if (in_channels < 1 || out_channels < 1 || expansion < 1) {
    throw ShapeError("inverted residual channels and expansion must be positive");
  }
  mix.validate();
  if (mix.in_channels() != expanded_channels()) {
    throw ShapeError("mixconv covers " + std::to_string(mix.in_channels()) +
                     " channels, block expands to " +
                     std::to_string(expanded_channels()));
  }
  if (mix.multiplier != 1) {
    throw ShapeError("inverted residual blocks use channel multiplier 1");
  }
  if (residual != residual_allowed()) {
    throw ShapeError(residual ? "residual connection needs stride 1 and equal "
                                "input/output channels"
                              : "residual connection is required when stride "
                                "is 1 and channels match");
  }
}

Tensor inverted_residual(const Tensor& x, const InvertedResidualSpec& spec,
                         InvertedResidualParams& params, BatchNormMode mode) {
  Tape tape;
  const Var in = tape.input(x);
  const ad::InvertedResidualVars vars = ad::register_params(tape, "block", params);
  return tape.value(ad::inverted_residual(tape, in, spec, vars, mode));
}

// ---------------------------------------------------------------------------

namespace ad {

Var conv2d(Tape& tape, Var x, Var w, const ConvGeom& geom) {
  Tensor y = conv2d_forward(tape.value(x), tape.value(w), geom);
  return tape.record(std::move(y), [x, w, geom](const Tensor& dy, Tape& t) {
    ConvGrads g = conv2d_backward(t.value(x), t.value(w), geom, dy);
    t.accumulate(x, g.dx);
    t.accumulate(w, g.dw);
  });
}

Var depthwise(Tape& tape, Var x, Var w, const ConvGeom& geom) {
  Tensor y = depthwise_forward(tape.value(x), tape.value(w), geom);
  return tape.record(std::move(y), [x, w, geom](const Tensor& dy, Tape& t) {
    ConvGrads g = depthwise_backward(t.value(x), t.value(w), geom, dy);
    t.accumulate(x, g.dx);
    t.accumulate(w, g.dw);
  });
}

Var pointwise(Tape& tape, Var x, Var w, std::int64_t groups) {
  Tensor y = pointwise_forward(tape.value(x), tape.value(w), groups);
  return tape.record(std::move(y), [x, w, groups](const Tensor& dy, Tape& t) {
    ConvGrads g = pointwise_backward(t.value(x), t.value(w), groups, dy);
    t.accumulate(x, g.dx);
    t.accumulate(w, g.dw);
  });
}

namespace {

std::vector<Tensor> values_of(const Tape& tape, std::span<const Var> vars) {
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (Var v : vars) out.push_back(tape.value(v));
  return out;
}

}  // namespace

Var mixconv(Tape& tape, Var x, std::span<const Var> kernels,
            const MixConvSpec& spec) {
  std::vector<Var> ks(kernels.begin(), kernels.end());
  Tensor y = mixconv_forward(tape.value(x), values_of(tape, ks), spec);
  return tape.record(std::move(y), [x, ks, spec](const Tensor& dy, Tape& t) {
    MixConvGrads g = mixconv_backward(t.value(x), values_of(t, ks), spec, dy);
    t.accumulate(x, g.dx);
    for (std::size_t i = 0; i < ks.size(); ++i) t.accumulate(ks[i], g.dkernels[i]);
  });
}

Var activation(Tape& tape, Var x, Activation act) {
  if (act == Activation::kNone) return x;
  Tensor y = activation_forward(act, tape.value(x));
  return tape.record(std::move(y), [x, act](const Tensor& dy, Tape& t) {
    t.accumulate(x, activation_backward(act, t.value(x), dy));
  });
}

Var sigmoid(Tape& tape, Var x) {
  Tensor y = sigmoid_forward(tape.value(x));
  return tape.record(std::move(y), [x](const Tensor& dy, Tape& t) {
    const Tensor s = sigmoid_forward(t.value(x));
    std::vector<double> dx(dy.size());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = dy[i] * s[i] * (1.0 - s[i]);
    t.accumulate(x, Tensor(dy.shape(), std::move(dx)));
  });
}

Var batchnorm(Tape& tape, Var x, const BatchNormVars& bn, BatchNormMode mode) {
  Tensor y = detail::bn_forward(tape.value(x), tape.value(bn.gamma),
                                tape.value(bn.beta), *bn.stats, mode);
  return tape.record(std::move(y), [x, bn, mode](const Tensor& dy, Tape& t) {
    BatchNormGrads g =
        detail::bn_backward(t.value(x), t.value(bn.gamma), *bn.stats, mode, dy);
    t.accumulate(x, g.dx);
    t.accumulate(bn.gamma, g.dgamma);
    t.accumulate(bn.beta, g.dbeta);
  });
}

Var dense(Tape& tape, Var x, Var w, Var b) {
  Tensor y = dense_forward(tape.value(x), tape.value(w), tape.value(b));
  return tape.record(std::move(y), [x, w, b](const Tensor& dy, Tape& t) {
    DenseGrads g = dense_backward(t.value(x), t.value(w), dy);
    t.accumulate(x, g.dx);
    t.accumulate(w, g.dw);
    t.accumulate(b, g.db);
  });
}

Var global_avg_pool(Tape& tape, Var x) {
  Tensor y = global_avg_pool_forward(tape.value(x));
  return tape.record(std::move(y), [x](const Tensor& dy, Tape& t) {
    t.accumulate(x, global_avg_pool_backward(t.value(x).shape(), dy));
  });
}

Var scale_channels(Tape& tape, Var x, Var gate) {
  Tensor y = scale_channels_forward(tape.value(x), tape.value(gate));
  return tape.record(std::move(y), [x, gate](const Tensor& dy, Tape& t) {
    ScaleGrads g = scale_channels_backward(t.value(x), t.value(gate), dy);
    t.accumulate(x, g.dx);
    t.accumulate(gate, g.dgate);
  });
}

Var add(Tape& tape, Var a, Var b) {
  Tensor y = tensor_add(tape.value(a), tape.value(b));
  return tape.record(std::move(y), [a, b](const Tensor& dy, Tape& t) {
    t.accumulate(a, dy);
    t.accumulate(b, dy);
  });
}

Var squeeze_excite(Tape& tape, Var x, const SqueezeExciteSpec& spec,
                   const SqueezeExciteVars& se) {
  const Var pooled = global_avg_pool(tape, x);
  const Var reduced = dense(tape, pooled, se.reduce_w, se.reduce_b);
  const Var hidden = activation(tape, reduced, spec.activation);
  const Var logits = dense(tape, hidden, se.expand_w, se.expand_b);
  return scale_channels(tape, x, sigmoid(tape, logits));
}

Var softmax_cross_entropy(Tape& tape, Var logits,
                          std::vector<std::int64_t> labels) {
  LossResult r = mixconv::softmax_cross_entropy(tape.value(logits), labels);
  Tensor loss(Shape4{1, 1, 1, 1}, std::vector<double>{r.loss});
  return tape.record(std::move(loss),
                     [logits, d = std::move(r.dlogits)](const Tensor& dy, Tape& t) {
                       t.accumulate(logits, tensor_scale(d, dy[0]));
                     });
}

Var inverted_residual(Tape& tape, Var x, const InvertedResidualSpec& spec,
                      const InvertedResidualVars& vars, BatchNormMode mode) {
  spec.validate();
  if (tape.value(x).shape().c != spec.in_channels) {
    throw ShapeError("inverted residual expects " +
                     std::to_string(spec.in_channels) + " input channels, got " +
                     std::to_string(tape.value(x).shape().c));
  }
  Var h = x;
  if (spec.expansion != 1) {
    if (!vars.expand_w || !vars.expand_bn) {
      throw ShapeError("expansion requires expand weights");
    }
    h = pointwise(tape, h, *vars.expand_w, spec.expand_groups);
    h = batchnorm(tape, h, *vars.expand_bn, mode);
    h = activation(tape, h, spec.activation);
  }
  h = mixconv(tape, h, vars.mix_kernels, spec.mix);
  h = batchnorm(tape, h, vars.mix_bn, mode);
  h = activation(tape, h, spec.activation);
  if (spec.se) {
    if (!vars.se) throw ShapeError("squeeze-excite requested without weights");
    h = squeeze_excite(tape, h, *spec.se, *vars.se);
  }
  h = pointwise(tape, h, vars.project_w, spec.project_groups);
  h = batchnorm(tape, h, vars.project_bn, mode);
  if (spec.residual) h = add(tape, h, x);
  return h;
}

namespace {

BatchNormVars register_bn(Tape& tape, const std::string& prefix,
                          BatchNormState& bn) {
  return BatchNormVars{tape.parameter(prefix + ".gamma", bn.gamma),
                       tape.parameter(prefix + ".beta", bn.beta), &bn.stats};
}

}  // namespace

InvertedResidualVars register_params(Tape& tape, const std::string& prefix,
                                     InvertedResidualParams& params) {
  InvertedResidualVars vars;
  if (params.expand_w) {
    vars.expand_w = tape.parameter(prefix + ".expand.w", *params.expand_w);
    vars.expand_bn = register_bn(tape, prefix + ".expand_bn", params.expand_bn);
  }
  for (std::size_t t = 0; t < params.mix_kernels.size(); ++t) {
    vars.mix_kernels.push_back(tape.parameter(
        prefix + ".mixconv.w" + std::to_string(t), params.mix_kernels[t]));
  }
  vars.mix_bn = register_bn(tape, prefix + ".mixconv_bn", params.mix_bn);
  if (params.se) {
    vars.se = SqueezeExciteVars{
        tape.parameter(prefix + ".se.reduce_w", params.se->reduce_w),
        tape.parameter(prefix + ".se.reduce_b", params.se->reduce_b),
        tape.parameter(prefix + ".se.expand_w", params.se->expand_w),
        tape.parameter(prefix + ".se.expand_b", params.se->expand_b)};
  }
  vars.project_w = tape.parameter(prefix + ".project.w", params.project_w);
  vars.project_bn = register_bn(tape, prefix + ".project_bn", params.project_bn);
  return vars;
}

}  // namespace ad

}  // namespace mixconv
