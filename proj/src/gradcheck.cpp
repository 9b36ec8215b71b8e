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

#include <algorithm>
#include <cmath>
#include <functional>

#include "mixconv/train.hpp"

namespace mixconv {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

namespace {

constexpr double kStep = 1e-5;

using Inputs = std::vector<Tensor>;
// Scalar loss of the inputs.
using LossFn = std::function<double(const Inputs&)>;
// Analytic gradient of the loss with respect to every input.
using GradFn = std::function<Inputs(const Inputs&)>;

double worst_error(const Inputs& inputs, const LossFn& loss, const GradFn& grad) {
  const Inputs analytic = grad(inputs);
  double worst = 0.0;
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    for (std::size_t i = 0; i < inputs[a].size(); ++i) {
      Inputs probe = inputs;
      std::vector<double> v = inputs[a].to_vector();
      v[i] = inputs[a][i] + kStep;
      probe[a] = Tensor(inputs[a].shape(), v);
      const double up = loss(probe);
      v[i] = inputs[a][i] - kStep;
      probe[a] = Tensor(inputs[a].shape(), v);
      const double down = loss(probe);
      const double numeric = (up - down) / (2.0 * kStep);
      worst = std::max(worst, relative_error(analytic[a][i], numeric));
    }
  }
  return worst;
}

/// L = <r, f(inputs)> with analytic adjoint `back(inputs, r)`.
double check_projected(const Inputs& inputs,
                       const std::function<Tensor(const Inputs&)>& f,
                       const std::function<Inputs(const Inputs&, const Tensor&)>& back,
                       Rng& rng) {
  const Tensor r = tensor_randn(f(inputs).shape(), rng);
  return worst_error(
      inputs, [&](const Inputs& in) { return tensor_dot(r, f(in)); },
      [&](const Inputs& in) { return back(in, r); });
}

std::int64_t pick(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return rng.uniform_int(lo, hi);
}

double trial_conv2d(Rng& rng) {
  const std::int64_t k = 2 * pick(rng, 0, 2) + 1;
  const ConvGeom geom{k, pick(rng, 1, 2), 1, Padding::kSame, 1};
  const Shape4 xs{pick(rng, 1, 2), pick(rng, 3, 5), pick(rng, 3, 5), pick(rng, 1, 3)};
  Inputs in{tensor_randn(xs, rng), tensor_randn(Shape4{k, k, xs.c, pick(rng, 1, 3)}, rng)};
  return check_projected(
      in, [&](const Inputs& v) { return conv2d_forward(v[0], v[1], geom); },
      [&](const Inputs& v, const Tensor& dy) {
        ConvGrads g = conv2d_backward(v[0], v[1], geom, dy);
        return Inputs{g.dx, g.dw};
      },
      rng);
}

double trial_depthwise(Rng& rng) {
  const std::int64_t k = 2 * pick(rng, 0, 2) + 1;
  const std::int64_t stride = pick(rng, 1, 2);
  const std::int64_t dilation = stride == 1 ? pick(rng, 1, 2) : 1;
  const ConvGeom geom{k, stride, dilation, Padding::kSame, pick(rng, 1, 2)};
  const Shape4 xs{pick(rng, 1, 2), pick(rng, 3, 6), pick(rng, 3, 6), pick(rng, 1, 3)};
  Inputs in{tensor_randn(xs, rng), tensor_randn(Shape4{k, k, xs.c, geom.multiplier}, rng)};
  return check_projected(
      in, [&](const Inputs& v) { return depthwise_forward(v[0], v[1], geom); },
      [&](const Inputs& v, const Tensor& dy) {
        ConvGrads g = depthwise_backward(v[0], v[1], geom, dy);
        return Inputs{g.dx, g.dw};
      },
      rng);
}

double trial_pointwise(Rng& rng) {
  const std::int64_t groups = pick(rng, 1, 2);
  const std::int64_t c_in = groups * pick(rng, 1, 3);
  const std::int64_t c_out = groups * pick(rng, 1, 3);
  const Shape4 xs{pick(rng, 1, 2), pick(rng, 1, 4), pick(rng, 1, 4), c_in};
  Inputs in{tensor_randn(xs, rng), tensor_randn(Shape4{1, 1, c_in / groups, c_out}, rng)};
  return check_projected(
      in, [&](const Inputs& v) { return pointwise_forward(v[0], v[1], groups); },
      [&](const Inputs& v, const Tensor& dy) {
        ConvGrads g = pointwise_backward(v[0], v[1], groups, dy);
        return Inputs{g.dx, g.dw};
      },
      rng);
}

double trial_mixconv(Rng& rng) {
  const std::int64_t groups = pick(rng, 1, 3);
  MixConvSpec spec;
  spec.kernels = default_kernels(groups);
  for (std::int64_t t = 0; t < groups; ++t) spec.channels.push_back(pick(rng, 1, 2));
  spec.multiplier = pick(rng, 1, 2);
  spec.stride = pick(rng, 1, 2);
  const Shape4 xs{pick(rng, 1, 2), pick(rng, 3, 6), pick(rng, 3, 6), spec.in_channels()};
  Inputs in{tensor_randn(xs, rng)};
  for (std::int64_t t = 0; t < groups; ++t) {
    const auto i = static_cast<std::size_t>(t);
    in.push_back(tensor_randn(
        Shape4{spec.kernels[i], spec.kernels[i], spec.channels[i], spec.multiplier}, rng));
  }
  const auto kernels = [](const Inputs& v) { return std::span<const Tensor>(v).subspan(1); };
  return check_projected(
      in, [&](const Inputs& v) { return mixconv_forward(v[0], kernels(v), spec); },
      [&](const Inputs& v, const Tensor& dy) {
        MixConvGrads g = mixconv_backward(v[0], kernels(v), spec, dy);
        Inputs out{g.dx};
        out.insert(out.end(), g.dkernels.begin(), g.dkernels.end());
        return out;
      },
      rng);
}

double trial_batchnorm(Rng& rng) {
  const std::int64_t c = pick(rng, 1, 3);
  const Shape4 xs{pick(rng, 2, 3), pick(rng, 2, 3), pick(rng, 2, 3), c};
  const Shape4 cs{1, 1, 1, c};
  Inputs in{tensor_randn(xs, rng), tensor_randn(cs, rng), tensor_randn(cs, rng)};
  const RunningStats stats = RunningStats::fresh(c);
  return check_projected(
      in,
      [&](const Inputs& v) {
        BatchNormState s{v[1], v[2], stats};
        return batchnorm_forward(v[0], s, BatchNormMode::kTrain);
      },
      [&](const Inputs& v, const Tensor& dy) {
        const BatchNormState s{v[1], v[2], stats};
        BatchNormGrads g = batchnorm_backward(v[0], s, BatchNormMode::kTrain, dy);
        return Inputs{g.dx, g.dgamma, g.dbeta};
      },
      rng);
}

double trial_se(Rng& rng) {
  const std::int64_t c = pick(rng, 2, 4);
  const std::int64_t r = pick(rng, 1, 2);
  const SqueezeExciteSpec spec{0.25, pick(rng, 0, 1) ? Activation::kSwish : Activation::kNone};
  const Shape4 xs{pick(rng, 1, 2), pick(rng, 2, 3), pick(rng, 2, 3), c};
  Inputs in{tensor_randn(xs, rng), tensor_randn(Shape4{1, 1, c, r}, rng),
            tensor_randn(Shape4{1, 1, 1, r}, rng), tensor_randn(Shape4{1, 1, r, c}, rng),
            tensor_randn(Shape4{1, 1, 1, c}, rng)};
  const auto weights = [](const Inputs& v) {
    return SqueezeExciteWeights{v[1], v[2], v[3], v[4]};
  };
  return check_projected(
      in, [&](const Inputs& v) { return squeeze_excite(v[0], spec, weights(v)); },
      [&](const Inputs& v, const Tensor& dy) {
        SqueezeExciteGrads g = squeeze_excite_backward(v[0], spec, weights(v), dy);
        return Inputs{g.dx, g.dweights.reduce_w, g.dweights.reduce_b, g.dweights.expand_w,
                      g.dweights.expand_b};
      },
      rng);
}

double trial_dense(Rng& rng) {
  const std::int64_t d_in = pick(rng, 1, 5), d_out = pick(rng, 1, 5);
  Inputs in{tensor_randn(Shape4{pick(rng, 1, 3), 1, 1, d_in}, rng),
            tensor_randn(Shape4{1, 1, d_in, d_out}, rng),
            tensor_randn(Shape4{1, 1, 1, d_out}, rng)};
  return check_projected(
      in, [&](const Inputs& v) { return dense_forward(v[0], v[1], v[2]); },
      [&](const Inputs& v, const Tensor& dy) {
        DenseGrads g = dense_backward(v[0], v[1], dy);
        return Inputs{g.dx, g.dw, g.db};
      },
      rng);
}

double trial_loss(Rng& rng) {
  const std::int64_t n = pick(rng, 1, 4), classes = pick(rng, 2, 5);
  std::vector<std::int64_t> labels;
  for (std::int64_t i = 0; i < n; ++i) labels.push_back(pick(rng, 0, classes - 1));
  Inputs in{tensor_randn(Shape4{n, 1, 1, classes}, rng, 2.0)};
  return worst_error(
      in, [&](const Inputs& v) { return softmax_cross_entropy(v[0], labels).loss; },
      [&](const Inputs& v) { return Inputs{softmax_cross_entropy(v[0], labels).dlogits}; });
}

double trial_swish(Rng& rng) {
  const Shape4 xs{1, pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 3)};
  Inputs in{tensor_randn(xs, rng, 2.0)};
  return check_projected(
      in, [](const Inputs& v) { return swish_forward(v[0]); },
      [](const Inputs& v, const Tensor& dy) { return Inputs{swish_backward(v[0], dy)}; }, rng);
}

double trial_inverted_residual(Rng& rng) {
  InvertedResidualSpec spec;
  spec.in_channels = 2 * pick(rng, 1, 2);
  spec.expansion = pick(rng, 1, 2);
  spec.mix.stride = pick(rng, 1, 2);
  spec.out_channels = spec.mix.stride == 1 && pick(rng, 0, 1) ? spec.in_channels
                                                              : 2 * pick(rng, 1, 2);
  const std::int64_t ex = spec.expanded_channels();
  const std::int64_t groups = std::min<std::int64_t>(pick(rng, 1, 2), ex);
  spec.mix.kernels = default_kernels(groups);
  spec.mix.channels = partition_equal(ex, groups);
  spec.activation = Activation::kSwish;
  spec.se = SqueezeExciteSpec{0.5, Activation::kSwish};
  spec.residual = spec.residual_allowed();
  const std::int64_t r = spec.se->reduced_channels(spec.in_channels);
  const Shape4 xs{2, pick(rng, 3, 4), pick(rng, 3, 4), spec.in_channels};

  // Input order: x, expand_w, mix kernels..., se (4), project_w, then
  // gamma/beta for each BN present.
  Inputs in{tensor_randn(xs, rng)};
  in.push_back(tensor_randn(Shape4{1, 1, spec.in_channels, ex}, rng));
  for (std::int64_t t = 0; t < groups; ++t) {
    const auto i = static_cast<std::size_t>(t);
    const std::int64_t k = spec.mix.kernels[i];
    in.push_back(tensor_randn(Shape4{k, k, spec.mix.channels[i], 1}, rng));
  }
  in.push_back(tensor_randn(Shape4{1, 1, ex, r}, rng));
  in.push_back(tensor_randn(Shape4{1, 1, 1, r}, rng));
  in.push_back(tensor_randn(Shape4{1, 1, r, ex}, rng));
  in.push_back(tensor_randn(Shape4{1, 1, 1, ex}, rng));
  in.push_back(tensor_randn(Shape4{1, 1, ex, spec.out_channels}, rng));
  for (std::int64_t c : {ex, ex, spec.out_channels}) {
    in.push_back(tensor_add(Tensor(Shape4{1, 1, 1, c}, Fill::ones()),
                            tensor_randn(Shape4{1, 1, 1, c}, rng, 0.3)));
    in.push_back(tensor_randn(Shape4{1, 1, 1, c}, rng, 0.3));
  }

  const auto params_of = [&](const Inputs& v) {
    InvertedResidualParams p;
    std::size_t a = 1;
    p.expand_w = v[a++];
    for (std::int64_t t = 0; t < groups; ++t) p.mix_kernels.push_back(v[a++]);
    p.se = SqueezeExciteWeights{v[a], v[a + 1], v[a + 2], v[a + 3]};
    a += 4;
    p.project_w = v[a++];
    p.expand_bn = {v[a], v[a + 1], RunningStats::fresh(ex)};
    p.mix_bn = {v[a + 2], v[a + 3], RunningStats::fresh(ex)};
    p.project_bn = {v[a + 4], v[a + 5], RunningStats::fresh(spec.out_channels)};
    if (spec.expansion == 1) p.expand_w.reset();
    return p;
  };
  const auto run = [&](const Inputs& v, const Tensor* dy, Inputs* grads) {
    InvertedResidualParams p = params_of(v);
    Tape tape;
    const Var x = tape.input(v[0]);
    const ad::InvertedResidualVars vars = ad::register_params(tape, "b", p);
    const Var y = ad::inverted_residual(tape, x, spec, vars, BatchNormMode::kTrain);
    if (dy) {
      tape.backward(y, *dy);
      grads->assign(v.size(), Tensor());
      std::size_t a = 0;
      (*grads)[a++] = tape.grad(x);
      // Unused expand weights (expansion 1) keep a zero gradient.
      (*grads)[a] = Tensor(v[a].shape(), Fill::zeros());
      if (vars.expand_w) (*grads)[a] = tape.grad(*vars.expand_w);
      ++a;
      for (Var k : vars.mix_kernels) (*grads)[a++] = tape.grad(k);
      for (Var s : {vars.se->reduce_w, vars.se->reduce_b, vars.se->expand_w, vars.se->expand_b}) {
        (*grads)[a++] = tape.grad(s);
      }
      (*grads)[a++] = tape.grad(vars.project_w);
      if (vars.expand_bn) {
        (*grads)[a] = tape.grad(vars.expand_bn->gamma);
        (*grads)[a + 1] = tape.grad(vars.expand_bn->beta);
      } else {
        (*grads)[a] = Tensor(v[a].shape(), Fill::zeros());
        (*grads)[a + 1] = Tensor(v[a + 1].shape(), Fill::zeros());
      }
      a += 2;
      (*grads)[a++] = tape.grad(vars.mix_bn.gamma);
      (*grads)[a++] = tape.grad(vars.mix_bn.beta);
      (*grads)[a++] = tape.grad(vars.project_bn.gamma);
      (*grads)[a++] = tape.grad(vars.project_bn.beta);
    }
    return tape.value(y);
  };
  return check_projected(
      in, [&](const Inputs& v) { return run(v, nullptr, nullptr); },
      [&](const Inputs& v, const Tensor& dy) {
        Inputs grads;
        run(v, &dy, &grads);
        return grads;
      },
      rng);
}

struct Registered {
  const char* name;
  double (*trial)(Rng&);
  double tolerance;
};

constexpr Registered kOps[] = {
    {"conv2d", trial_conv2d, 1e-4},
    {"depthwise", trial_depthwise, 1e-4},
    {"pointwise", trial_pointwise, 1e-4},
    {"mixconv", trial_mixconv, 1e-4},
    {"batchnorm", trial_batchnorm, 1e-4},
    {"se", trial_se, 1e-4},
    {"dense", trial_dense, 1e-4},
    {"loss", trial_loss, 1e-5},
    {"swish", trial_swish, 1e-6},
    {"inverted_residual", trial_inverted_residual, 1e-3},
};

}  // namespace

std::vector<std::string> gradcheck_ops() {
  std::vector<std::string> names;
  for (const auto& op : kOps) names.emplace_back(op.name);
  return names;
}

GradcheckReport gradcheck(const std::string& op, std::int64_t trials,
                          std::uint64_t seed) {
  const auto it = std::find_if(std::begin(kOps), std::end(kOps),
                               [&](const Registered& r) { return op == r.name; });
  if (it == std::end(kOps)) throw LookupError("no gradient check registered for '" + op + "'");
  Rng rng(seed);
  GradcheckReport report{op, trials, 0.0, it->tolerance};
  for (std::int64_t t = 0; t < trials; ++t) {
    report.max_rel_error = std::max(report.max_rel_error, it->trial(rng));
  }
  return report;
}

}  // namespace mixconv
