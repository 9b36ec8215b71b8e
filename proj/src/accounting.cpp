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

#include "mixconv/accounting.hpp"

#include <sstream>

#include "mixconv/model_zoo.hpp"

namespace mixconv {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::int64_t area(const Shape4& s) { return s.h * s.w; }

}  // namespace

std::string op_kind(const LayerOp& op) {
  return std::visit(
      Overloaded{[](const ConvOp&) { return "conv"; },
                 [](const DepthwiseOp&) { return "depthwise"; },
                 [](const PointwiseOp&) { return "pointwise"; },
                 [](const MixConvOp&) { return "mixconv"; },
                 [](const DenseOp&) { return "dense"; },
                 [](const BatchNormOp&) { return "batchnorm"; },
                 [](const SqueezeExciteOp&) { return "se"; },
                 [](const ActivationOp&) { return "activation"; },
                 [](const PoolOp&) { return "pool"; }},
      op);
}

LayerCost count_layer(const LayerOp& op, const Shape4& in) {
  return std::visit(
      Overloaded{
          [&](const ConvOp& o) {
            ConvGeom g = o.geom;
            g.multiplier = 1;
            const Shape4 out = conv_output_shape(in, g, o.out_channels);
            const std::int64_t params = g.kernel * g.kernel * in.c * o.out_channels;
            return LayerCost{out, params, area(out) * params, 0};
          },
          [&](const DepthwiseOp& o) {
            const Shape4 out = conv_output_shape(in, o.geom, in.c * o.geom.multiplier);
            const std::int64_t params =
                o.geom.kernel * o.geom.kernel * in.c * o.geom.multiplier;
            return LayerCost{out, params, area(out) * params, 0};
          },
          [&](const PointwiseOp& o) {
            if (o.groups < 1 || in.c % o.groups != 0 || o.out_channels % o.groups != 0) {
              throw ConfigError("pointwise " + std::to_string(in.c) + "->" +
                                std::to_string(o.out_channels) +
                                " not divisible by groups " + std::to_string(o.groups));
            }
            const Shape4 out{in.n, in.h, in.w, o.out_channels};
            const std::int64_t params = in.c * o.out_channels / o.groups;
            return LayerCost{out, params, area(out) * params, 0};
          },
          [&](const MixConvOp& o) {
            o.spec.validate();
            if (o.spec.in_channels() != in.c) {
              throw ConfigError("mixconv partitions " +
                                std::to_string(o.spec.in_channels()) +
                                " channels, input has " + std::to_string(in.c));
            }
            const Shape4 out =
                conv_output_shape(in, o.spec.group_geom(0), o.spec.out_channels());
            const std::int64_t params = mixconv_param_count(o.spec);
            return LayerCost{out, params, area(out) * params, 0};
          },
          [&](const DenseOp& o) {
            const Shape4 out{in.n, in.h, in.w, o.out_channels};
            const std::int64_t weights = in.c * o.out_channels;
            return LayerCost{out, weights + o.out_channels, area(out) * weights, 0};
          },
          [&](const BatchNormOp&) { return LayerCost{in, 2 * in.c, 0, 2 * in.c}; },
          [&](const SqueezeExciteOp& o) {
            const std::int64_t weights = 2 * in.c * o.reduced;
            return LayerCost{in, weights + o.reduced + in.c, weights, 0};
          },
          [&](const ActivationOp&) { return LayerCost{in, 0, 0, 0}; },
          [&](const PoolOp&) { return LayerCost{Shape4{in.n, 1, 1, in.c}, 0, 0, 0}; }},
      op);
}

std::int64_t CostReport::params_of(const std::string& op) const {
  std::int64_t total = 0;
  for (const auto& r : rows) {
    if (r.op == op) total += r.params;
  }
  return total;
}

std::int64_t CostReport::madds_of(const std::string& op) const {
  std::int64_t total = 0;
  for (const auto& r : rows) {
    if (r.op == op) total += r.madds;
  }
  return total;
}

std::int64_t CostReport::depthwise_params() const {
  return params_of("depthwise") + params_of("mixconv");
}

std::int64_t CostReport::depthwise_madds() const {
  return madds_of("depthwise") + madds_of("mixconv");
}

namespace {

class Planner {
 public:
  explicit Planner(Shape4 in) : shape_(in) {}

  void add(std::string name, LayerOp op) {
    const LayerCost cost = count_layer(op, shape_);
    layers_.push_back(PlannedLayer{std::move(name), std::move(op), shape_});
    shape_ = cost.out;
  }
  const Shape4& shape() const { return shape_; }
  std::vector<PlannedLayer> take() { return std::move(layers_); }

 private:
  Shape4 shape_;
  std::vector<PlannedLayer> layers_;
};

void plan_block(Planner& p, const std::string& name, const BlockConfig& b,
                std::int64_t in_c) {
  if (b.type == BlockType::kSeparable) {
    p.add(name + ".mixconv", MixConvOp{block_mix_spec(b, in_c)});
    p.add(name + ".mixconv_bn", BatchNormOp{});
    p.add(name + ".project", PointwiseOp{b.channels_out, b.project_groups});
    p.add(name + ".project_bn", BatchNormOp{});
    return;
  }
  const InvertedResidualSpec spec = block_ir_spec(b, in_c);
  spec.validate();
  if (spec.expansion != 1) {
    p.add(name + ".expand", PointwiseOp{spec.expanded_channels(), spec.expand_groups});
    p.add(name + ".expand_bn", BatchNormOp{});
  }
  p.add(name + ".mixconv", MixConvOp{spec.mix});
  p.add(name + ".mixconv_bn", BatchNormOp{});
  if (spec.se) {
    p.add(name + ".se", SqueezeExciteOp{spec.se->reduced_channels(in_c)});
  }
  p.add(name + ".project", PointwiseOp{spec.out_channels, spec.project_groups});
  p.add(name + ".project_bn", BatchNormOp{});
}

}  // namespace

std::vector<PlannedLayer> plan_model(const ModelConfig& config,
                                     std::int64_t resolution) {
  try {
    if (resolution < 1) throw ConfigError("resolution must be positive");
    if (config.head.classes < 1) throw ConfigError("classes must be positive");
    Planner p(Shape4{1, resolution, resolution, config.in_channels});
    p.add("stem.conv",
          ConvOp{ConvGeom{config.stem.kernel, config.stem.stride, 1, Padding::kSame, 1},
                 config.stem.channels});
    p.add("stem.bn", BatchNormOp{});
    for (std::size_t i = 0; i < config.blocks.size(); ++i) {
      plan_block(p, "blocks." + std::to_string(i), config.blocks[i], p.shape().c);
    }
    if (config.head.channels > 0) {
      p.add("head.conv", PointwiseOp{config.head.channels, 1});
      p.add("head.bn", BatchNormOp{});
    }
    p.add("head.pool", PoolOp{});
    p.add("head.dense", DenseOp{config.head.classes});
    return p.take();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("model '" + config.name + "': " + e.what());
  }
}

CostReport count_model(const ModelConfig& config, std::int64_t resolution) {
  CostReport report;
  for (const auto& layer : plan_model(config, resolution)) {
    const LayerCost cost = count_layer(layer.op, layer.in);
    report.rows.push_back(
        CostRow{layer.name, op_kind(layer.op), cost.out, cost.params, cost.madds});
    report.total_params += cost.params;
    report.total_madds += cost.madds;
    report.running_params += cost.running_params;
  }
  return report;
}

std::string cost_report_csv(const CostReport& report) {
  std::ostringstream os;
  os << "layer,op,out_h,out_w,out_c,params,madds\n";
  for (const auto& r : report.rows) {
    os << r.layer << ',' << r.op << ',' << r.out.h << ',' << r.out.w << ','
       << r.out.c << ',' << r.params << ',' << r.madds << '\n';
  }
  os << "total,,,,," << report.total_params << ',' << report.total_madds << '\n';
  return os.str();
}

nlohmann::json cost_report_json(const CostReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"layer", r.layer},
                    {"op", r.op},
                    {"out_h", r.out.h},
                    {"out_w", r.out.w},
                    {"out_c", r.out.c},
                    {"params", r.params},
                    {"madds", r.madds}});
  }
  rows.push_back({{"layer", "total"},
                  {"op", ""},
                  {"out_h", nullptr},
                  {"out_w", nullptr},
                  {"out_c", nullptr},
                  {"params", report.total_params},
                  {"madds", report.total_madds}});
  return rows;
}

}  // namespace mixconv
