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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "mixconv/accounting.hpp"
#include "mixconv/conv_ops.hpp"
#include "mixconv/error.hpp"
#include "mixconv/mixconv.hpp"
#include "mixconv/model_zoo.hpp"
#include "mixconv/oracle.hpp"
#include "mixconv/sweep.hpp"
#include "mixconv/train.hpp"

namespace py = pybind11;
using namespace mixconv;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  if (a.ndim() != 4) throw ShapeError("expected a 4-d NHWC array");
  const Shape4 shape{a.shape(0), a.shape(1), a.shape(2), a.shape(3)};
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  const Shape4& s = t.shape();
  Array out({s.n, s.h, s.w, s.c});
  const std::vector<double> v = t.to_vector();
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

ConvGeom make_geom(std::int64_t kernel, std::int64_t stride, std::int64_t dilation,
                   const std::string& padding, std::int64_t multiplier) {
  if (padding != "same" && padding != "valid") {
    throw ConfigError("padding must be 'same' or 'valid'");
  }
  return ConvGeom{kernel, stride, dilation, padding == "same" ? Padding::kSame : Padding::kValid,
                  multiplier};
}

ModelConfig resolve_model(const std::string& name_or_json) {
  if (!name_or_json.empty() && name_or_json.front() == '{') return parse_config(name_or_json);
  return build_model(name_or_json);
}

py::dict report_dict(const CostReport& r) {
  py::list rows;
  for (const CostRow& row : r.rows) {
    py::dict d;
    d["layer"] = row.layer;
    d["op"] = row.op;
    d["out"] = py::make_tuple(row.out.h, row.out.w, row.out.c);
    d["params"] = row.params;
    d["madds"] = row.madds;
    rows.append(d);
  }
  py::dict out;
  out["rows"] = rows;
  out["params"] = r.total_params;
  out["madds"] = r.total_madds;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mixed depthwise convolution kernels, cost accounting and model zoo";

  auto& base = py::register_exception<Error>(m, "MixConvError", PyExc_ValueError);
  py::register_exception<LookupError>(m, "UnknownNameError", base.ptr());
  py::register_exception<TrainingDivergedError>(m, "TrainingDivergedError", base.ptr());

  m.def("partition_equal", &partition_equal, py::arg("channels"), py::arg("groups"));
  m.def("partition_exponential", &partition_exponential, py::arg("channels"), py::arg("groups"));
  m.def("default_kernels", &default_kernels, py::arg("groups"));

  m.def(
      "depthwise",
      [](const Array& x, const Array& w, std::int64_t stride, std::int64_t dilation,
         const std::string& padding) {
        const Tensor wt = to_tensor(w);
        const ConvGeom g = make_geom(wt.shape().n, stride, dilation, padding, wt.shape().c);
        return to_array(depthwise_forward(to_tensor(x), wt, g));
      },
      py::arg("x"), py::arg("w"), py::arg("stride") = 1, py::arg("dilation") = 1,
      py::arg("padding") = "same",
      "Depthwise convolution; x is (N,H,W,C), w is (k,k,C,m).");

  m.def(
      "pointwise",
      [](const Array& x, const Array& w, std::int64_t groups) {
        return to_array(pointwise_forward(to_tensor(x), to_tensor(w), groups));
      },
      py::arg("x"), py::arg("w"), py::arg("groups") = 1);

  m.def(
      "mixconv",
      [](const Array& x, const std::vector<Array>& kernels, std::vector<std::int64_t> channels,
         std::int64_t stride, std::vector<std::int64_t> dilations) {
        MixConvSpec spec;
        std::vector<Tensor> ks;
        for (const Array& k : kernels) {
          ks.push_back(to_tensor(k));
          spec.kernels.push_back(ks.back().shape().n);
          spec.multiplier = ks.back().shape().c;
        }
        spec.channels = std::move(channels);
        spec.dilations = std::move(dilations);
        spec.stride = stride;
        spec.validate();
        return to_array(mixconv_forward(to_tensor(x), ks, spec));
      },
      py::arg("x"), py::arg("kernels"), py::arg("channels"), py::arg("stride") = 1,
      py::arg("dilations") = std::vector<std::int64_t>{},
      "Mixed depthwise convolution; kernels[t] is (k_t,k_t,channels[t],m).");

  m.def("model_names", &model_names);
  m.def(
      "model_config", [](const std::string& name) { return serialize_config(build_model(name)); },
      py::arg("name"), "JSON text of a zoo model.");
  m.def(
      "count",
      [](const std::string& model, std::int64_t resolution) {
        return report_dict(count_model(resolve_model(model), resolution));
      },
      py::arg("model"), py::arg("resolution") = 224,
      "Cost report of a zoo model name or a JSON config.");

  m.def(
      "sweep",
      [](const std::string& base, const std::string& kernels, const std::string& mode,
         std::int64_t resolution) {
        SweepSpec s;
        s.base = base;
        s.kernels = parse_kernel_list(kernels);
        s.mode = parse_sweep_mode(mode);
        s.resolution = resolution;
        py::list out;
        for (const SweepRow& r : run_sweep(s)) {
          out.append(py::make_tuple(r.max_kernel, to_string(r.mode), r.params, r.madds));
        }
        return out;
      },
      py::arg("base") = "mobilenet-v2", py::arg("kernels") = "3..13",
      py::arg("mode") = "depthwise", py::arg("resolution") = 224);

  m.def("gradcheck_ops", &gradcheck_ops);
  m.def(
      "gradcheck",
      [](const std::string& op, std::int64_t trials, std::uint64_t seed) {
        const GradcheckReport r = gradcheck(op, trials, seed);
        return py::make_tuple(r.max_rel_error, r.tolerance, r.passed());
      },
      py::arg("op"), py::arg("trials") = 20, py::arg("seed") = 1,
      "(max relative error, tolerance, passed)");

  m.def("oracle_suites", &oracle::suite_names);
  m.def(
      "oracle",
      [](const std::string& suite, std::int64_t cases, std::uint64_t seed) {
        return oracle::run_suite(suite, cases, seed).max_abs_diff;
      },
      py::arg("suite"), py::arg("cases") = 100, py::arg("seed") = 1,
      "Largest absolute difference against the reference implementation.");

  m.def(
      "train",
      [](std::optional<std::string> config, std::optional<std::int64_t> steps,
         std::optional<std::uint64_t> seed) {
        TrainConfig c = config ? parse_train_config(*config) : toy_train_config();
        if (steps) c.steps = *steps;
        if (seed) c.seed = *seed;
        RunLog log;
        {
          py::gil_scoped_release release;
          log = train(c);
        }
        py::list out;
        for (const LogEntry& e : log.entries) out.append(py::make_tuple(e.step, e.loss, e.accuracy));
        return out;
      },
      py::arg("config") = py::none(), py::arg("steps") = py::none(), py::arg("seed") = py::none(),
      "Train on the synthetic texture task; returns (step, loss, accuracy) tuples.");
}
