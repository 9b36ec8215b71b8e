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

// mixconv command-line tool: cost accounting, kernel sweeps, gradient checks,
// oracle suites and toy training.
//
// Exit codes: 0 success, 1 check failure, 2 usage or configuration error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mixconv/accounting.hpp"
#include "mixconv/error.hpp"
#include "mixconv/model_zoo.hpp"
#include "mixconv/oracle.hpp"
#include "mixconv/sweep.hpp"
#include "mixconv/train.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

// Raised for unreadable inputs and unwritable outputs.
struct IoError : mixconv::Error {
  using Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out.flush()) throw IoError("write to '" + path + "' failed");
}

/// Writes `csv` to `out` (stdout when empty). With `json`, the JSON mirror
/// goes to `out`.json, or to stdout in place of the CSV.
void emit(const std::string& out, bool json, const std::string& csv,
          const nlohmann::json& rows) {
  const std::string json_text = rows.dump(2) + "\n";
  if (out.empty()) {
    std::cout << (json ? json_text : csv);
    return;
  }
  write_file(out, csv);
  if (json) write_file(out + ".json", json_text);
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("MIX_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw mixconv::ConfigError("MIX_SEED must be an unsigned integer");
    return v;
  }
  return 1;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

struct CountArgs {
  std::string model, config, out;
  std::int64_t resolution = 224;
  bool json = false;
};

int cmd_count(const CountArgs& a) {
  const mixconv::ModelConfig model =
      a.config.empty() ? mixconv::build_model(a.model) : mixconv::parse_config(read_file(a.config));
  const mixconv::CostReport report = mixconv::count_model(model, a.resolution);
  emit(a.out, a.json, mixconv::cost_report_csv(report), mixconv::cost_report_json(report));
  // Summary goes to stderr when stdout carries the CSV.
  std::ostream& summary = a.out.empty() ? std::cerr : std::cout;
  summary << model.name << " @" << a.resolution << ": params " << report.total_params << " ("
          << fmt("%.2f", report.total_params / 1e6) << "M), FLOPS (multiply-adds) "
          << report.total_madds << " (" << fmt("%.1f", report.total_madds / 1e6) << "M)\n";
  return kOk;
}

struct SweepArgs {
  std::string base = "mobilenet-v2", kernels = "3..13", mode = "depthwise", out;
  std::int64_t resolution = 224;
  bool json = false;
};

int cmd_sweep(const SweepArgs& a) {
  mixconv::SweepSpec spec;
  spec.base = a.base;
  spec.kernels = mixconv::parse_kernel_list(a.kernels);
  spec.mode = mixconv::parse_sweep_mode(a.mode);
  spec.resolution = a.resolution;
  const auto rows = mixconv::run_sweep(spec);
  emit(a.out, a.json, mixconv::sweep_csv(rows), mixconv::sweep_json(rows));
  return kOk;
}

struct CheckArgs {
  std::string op, suite, out;
  bool all = false, json = false;
  std::optional<std::uint64_t> seed;
  std::int64_t trials = 20;
  std::int64_t cases = 100;
};

int cmd_gradcheck(const CheckArgs& a) {
  const std::uint64_t seed = a.seed.value_or(default_seed());
  const std::vector<std::string> ops =
      a.all ? mixconv::gradcheck_ops() : std::vector<std::string>{a.op};
  if (a.trials < 1) throw mixconv::ConfigError("--trials must be positive");
  std::ostringstream csv;
  csv << "op,trials,max_rel_error,tolerance,passed\n";
  nlohmann::json rows = nlohmann::json::array();
  bool ok = true;
  for (const auto& op : ops) {
    const mixconv::GradcheckReport r = mixconv::gradcheck(op, a.trials, seed);
    ok = ok && r.passed();
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.op << " trials=" << r.trials
              << " max_rel_error=" << fmt("%.3e", r.max_rel_error)
              << " tolerance=" << fmt("%.0e", r.tolerance) << '\n';
    csv << r.op << ',' << r.trials << ',' << fmt("%.17g", r.max_rel_error) << ','
        << fmt("%.17g", r.tolerance) << ',' << (r.passed() ? 1 : 0) << '\n';
    rows.push_back({{"op", r.op},
                    {"trials", r.trials},
                    {"max_rel_error", r.max_rel_error},
                    {"tolerance", r.tolerance},
                    {"passed", r.passed()}});
  }
  if (!a.out.empty()) emit(a.out, a.json, csv.str(), rows);
  return ok ? kOk : kCheckFailed;
}

int cmd_oracle(const CheckArgs& a) {
  const std::uint64_t seed = a.seed.value_or(default_seed());
  const std::vector<std::string> suites =
      a.all ? mixconv::oracle::suite_names() : std::vector<std::string>{a.suite};
  std::ostringstream csv;
  csv << "suite,cases,max_abs_diff,passed\n";
  nlohmann::json rows = nlohmann::json::array();
  bool ok = true;
  for (const auto& suite : suites) {
    const mixconv::oracle::SuiteReport r = mixconv::oracle::run_suite(suite, a.cases, seed);
    ok = ok && r.passed();
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.suite << " cases=" << r.cases
              << " max_abs_diff=" << fmt("%.3e", r.max_abs_diff) << '\n';
    csv << r.suite << ',' << r.cases << ',' << fmt("%.17g", r.max_abs_diff) << ','
        << (r.passed() ? 1 : 0) << '\n';
    rows.push_back({{"suite", r.suite},
                    {"cases", r.cases},
                    {"max_abs_diff", r.max_abs_diff},
                    {"passed", r.passed()}});
  }
  if (!a.out.empty()) emit(a.out, a.json, csv.str(), rows);
  return ok ? kOk : kCheckFailed;
}

struct TrainArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  bool json = false;
};

int cmd_train(const TrainArgs& a) {
  mixconv::TrainConfig cfg;
  bool seed_in_file = false;
  if (a.config.empty()) {
    cfg = mixconv::toy_train_config();
  } else {
    const std::string text = read_file(a.config);
    cfg = mixconv::parse_train_config(text);
    const auto j = nlohmann::json::parse(text);
    seed_in_file = j.contains("train") && j.at("train").contains("seed");
  }
  if (a.seed) {
    cfg.seed = *a.seed;
  } else if (!seed_in_file) {
    cfg.seed = default_seed();
  }
  if (a.steps) cfg.steps = *a.steps;
  try {
    const mixconv::RunLog log = mixconv::train(cfg);
    emit(a.out, a.json, mixconv::run_log_csv(log), mixconv::run_log_json(log));
    if (!a.out.empty() && !log.entries.empty()) {
      const auto& last = log.entries.back();
      std::cout << "step " << last.step << ": loss " << fmt("%.6f", last.loss)
                << ", train accuracy " << fmt("%.4f", last.accuracy) << '\n';
    }
  } catch (const mixconv::TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Keep large tensor buffers on the heap between training steps.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"Mixed depthwise convolution toolkit"};
  app.require_subcommand(1);

  CountArgs count;
  auto* c = app.add_subcommand("count", "Parameter and multiply-add counts of a model");
  auto* c_model = c->add_option("--model", count.model, "Zoo model name");
  auto* c_config = c->add_option("--config", count.config, "Model config JSON file");
  c_model->excludes(c_config);
  c->add_option("--resolution", count.resolution, "Square input side")->capture_default_str();
  c->add_option("--out", count.out, "CSV output file (stdout when omitted)");
  c->add_flag("--json", count.json, "Also write a JSON mirror of the CSV");

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Cost of each kernel-list prefix");
  s->add_option("--base", sweep.base, "mobilenet-v1 or mobilenet-v2")->capture_default_str();
  s->add_option("--kernels", sweep.kernels, "Odd kernels, '3,5,7' or '3..13'")
      ->capture_default_str();
  s->add_option("--mode", sweep.mode, "depthwise, mixconv, mixconv-exp or mixconv-dilated")
      ->capture_default_str();
  s->add_option("--resolution", sweep.resolution, "Square input side")->capture_default_str();
  s->add_option("--out", sweep.out, "CSV output file (stdout when omitted)");
  s->add_flag("--json", sweep.json, "Also write a JSON mirror of the CSV");

  CheckArgs grad;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  auto* g_op = g->add_option("--op", grad.op, "Registered op");
  auto* g_all = g->add_flag("--all", grad.all, "Check every registered op");
  g_op->excludes(g_all);
  g->add_option("--seed", grad.seed, "Seed (default $MIX_SEED or 1)");
  g->add_option("--trials", grad.trials, "Random trials per op")->capture_default_str();
  g->add_option("--out", grad.out, "CSV report file");
  g->add_flag("--json", grad.json, "Also write a JSON mirror of the CSV");

  CheckArgs orc;
  auto* o = app.add_subcommand("oracle", "Compare kernels against reference implementations");
  auto* o_suite = o->add_option("--suite", orc.suite, "Suite name");
  auto* o_all = o->add_flag("--all", orc.all, "Run every suite");
  o_suite->excludes(o_all);
  o->add_option("--cases", orc.cases, "Random cases")->capture_default_str();
  o->add_option("--seed", orc.seed, "Seed (default $MIX_SEED or 1)");
  o->add_option("--out", orc.out, "CSV report file");
  o->add_flag("--json", orc.json, "Also write a JSON mirror of the CSV");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on the synthetic texture task");
  t->add_option("--config", tr.config, "Model JSON with a train section (toy net when omitted)");
  t->add_option("--out", tr.out, "Run-log CSV file (stdout when omitted)");
  t->add_option("--seed", tr.seed, "Overrides the config seed");
  t->add_option("--steps", tr.steps, "Overrides the config step count");
  t->add_flag("--json", tr.json, "Also write a JSON mirror of the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (c->parsed()) {
      if (count.model.empty() && count.config.empty()) {
        throw mixconv::ConfigError("count needs --model or --config");
      }
      return cmd_count(count);
    }
    if (s->parsed()) return cmd_sweep(sweep);
    if (g->parsed()) {
      if (grad.op.empty() && !grad.all) throw mixconv::ConfigError("gradcheck needs --op or --all");
      return cmd_gradcheck(grad);
    }
    if (o->parsed()) {
      if (orc.suite.empty() && !orc.all) throw mixconv::ConfigError("oracle needs --suite or --all");
      return cmd_oracle(orc);
    }
    if (t->parsed()) return cmd_train(tr);
  } catch (const mixconv::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
