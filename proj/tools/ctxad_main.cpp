/*
 * Copyright 2026 The ctxad Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. Flags patch the config document before validation,
// so a flag and its config field share one diagnostic path.

#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ctxad/errors.hpp"
#include "ctxad/harness.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
namespace h = ctxad::harness;

template <typename T>
void patch(json& doc, std::initializer_list<const char*> path, const std::optional<T>& v) {
  if (!v) return;
  json* node = &doc;
  for (const char* key : path) node = &(*node)[key];
  *node = *v;
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  std::optional<std::string> kind;
  std::optional<int> streams;
  std::optional<std::int64_t> duration;
  std::optional<double> noise;
  std::optional<std::int64_t> calibration_duration;
  std::optional<double> loss;
  std::optional<std::int64_t> latency;
  std::optional<std::int64_t> jitter;

  std::optional<std::int64_t> window;
  std::optional<std::int64_t> stride;
  std::optional<std::int64_t> d;
  std::optional<std::int64_t> k;
  std::optional<double> quantile;
  std::optional<double> epsilon_scale;
  std::optional<std::string> scorer;
  std::optional<int> top_k;
  std::optional<double> bound_sigmas;
  std::optional<double> step_sigmas;

  std::optional<int> bench_streams;
  std::optional<int> bench_windows;

  std::string telemetry, model, decisions, truth, latency_csv, interpretability, stream;
  std::optional<std::int64_t> start;
};

h::RunConfig build_config(const Flags& f) {
  json doc = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ctxad::ConfigError("config: cannot open '" + f.config + "'");
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ctxad::ConfigError("config: '" + f.config + "' is not valid JSON: " + e.what());
    }
  }
  patch(doc, {"seed"}, f.seed);
  patch(doc, {"out_dir"}, f.out_dir);
  patch(doc, {"scenario", "kind"}, f.kind);
  patch(doc, {"scenario", "streams"}, f.streams);
  patch(doc, {"scenario", "duration_s"}, f.duration);
  patch(doc, {"scenario", "noise_scale"}, f.noise);
  patch(doc, {"calibration", "duration_s"}, f.calibration_duration);
  patch(doc, {"network", "loss_prob"}, f.loss);
  patch(doc, {"network", "latency_ms"}, f.latency);
  patch(doc, {"network", "jitter_ms"}, f.jitter);
  patch(doc, {"pipeline", "window"}, f.window);
  patch(doc, {"pipeline", "stride"}, f.stride);
  patch(doc, {"pipeline", "d"}, f.d);
  patch(doc, {"pipeline", "k"}, f.k);
  patch(doc, {"pipeline", "quantile"}, f.quantile);
  patch(doc, {"pipeline", "epsilon_scale"}, f.epsilon_scale);
  patch(doc, {"pipeline", "scorer"}, f.scorer);
  patch(doc, {"pipeline", "top_k"}, f.top_k);
  patch(doc, {"pipeline", "rules", "bound_sigmas"}, f.bound_sigmas);
  patch(doc, {"pipeline", "rules", "step_sigmas"}, f.step_sigmas);
  patch(doc, {"bench", "streams"}, f.bench_streams);
  patch(doc, {"bench", "windows"}, f.bench_windows);
  return h::parse_run_config(doc);
}

void scenario_flags(CLI::App* app, Flags& f) {
  app->add_option("--kind", f.kind, "smartgrid or healthcare");
  app->add_option("--streams", f.streams, "number of streams");
  app->add_option("--duration", f.duration, "simulated seconds");
  app->add_option("--noise", f.noise, "noise multiplier");
  app->add_option("--calibration-duration", f.calibration_duration,
                  "seconds of clean calibration telemetry to emit");
  app->add_option("--loss", f.loss, "packet loss probability");
  app->add_option("--latency", f.latency, "fixed delivery latency (ms)");
  app->add_option("--jitter", f.jitter, "max delivery jitter (ms)");
}

void pipeline_flags(CLI::App* app, Flags& f) {
  app->add_option("--window", f.window, "window length L");
  app->add_option("--stride", f.stride, "window stride");
  app->add_option("--dim", f.d, "embedding dimension d");
  app->add_option("--context", f.k, "memory length k");
  app->add_option("--quantile", f.quantile, "threshold quantile q");
  app->add_option("--epsilon-scale", f.epsilon_scale, "covariance ridge scale");
  app->add_option("--top-k", f.top_k, "contributors per explanation");
  app->add_option("--bound-sigmas", f.bound_sigmas, "rule bound multiplier");
  app->add_option("--step-sigmas", f.step_sigmas, "rule rate multiplier");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctxad: contextual streaming anomaly detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", h::kVersion);
  Flags f;
  app.add_option("--config", f.config, "JSON run configuration");
  app.add_option("--seed", f.seed, "root seed");
  app.add_option("--out-dir", f.out_dir, "output directory");

  auto* simulate = app.add_subcommand("simulate", "generate telemetry and an event log");
  scenario_flags(simulate, f);
  pipeline_flags(simulate, f);

  auto* calibrate = app.add_subcommand("calibrate", "fit a model on clean telemetry");
  calibrate->add_option("--telemetry", f.telemetry, "telemetry JSONL")->required();
  pipeline_flags(calibrate, f);

  auto* detect = app.add_subcommand("detect", "score telemetry with a model");
  detect->add_option("--model", f.model, "model artifact")->required();
  detect->add_option("--telemetry", f.telemetry, "telemetry JSONL")->required();
  detect->add_option("--scorer", f.scorer, "mahalanobis, residual or both");

  auto* evaluate = app.add_subcommand("evaluate", "metrics from decisions and truth");
  evaluate->add_option("--decisions", f.decisions, "decisions JSONL")->required();
  evaluate->add_option("--truth", f.truth, "truth JSONL")->required();
  evaluate->add_option("--latency", f.latency_csv, "latency CSV");
  evaluate->add_option("--interpretability", f.interpretability, "interpretability JSON");

  auto* bench = app.add_subcommand("bench", "throughput and state under load");
  bench->add_option("--streams", f.bench_streams, "concurrent streams");
  bench->add_option("--windows", f.bench_windows, "windows per stream");
  pipeline_flags(bench, f);

  auto* explain = app.add_subcommand("explain-dump", "attributions with a numeric check");
  explain->add_option("--model", f.model, "model artifact")->required();
  explain->add_option("--telemetry", f.telemetry, "telemetry JSONL")->required();
  explain->add_option("--stream", f.stream, "stream id")->required();
  explain->add_option("--start", f.start, "window start slot (default: all)");
  explain->add_option("--scorer", f.scorer, "mahalanobis, residual or both");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ctxad::ExitCode::kConfig);
  }

  try {
    const auto config = build_config(f);
    if (*simulate) return h::cmd_simulate(config);
    if (*calibrate) return h::cmd_calibrate(config, f.telemetry);
    if (*detect) return h::cmd_detect(config, f.model, f.telemetry);
    if (*evaluate) {
      return h::cmd_evaluate(config, f.decisions, f.truth, f.latency_csv, f.interpretability);
    }
    if (*bench) return h::cmd_bench(config);
    if (*explain) return h::cmd_explain_dump(config, f.model, f.telemetry, f.stream, f.start);
  } catch (const std::exception& e) {
    return h::report_error(e);
  }
  return 0;
}
