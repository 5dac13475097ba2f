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

#ifndef CTXAD_HARNESS_HPP_
#define CTXAD_HARNESS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxad/eval.hpp"
#include "ctxad/explain.hpp"
#include "ctxad/pipeline.hpp"
#include "ctxad/simgen.hpp"
#include "json.hpp"

namespace ctxad::harness {

inline constexpr const char* kVersion = "0.1.0";

// Randomized event placement used when a config asks for an anomaly mix
// instead of listing events explicitly.
struct KindPlan {
  sim::AnomalyKind kind = sim::AnomalyKind::kSpike;
  std::int64_t duration = 4;
  double magnitude = 6.0;
};

struct EventPlan {
  double anomalous_fraction = 0.02;  // of windows
  std::vector<KindPlan> kinds;
  std::int64_t margin = 0;  // extra clean samples between events; 0 = window length
};

struct BenchConfig {
  int streams = 1000;
  int windows = 50;
  int calibration_streams = 4;
  std::int64_t calibration_duration_s = 3600;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<sim::ScenarioSpec> scenario;
  // Duration of the clean calibration scenario written next to the telemetry;
  // unset means none.
  std::optional<std::int64_t> calibration_duration_s;
  std::vector<sim::AnomalyEvent> events;
  std::optional<EventPlan> plan;
  sim::NetworkEffects network;
  PipelineConfig pipeline;
  std::vector<Scorer> scorers{Scorer::kMahalanobis};
  BenchConfig bench;
  std::string out_dir = ".";

  nlohmann::ordered_json snapshot() const;
};

// Unknown fields are rejected; every error names the offending field.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);
std::vector<Scorer> parse_scorers(const std::string& text);

// Seeds of every random component, all derived from the single config seed.
std::uint64_t scenario_seed(const RunConfig& c);
std::uint64_t calibration_seed(const RunConfig& c);
std::uint64_t plan_seed(const RunConfig& c);
std::uint64_t injection_seed(const RunConfig& c);
std::uint64_t network_seed(const RunConfig& c);

std::vector<sim::AnomalyEvent> plan_events(const sim::ScenarioSpec& spec, const EventPlan& plan,
                                           Eigen::Index window_length, std::uint64_t seed);

struct Simulation {
  std::vector<SensorReading> telemetry;
  std::vector<sim::EventLogEntry> events;
  std::vector<SensorReading> calibration;  // empty unless configured
};
Simulation simulate(const RunConfig& config);

struct DecisionRecord {
  std::string stream;
  std::int64_t start = 0;
  std::string detector;
  double score = 0.0;
  double theta = 0.0;
  int decision = 0;
};

struct TruthRecord {
  std::string stream;
  std::int64_t start = 0;
  int label = 0;
};

struct LatencyRecord {
  std::string stream;
  std::int64_t start = 0;
  std::string detector;
  std::int64_t latency_ns = 0;
};

std::string detector_id(Scorer scorer);
inline constexpr const char* kRulesDetector = "rules";

struct Detection {
  std::vector<DecisionRecord> decisions;
  std::vector<TruthRecord> truth;
  std::vector<ExplanationRecord> explanations;
  std::vector<LatencyRecord> latency;
  // Per contextual detector.
  std::map<std::string, InterpretabilityMetrics> interpretability;
  // Full attribution maps of flagged windows, keyed like explanations.
  std::vector<Attribution> attributions;
};

// Streams run on a worker pool, each worker owning whole streams; results are
// merged in stream order so the output does not depend on scheduling.
Detection detect(const Model& model, const StreamWindows& windows,
                 const std::vector<Scorer>& scorers, int workers = 0);

struct DetectorReport {
  std::string detector;
  eval::ConfusionCounts counts;
  eval::PrecisionRecall prf;
  eval::AccuracyFpr acc;
  std::optional<eval::RocCurve> roc;  // unset when AUC is undefined
  std::optional<eval::LatencyStats> latency;
  std::optional<InterpretabilityMetrics> interpretability;
  std::vector<std::pair<DecisionRecord, int>> timeline;  // decision, truth
};

// Joins on (stream, start); throws JoinError listing orphans.
std::vector<DetectorReport> evaluate(const std::vector<DecisionRecord>& decisions,
                                     const std::vector<TruthRecord>& truth,
                                     const std::vector<LatencyRecord>& latency = {},
                                     const std::map<std::string, InterpretabilityMetrics>&
                                         interpretability = {});

struct BenchTier {
  std::string name;
  int streams = 0;
  std::int64_t windows = 0;
  eval::LatencyStats latency;
  double windows_per_second = 0.0;
  std::size_t state_bytes = 0;
};

struct BenchReport {
  int streams = 0;
  int windows_per_stream = 0;
  std::int64_t windows_processed = 0;
  std::size_t latency_samples = 0;
  double windows_per_second = 0.0;
  std::size_t model_bytes = 0;
  std::size_t stream_state_bytes = 0;  // all streams, full tier
  std::size_t per_stream_state_bytes = 0;
  std::size_t state_bytes = 0;  // model + streams
  std::int64_t peak_rss_kb = 0;
  std::vector<BenchTier> tiers;  // low, medium, high; high is the full run
};

BenchReport bench(const RunConfig& config, int workers = 0);

// File-level commands. Each returns the process exit code and writes a
// manifest (config snapshot, digests, phase timings) into the output dir.
int cmd_simulate(const RunConfig& config);
int cmd_calibrate(const RunConfig& config, const std::string& telemetry_path);
int cmd_detect(const RunConfig& config, const std::string& model_path,
               const std::string& telemetry_path);
int cmd_evaluate(const RunConfig& config, const std::string& decisions_path,
                 const std::string& truth_path, const std::string& latency_path,
                 const std::string& interpretability_path);
int cmd_bench(const RunConfig& config);
int cmd_explain_dump(const RunConfig& config, const std::string& model_path,
                     const std::string& telemetry_path, const std::string& stream,
                     std::optional<std::int64_t> start);

// Maps a library exception onto the exit-code contract and prints it.
int report_error(const std::exception& e);

std::string sha256_file(const std::string& path);

std::vector<DecisionRecord> read_decisions(const std::string& path);
std::vector<TruthRecord> read_truth(const std::string& path);
std::vector<LatencyRecord> read_latency(const std::string& path);

}  // namespace ctxad::harness

#endif  // CTXAD_HARNESS_HPP_
