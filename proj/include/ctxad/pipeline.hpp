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

#ifndef CTXAD_PIPELINE_HPP_
#define CTXAD_PIPELINE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctxad/context_engine.hpp"
#include "ctxad/detector.hpp"
#include "ctxad/preprocess.hpp"
#include "ctxad/rules.hpp"
#include "ctxad/telemetry.hpp"

namespace ctxad {

enum class Scorer { kMahalanobis, kResidual };
std::string to_string(Scorer scorer);
Scorer parse_scorer(const std::string& text);

struct PipelineConfig {
  Eigen::Index window_length = 12;
  Eigen::Index stride = 1;
  int denoise_width = 3;
  int gap_limit = 3;
  Eigen::Index embed_dim = 16;
  Eigen::Index context_length = 8;
  std::uint64_t seed = 0;
  double quantile = 0.995;
  double epsilon_scale = 1e-6;
  bool per_stream_baseline = true;
  RuleOptions rules;
  int top_k = 5;
  std::int64_t sample_period_ms = 5000;

  void validate() const;
};

struct Model {
  PipelineConfig config;
  std::vector<std::string> channels;
  NormalizerState<double> normalizer;
  EncoderParams<double> encoder;
  BaselineModel<double> global_baseline;
  std::map<std::string, BaselineModel<double>> stream_baselines;
  RuleSet rules;
  std::optional<ResidualHead<double>> residual;
  double residual_theta = std::numeric_limits<double>::quiet_NaN();
  std::int64_t calibration_windows = 0;

  // Per-stream baseline when enabled and fitted, the global one otherwise.
  const BaselineModel<double>& baseline_for(const std::string& stream_id) const;
  std::size_t state_bytes() const;
};

struct PreparedWindow {
  Eigen::MatrixXd denoised;    // N x L, raw units
  Eigen::MatrixXd normalized;  // N x L
  Eigen::MatrixXi selected;    // median source column per cell
};

PreparedWindow prepare_window(const Model& model, const Eigen::MatrixXd& raw);

// Channel-major flattening: cell (i, j) lands at i * L + j.
Eigen::VectorXd flatten_window(const Eigen::MatrixXd& normalized);

// Inputs of one step that do not depend on the current window: the memory
// context and the residual head's prediction. Gradients hold these fixed.
struct FrozenStep {
  Eigen::VectorXd context;
  Eigen::VectorXd prediction;  // empty without a residual head
};

struct StreamState {
  MemoryBuffer<double> memory;
  std::optional<Eigen::VectorXd> previous_attended;

  explicit StreamState(const Model& model);
  std::size_t state_bytes() const;
};

struct WindowScore {
  EncodedStep<double> step;
  FrozenStep frozen;
  double mahalanobis = 0.0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  RuleVerdict rules;
};

struct WindowTiming {
  std::int64_t contextual_ns = 0;
  std::int64_t rules_ns = 0;
};

// One streaming step: prepare, encode (advancing memory), score with every
// available scorer and the rule baseline.
WindowScore score_window(const Model& model, StreamState& state, const WindowFrame& window,
                         WindowTiming* timing = nullptr);

// Score of a raw window under a frozen step, without touching stream state.
double frozen_score(const Model& model, const BaselineModel<double>& baseline,
                    const FrozenStep& frozen, Scorer scorer, const Eigen::MatrixXd& raw);

// ||flatten(normalized) - prediction|| under a frozen step.
double frozen_residual_distance(const Model& model, const FrozenStep& frozen,
                                const Eigen::MatrixXd& raw);

double score_of(const WindowScore& s, Scorer scorer);
double threshold_of(const Model& model, const std::string& stream_id, Scorer scorer);

// Windows per stream, each list in stream time order.
using StreamWindows = std::map<std::string, std::vector<WindowFrame>>;

// Aligns and windows readings with the pipeline's grid and window settings.
// Streams whose channel set differs from `channels` raise SchemaError.
StreamWindows window_readings(std::span<const SensorReading> readings,
                              std::span<const std::string> channels,
                              const PipelineConfig& config);

// Channel order taken from first appearance in the telemetry.
std::vector<std::string> channel_order(std::span<const SensorReading> readings);

// Fits normalizer, encoder, global and per-stream baselines with thresholds,
// the rule set and (when enough pairs exist) the residual head. Throws
// CalibrationError when fewer than d + 1 windows are available.
Model calibrate(const PipelineConfig& config, std::span<const std::string> channels,
                const StreamWindows& windows);

}  // namespace ctxad

#endif  // CTXAD_PIPELINE_HPP_
