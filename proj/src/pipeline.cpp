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

#include "ctxad/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "ctxad/errors.hpp"
#include "ctxad/rng.hpp"

namespace ctxad {

std::string to_string(Scorer scorer) {
  return scorer == Scorer::kMahalanobis ? "mahalanobis" : "residual";
}

Scorer parse_scorer(const std::string& text) {
  if (text == "mahalanobis") return Scorer::kMahalanobis;
  if (text == "residual") return Scorer::kResidual;
  throw ConfigError("scorer: expected 'mahalanobis' or 'residual', got '" + text + "'");
}

void PipelineConfig::validate() const {
  if (window_length < 1) throw ConfigError("window: must be >= 1");
  if (stride < 1) throw ConfigError("stride: must be >= 1");
  if (denoise_width < 1 || denoise_width % 2 == 0) {
    throw ConfigError("denoise_width: must be an odd integer >= 1");
  }
  if (gap_limit < 0) throw ConfigError("gap_limit: must be >= 0");
  if (embed_dim < 1) throw ConfigError("d: must be >= 1");
  if (context_length < 1) throw ConfigError("k: must be >= 1");
  if (!(quantile >= 0.0 && quantile <= 1.0)) throw ConfigError("quantile: must be in [0, 1]");
  if (!(epsilon_scale >= 0.0)) throw ConfigError("epsilon_scale: must be >= 0");
  if (top_k < 1) throw ConfigError("top_k: must be >= 1");
  if (sample_period_ms <= 0) throw ConfigError("sample_period_ms: must be > 0");
  if (!(rules.bound_sigmas > 0.0) || !(rules.step_sigmas > 0.0)) {
    throw ConfigError("rules: sigma multipliers must be > 0");
  }
}

const BaselineModel<double>& Model::baseline_for(const std::string& stream_id) const {
  if (config.per_stream_baseline) {
    if (const auto it = stream_baselines.find(stream_id); it != stream_baselines.end()) {
      return it->second;
    }
  }
  return global_baseline;
}

namespace {

template <typename M>
std::size_t bytes_of(const M& m) {
  return static_cast<std::size_t>(m.size()) * sizeof(typename M::Scalar);
}

std::size_t baseline_bytes(const BaselineModel<double>& b) {
  return sizeof(b) + bytes_of(b.mu) + bytes_of(b.sigma) + bytes_of(b.sigma_inv);
}

}  // namespace

std::size_t Model::state_bytes() const {
  std::size_t total = sizeof(*this);
  total += bytes_of(normalizer.min) + bytes_of(normalizer.max);
  total += bytes_of(encoder.embed_weight) + bytes_of(encoder.embed_bias) +
           bytes_of(encoder.state_weight) + bytes_of(encoder.context_weight) +
           bytes_of(encoder.score_vector);
  total += baseline_bytes(global_baseline);
  for (const auto& [id, b] : stream_baselines) total += id.capacity() + baseline_bytes(b);
  total += rules.rules.size() * sizeof(ChannelRule);
  if (residual) total += bytes_of(residual->weights);
  return total;
}

PreparedWindow prepare_window(const Model& model, const Eigen::MatrixXd& raw) {
  if (raw.rows() != static_cast<Eigen::Index>(model.channels.size())) {
    throw DimensionError("window has " + std::to_string(raw.rows()) + " channels, model expects " +
                         std::to_string(model.channels.size()));
  }
  if (raw.cols() != model.config.window_length) {
    throw DimensionError("window length does not match model");
  }
  PreparedWindow out;
  out.denoised = median_filter_rows(raw, model.config.denoise_width, &out.selected);
  out.normalized = normalize_rows(out.denoised, model.normalizer);
  return out;
}

Eigen::VectorXd flatten_window(const Eigen::MatrixXd& normalized) {
  return normalized.transpose().reshaped();
}

StreamState::StreamState(const Model& model)
    : memory(model.config.context_length, model.encoder.dim()) {}

std::size_t StreamState::state_bytes() const {
  std::size_t total = sizeof(*this) - sizeof(memory) + memory.state_bytes();
  if (previous_attended) total += bytes_of(*previous_attended);
  return total;
}

WindowScore score_window(const Model& model, StreamState& state, const WindowFrame& window,
                         WindowTiming* timing) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const auto& baseline = model.baseline_for(window.stream_id);
  const PreparedWindow prepared = prepare_window(model, window.values);
  WindowScore s;
  s.frozen.context = context_vector(state.memory);
  s.step = encode_step(prepared.normalized, state.memory, model.encoder);
  s.mahalanobis = mahalanobis_score(s.step.attended, baseline);
  if (model.residual) {
    const Eigen::VectorXd& source =
        state.previous_attended ? *state.previous_attended : s.step.attended;
    s.frozen.prediction = model.residual->predict(source);
    s.residual = residual_score(flatten_window(prepared.normalized), s.frozen.prediction);
  }
  state.previous_attended = s.step.attended;
  const auto t1 = Clock::now();
  s.rules = rule_detect(window, model.rules);
  if (timing) {
    const auto t2 = Clock::now();
    timing->contextual_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
    timing->rules_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t2 - t1).count();
  }
  return s;
}

double frozen_score(const Model& model, const BaselineModel<double>& baseline,
                    const FrozenStep& frozen, Scorer scorer, const Eigen::MatrixXd& raw) {
  const PreparedWindow prepared = prepare_window(model, raw);
  if (scorer == Scorer::kResidual) {
    if (frozen.prediction.size() == 0) throw ParameterError("model has no residual head");
    return residual_score(flatten_window(prepared.normalized), frozen.prediction);
  }
  const Eigen::MatrixXd h = embed_sensors(prepared.normalized, model.encoder);
  const Eigen::VectorXd alpha = attention_weights(h, frozen.context, model.encoder);
  return mahalanobis_score(attended_vector(h, alpha), baseline);
}

double frozen_residual_distance(const Model& model, const FrozenStep& frozen,
                                const Eigen::MatrixXd& raw) {
  const PreparedWindow prepared = prepare_window(model, raw);
  return (flatten_window(prepared.normalized) - frozen.prediction).norm();
}

double score_of(const WindowScore& s, Scorer scorer) {
  return scorer == Scorer::kMahalanobis ? s.mahalanobis : s.residual;
}

double threshold_of(const Model& model, const std::string& stream_id, Scorer scorer) {
  return scorer == Scorer::kMahalanobis ? model.baseline_for(stream_id).theta
                                        : model.residual_theta;
}

std::vector<std::string> channel_order(std::span<const SensorReading> readings) {
  std::vector<std::string> out;
  for (const auto& r : readings) {
    if (std::find(out.begin(), out.end(), r.channel_id) == out.end()) out.push_back(r.channel_id);
  }
  return out;
}

StreamWindows window_readings(std::span<const SensorReading> readings,
                              std::span<const std::string> channels,
                              const PipelineConfig& config) {
  const std::set<std::string> expected(channels.begin(), channels.end());
  StreamWindows out;
  for (const auto& [stream, group] : group_by_stream(readings)) {
    std::set<std::string> present;
    for (const auto& r : group) present.insert(r.channel_id);
    if (present != expected) {
      std::string have, want;
      for (const auto& c : present) have += (have.empty() ? "" : ",") + c;
      for (const auto& c : expected) want += (want.empty() ? "" : ",") + c;
      throw SchemaError("stream '" + stream + "' has channels {" + have + "}, expected {" +
                        want + "}");
    }
    StreamSchema schema{stream, {channels.begin(), channels.end()}, config.sample_period_ms};
    const auto aligned = align_readings(group, schema, config.gap_limit);
    out[stream] = make_windows(aligned, config.window_length, config.stride);
  }
  return out;
}

Model calibrate(const PipelineConfig& config, std::span<const std::string> channels,
                const StreamWindows& windows) {
  config.validate();
  if (channels.empty()) throw CalibrationError("calibration telemetry has no channels");
  std::int64_t total = 0;
  for (const auto& [id, list] : windows) total += static_cast<std::int64_t>(list.size());
  const std::int64_t required = config.embed_dim + 1;
  if (total < required) {
    throw CalibrationError("calibration needs at least d + 1 = " + std::to_string(required) +
                           " windows, got " + std::to_string(total));
  }

  Model model;
  model.config = config;
  model.channels.assign(channels.begin(), channels.end());
  model.calibration_windows = total;

  std::vector<WindowFrame> all_raw;
  std::vector<WindowFrame> all_denoised;
  all_raw.reserve(static_cast<std::size_t>(total));
  all_denoised.reserve(static_cast<std::size_t>(total));
  for (const auto& [id, list] : windows) {
    for (const auto& w : list) {
      all_raw.push_back(w);
      all_denoised.push_back(denoise(w, config.denoise_width));
    }
  }
  model.normalizer = fit_normalizer(all_denoised);
  model.rules = fit_rules(all_raw, channels, config.rules);
  model.encoder = init_params<double>(config.embed_dim, config.window_length,
                                      config.context_length,
                                      derive_seed(config.seed, {"encoder"}));

  // Encode every stream in time order with its own memory.
  struct Encoded {
    Eigen::MatrixXd attended;   // rows
    Eigen::MatrixXd flattened;  // rows
  };
  std::map<std::string, Encoded> encoded;
  const Eigen::Index d = config.embed_dim;
  const Eigen::Index flat = static_cast<Eigen::Index>(channels.size()) * config.window_length;
  Eigen::MatrixXd all_attended(total, d);
  Eigen::Index row = 0;
  for (const auto& [id, list] : windows) {
    MemoryBuffer<double> memory(config.context_length, d);
    Encoded e{Eigen::MatrixXd(static_cast<Eigen::Index>(list.size()), d),
              Eigen::MatrixXd(static_cast<Eigen::Index>(list.size()), flat)};
    for (std::size_t t = 0; t < list.size(); ++t) {
      const auto prepared = prepare_window(model, list[t].values);
      const auto step = encode_step(prepared.normalized, memory, model.encoder);
      e.attended.row(static_cast<Eigen::Index>(t)) = step.attended.transpose();
      e.flattened.row(static_cast<Eigen::Index>(t)) =
          flatten_window(prepared.normalized).transpose();
      all_attended.row(row++) = step.attended.transpose();
    }
    encoded.emplace(id, std::move(e));
  }

  auto scores_under = [](const BaselineModel<double>& b, const Eigen::MatrixXd& rows) {
    std::vector<double> s(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      s[static_cast<std::size_t>(i)] = mahalanobis_score(rows.row(i).transpose(), b);
    }
    return s;
  };

  model.global_baseline = fit_baseline(all_attended, config.epsilon_scale);
  model.global_baseline.theta =
      select_threshold(scores_under(model.global_baseline, all_attended), config.quantile);
  if (config.per_stream_baseline) {
    for (const auto& [id, e] : encoded) {
      if (e.attended.rows() < required) continue;
      auto b = fit_baseline(e.attended, config.epsilon_scale);
      b.theta = select_threshold(scores_under(b, e.attended), config.quantile);
      model.stream_baselines.emplace(id, std::move(b));
    }
  }

  // Residual head: attended vector at t -> flattened window at t + 1.
  Eigen::Index pairs = 0;
  for (const auto& [id, e] : encoded) pairs += std::max<Eigen::Index>(e.attended.rows() - 1, 0);
  if (pairs >= d) {
    Eigen::MatrixXd inputs(pairs, d);
    Eigen::MatrixXd targets(pairs, flat);
    Eigen::Index k = 0;
    for (const auto& [id, e] : encoded) {
      for (Eigen::Index t = 0; t + 1 < e.attended.rows(); ++t, ++k) {
        inputs.row(k) = e.attended.row(t);
        targets.row(k) = e.flattened.row(t + 1);
      }
    }
    model.residual = fit_residual_head(inputs, targets);
    std::vector<double> residual_scores;
    residual_scores.reserve(static_cast<std::size_t>(total));
    for (const auto& [id, e] : encoded) {
      for (Eigen::Index t = 0; t < e.attended.rows(); ++t) {
        const Eigen::VectorXd src = e.attended.row(t > 0 ? t - 1 : 0).transpose();
        residual_scores.push_back(
            residual_score(e.flattened.row(t).transpose(), model.residual->predict(src)));
      }
    }
    model.residual_theta = select_threshold(residual_scores, config.quantile);
  }
  return model;
}

}  // namespace ctxad
