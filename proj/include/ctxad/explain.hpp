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

#ifndef CTXAD_EXPLAIN_HPP_
#define CTXAD_EXPLAIN_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctxad/pipeline.hpp"

namespace ctxad {

// dS/dx for every raw input cell of one window (N x L, raw units), with the
// memory context (and residual prediction) held fixed.
struct Attribution {
  Eigen::MatrixXd gradient;
  Scorer scorer = Scorer::kMahalanobis;
  std::string stream_id;
  std::int64_t start_index = 0;
  // Score sits exactly at its non-differentiable point (S = 0 or r = 0); the
  // gradient is reported as zero.
  bool singular = false;
};

// Analytic chain rule: median selection -> min-max scaling -> tanh embedding
// -> additive attention (softmax) -> attended sum -> score.
Attribution attribute(const Model& model, const BaselineModel<double>& baseline,
                      const FrozenStep& frozen, Scorer scorer, const WindowFrame& window);

// Central differences per cell. `step_scale` holds a per-row multiplier for h
// so steps can be expressed in normalized units (the channel range); pass an
// empty vector for plain h.
Eigen::MatrixXd finite_diff_gradient(const std::function<double(const Eigen::MatrixXd&)>& fn,
                                     const Eigen::MatrixXd& x, double h,
                                     const Eigen::VectorXd& step_scale = {});

// Oracle for attribute(): steps of h in normalized units on each channel.
Attribution finite_diff_attribution(const Model& model, const BaselineModel<double>& baseline,
                                    const FrozenStep& frozen, Scorer scorer,
                                    const WindowFrame& window, double h = 1e-5);

struct Contributor {
  std::string channel;
  Eigen::Index offset = 0;
  double attribution = 0.0;
  int sign = 0;
};

struct ExplanationRecord {
  std::string stream_id;
  std::int64_t start_index = 0;
  std::int64_t timestamp_ms = 0;
  Scorer scorer = Scorer::kMahalanobis;
  double score = 0.0;
  double theta = 0.0;
  int decision = 0;
  std::vector<Contributor> top_k;  // |attribution| descending, zeros omitted
  std::vector<double> attention;
  std::vector<std::string> channels;
  bool singular = false;
  std::string rationale;
};

struct ExplanationContext {
  std::vector<std::string> channels;
  std::int64_t timestamp_ms = 0;
  double theta = 0.0;
};

ExplanationRecord render_explanation(const Attribution& attribution,
                                     std::span<const double> attention, double score,
                                     int decision, int top_k, const ExplanationContext& ctx);

// The rationale sentence, a pure function of the record's fields.
std::string rationale_text(const ExplanationRecord& record);

std::string to_json_line(const ExplanationRecord& record);

struct InterpretabilityMetrics {
  double attention_entropy_norm = 0.0;
  double attribution_concentration = 0.0;
  std::size_t windows = 0;
  std::size_t attributions = 0;
};

// Mean normalized attention entropy (-sum a log a / log N, 0 log 0 = 0; taken
// as 0 when N = 1) and mean max|Attr| / sum|Attr| (0 for an all-zero map).
InterpretabilityMetrics interpretability_metrics(std::span<const Eigen::VectorXd> attentions,
                                                 std::span<const Eigen::MatrixXd> attributions);

double normalized_entropy(const Eigen::VectorXd& attention);
double concentration(const Eigen::MatrixXd& attribution);

}  // namespace ctxad

#endif  // CTXAD_EXPLAIN_HPP_
