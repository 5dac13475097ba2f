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

#ifndef CTXAD_RULES_HPP_
#define CTXAD_RULES_HPP_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctxad/telemetry.hpp"

namespace ctxad {

struct RuleOptions {
  double bound_sigmas = 3.0;
  double step_sigmas = 4.0;
  // Floor on the band half-width: min_band_rel * |mean| + min_band_abs.
  double min_band_rel = 1e-6;
  double min_band_abs = 1e-9;
};

struct ChannelRule {
  std::string channel;
  double mean = 0.0;
  double half_width = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double max_step = 0.0;
};

struct RuleSet {
  RuleOptions options;
  std::vector<ChannelRule> rules;  // one per channel, schema order

  int index_of(const std::string& channel) const;
};

// Static mean +- 3 sigma bounds and a 4 sigma_diff rate limit per channel,
// both floored at the min_band half-width.
RuleSet fit_rules(std::span<const WindowFrame> calibration,
                  std::span<const std::string> channels, const RuleOptions& options = {});

enum class RuleKind { kLowerBound, kUpperBound, kRate };
std::string to_string(RuleKind kind);

struct FiredRule {
  std::string channel;
  RuleKind kind = RuleKind::kUpperBound;
  Eigen::Index sample = 0;  // for rate rules: the later sample of the pair

  bool operator==(const FiredRule&) const = default;
};

struct RuleVerdict {
  int label = 0;
  std::vector<FiredRule> fired;
  // Largest normalized exceedance |x - mean| / half_width or |step| / max_step
  // over the window; crosses 1 where a rule fires. Ranking score for ROC.
  double score = 0.0;
};

// `channels` names the window rows; an empty span means rule order.
RuleVerdict rule_detect(const WindowFrame& window, const RuleSet& rules,
                        std::span<const std::string> channels = {});

}  // namespace ctxad

#endif  // CTXAD_RULES_HPP_
