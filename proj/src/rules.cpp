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

#include "ctxad/rules.hpp"

#include <algorithm>
#include <cmath>

#include "ctxad/errors.hpp"

namespace ctxad {

int RuleSet::index_of(const std::string& channel) const {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i].channel == channel) return static_cast<int>(i);
  }
  return -1;
}

std::string to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::kLowerBound: return "lower_bound";
    case RuleKind::kUpperBound: return "upper_bound";
    case RuleKind::kRate: return "rate";
  }
  return "unknown";
}

RuleSet fit_rules(std::span<const WindowFrame> calibration,
                  std::span<const std::string> channels, const RuleOptions& options) {
  if (calibration.empty()) throw CalibrationError("rules: no calibration windows");
  const auto n = static_cast<Eigen::Index>(channels.size());
  RuleSet set;
  set.options = options;
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0, sum_sq = 0.0, dsum = 0.0, dsum_sq = 0.0;
    std::int64_t count = 0, dcount = 0;
    // Two passes keep the variance numerically stable around large means.
    for (const auto& w : calibration) {
      if (w.channels() != n) throw DimensionError("rules: window channel count mismatch");
      sum += w.values.row(i).sum();
      count += w.length();
      if (w.length() > 1) {
        const Eigen::RowVectorXd diff =
            w.values.row(i).tail(w.length() - 1) - w.values.row(i).head(w.length() - 1);
        dsum += diff.sum();
        dcount += diff.size();
      }
    }
    const double mean = sum / static_cast<double>(count);
    const double dmean = dcount > 0 ? dsum / static_cast<double>(dcount) : 0.0;
    for (const auto& w : calibration) {
      sum_sq += (w.values.row(i).array() - mean).square().sum();
      if (w.length() > 1) {
        const Eigen::RowVectorXd diff =
            w.values.row(i).tail(w.length() - 1) - w.values.row(i).head(w.length() - 1);
        dsum_sq += (diff.array() - dmean).square().sum();
      }
    }
    const double sd = count > 1 ? std::sqrt(sum_sq / static_cast<double>(count - 1)) : 0.0;
    const double dsd = dcount > 1 ? std::sqrt(dsum_sq / static_cast<double>(dcount - 1)) : 0.0;
    const double floor_band = options.min_band_rel * std::abs(mean) + options.min_band_abs;

    ChannelRule rule;
    rule.channel = channels[static_cast<std::size_t>(i)];
    rule.mean = mean;
    rule.half_width = std::max(options.bound_sigmas * sd, floor_band);
    rule.lower = mean - rule.half_width;
    rule.upper = mean + rule.half_width;
    rule.max_step = std::max(options.step_sigmas * dsd, floor_band);
    set.rules.push_back(std::move(rule));
  }
  return set;
}

RuleVerdict rule_detect(const WindowFrame& window, const RuleSet& rules,
                        std::span<const std::string> channels) {
  const Eigen::Index n = window.channels();
  std::vector<int> map(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (channels.empty()) {
      if (i >= static_cast<Eigen::Index>(rules.rules.size())) {
        throw SchemaError("rules: window has more channels than the rule set");
      }
      map[static_cast<std::size_t>(i)] = static_cast<int>(i);
    } else {
      const int r = rules.index_of(channels[static_cast<std::size_t>(i)]);
      if (r < 0) {
        throw SchemaError("rules: unknown channel '" + channels[static_cast<std::size_t>(i)] + "'");
      }
      map[static_cast<std::size_t>(i)] = r;
    }
  }

  RuleVerdict out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rule = rules.rules[static_cast<std::size_t>(map[static_cast<std::size_t>(i)])];
    for (Eigen::Index j = 0; j < window.length(); ++j) {
      const double x = window.values(i, j);
      out.score = std::max(out.score, std::abs(x - rule.mean) / rule.half_width);
      if (x > rule.upper) out.fired.push_back({rule.channel, RuleKind::kUpperBound, j});
      if (x < rule.lower) out.fired.push_back({rule.channel, RuleKind::kLowerBound, j});
      if (j > 0) {
        const double step = std::abs(x - window.values(i, j - 1));
        out.score = std::max(out.score, step / rule.max_step);
        if (step > rule.max_step) out.fired.push_back({rule.channel, RuleKind::kRate, j});
      }
    }
  }
  out.label = out.fired.empty() ? 0 : 1;
  return out;
}

}  // namespace ctxad
