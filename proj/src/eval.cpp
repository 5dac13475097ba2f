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

#include "ctxad/eval.hpp"

#include <algorithm>
#include <numeric>

#include "ctxad/detector.hpp"
#include "ctxad/errors.hpp"

namespace ctxad::eval {

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> truths) {
  if (predictions.size() != truths.size()) {
    throw DimensionError("confusion: predictions and truths differ in length");
  }
  if (predictions.empty()) throw DimensionError("confusion: no items");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool p = predictions[i] != 0;
    const bool t = truths[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

PrecisionRecall prf1(const ConfusionCounts& c) {
  PrecisionRecall r;
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

AccuracyFpr accuracy_fpr(const ConfusionCounts& c) {
  AccuracyFpr r;
  if (c.total() > 0) {
    r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  }
  if (c.fp + c.tn > 0) r.fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
  return r;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> truths) {
  if (scores.size() != truths.size()) throw DimensionError("roc: length mismatch");
  std::int64_t positives = 0;
  for (const int t : truths) positives += t != 0 ? 1 : 0;
  const auto negatives = static_cast<std::int64_t>(truths.size()) - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetricError("roc: AUC undefined without both classes");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({0.0, 0.0});
  std::int64_t tp = 0, fp = 0;
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      if (truths[order[i]] != 0) ++tp;
      else ++fp;
      ++i;
    }
    roc.points.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p});
  }
  // Exact endpoint even when rounding leaves the last point short of 1.
  roc.points.back() = {1.0, 1.0};
  for (std::size_t k = 1; k < roc.points.size(); ++k) {
    const auto& a = roc.points[k - 1];
    const auto& b = roc.points[k];
    roc.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return roc;
}

LatencyStats latency_stats(std::span<const double> samples) {
  if (samples.empty()) throw DimensionError("latency: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto pick = [&](double q) { return sorted[nearest_rank(q, sorted.size()) - 1]; };
  LatencyStats s;
  s.count = sorted.size();
  s.p50 = pick(0.50);
  s.p95 = pick(0.95);
  s.p99 = pick(0.99);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.count);
  return s;
}

}  // namespace ctxad::eval
