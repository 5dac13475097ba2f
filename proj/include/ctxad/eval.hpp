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

#ifndef CTXAD_EVAL_HPP_
#define CTXAD_EVAL_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace ctxad::eval {

// Positive class = anomaly = 1 throughout.
struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> truths);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};
// Zero conventions: precision when TP+FP = 0, recall when TP+FN = 0, F1 when
// P+R = 0.
PrecisionRecall prf1(const ConfusionCounts& c);

struct AccuracyFpr {
  double accuracy = 0.0;
  double fpr = 0.0;
};
AccuracyFpr accuracy_fpr(const ConfusionCounts& c);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) ... (1,1)
  double auc = 0.0;
};

// Sweeps every distinct score as a threshold (score >= t flags), tied scores
// entering together; trapezoidal area. Throws UndefinedMetricError unless both
// classes are present.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> truths);

struct LatencyStats {
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
};

// Nearest-rank percentiles.
LatencyStats latency_stats(std::span<const double> samples);

}  // namespace ctxad::eval

#endif  // CTXAD_EVAL_HPP_
