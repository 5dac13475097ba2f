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

#include <algorithm>
#include <numeric>

#include "ctxad/errors.hpp"
#include "ctxad/eval.hpp"
#include "ctxad/rng.hpp"
#include "doctest.h"

using namespace ctxad;
using namespace ctxad::eval;

namespace {

// Tie-adjusted Mann-Whitney statistic: P(pos > neg) + 0.5 P(pos == neg).
double mann_whitney(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0;
  double pos = 0, neg = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    ++pos;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  for (int v : y) neg += v ? 0 : 1;
  return wins / (pos * neg);
}

}  // namespace

TEST_CASE("confusion and derived rates") {
  const std::vector<int> pred{1, 1, 1, 1, 0, 0, 0, 0, 0};
  const std::vector<int> truth{1, 1, 1, 0, 0, 0, 0, 0, 1};
  const auto c = confusion(pred, truth);
  CHECK(c == ConfusionCounts{3, 1, 4, 1});
  const auto p = prf1(c);
  CHECK(std::abs(p.precision - 0.75) <= 1e-12);
  CHECK(std::abs(p.recall - 0.75) <= 1e-12);
  CHECK(std::abs(p.f1 - 0.75) <= 1e-12);
  const auto a = accuracy_fpr(c);
  CHECK(a.accuracy == doctest::Approx(7.0 / 9.0));
  CHECK(a.fpr == doctest::Approx(0.2));
}

TEST_CASE("zero conventions") {
  const auto p = prf1(ConfusionCounts{0, 0, 5, 0});
  CHECK(p.precision == 0.0);
  CHECK(p.recall == 0.0);
  CHECK(p.f1 == 0.0);
  CHECK(accuracy_fpr(ConfusionCounts{}).accuracy == 0.0);
}

TEST_CASE("AUC hand example") {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  const auto r = roc_auc(s, y);
  CHECK(std::abs(r.auc - 0.75) <= 1e-12);
  CHECK(r.points.front().fpr == 0.0);
  CHECK(r.points.back().tpr == 1.0);
}

TEST_CASE("AUC with ties and degenerate classes") {
  const std::vector<double> s{1, 1, 1, 1};
  const std::vector<int> y{0, 1, 0, 1};
  CHECK(roc_auc(s, y).auc == doctest::Approx(0.5));
  const std::vector<int> one{1, 1, 1, 1};
  CHECK_THROWS_AS(roc_auc(s, one), UndefinedMetricError);
}

TEST_CASE("AUC equals the Mann-Whitney statistic") {
  Xoshiro256 rng(101);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + static_cast<int>(rng.next() % 199);
    std::vector<double> s(static_cast<std::size_t>(n));
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      s[i] = std::floor(rng.uniform(0, 10));
      y[i] = rng.uniform() < 0.3;
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(std::abs(roc_auc(s, y).auc - mann_whitney(s, y)) <= 1e-9);
  }
}

TEST_CASE("latency percentiles by nearest rank") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  const auto l = latency_stats(v);
  CHECK(l.p50 == 50.0);
  CHECK(l.p95 == 95.0);
  CHECK(l.p99 == 99.0);
  CHECK(l.mean == 50.5);
  CHECK(l.count == 100);
  const std::vector<double> one{7};
  CHECK(latency_stats(one).p99 == 7.0);
}
