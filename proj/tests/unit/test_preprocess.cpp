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

#include "ctxad/errors.hpp"
#include "ctxad/preprocess.hpp"
#include "ctxad/rng.hpp"
#include "doctest.h"

using namespace ctxad;

TEST_CASE("min-max scaling, no clamping, degenerate channels at 0.5") {
  CHECK(normalize(5.0, 0.0, 10.0) == 0.5);
  CHECK(normalize(15.0, 0.0, 10.0) == 1.5);
  CHECK(normalize(-5.0, 0.0, 10.0) == -0.5);
  CHECK(normalize(3.0, 3.0, 3.0) == 0.5);
  CHECK(normalize_slope(3.0, 3.0) == 0.0);
  CHECK(normalize_slope(0.0, 4.0) == 0.25);
}

TEST_CASE("normalizer fits over every calibration sample") {
  std::vector<WindowFrame> w(2);
  w[0].values = (Eigen::MatrixXd(2, 3) << 1, 2, 3, 7, 7, 7).finished();
  w[1].values = (Eigen::MatrixXd(2, 3) << -1, 0, 9, 7, 7, 7).finished();
  const auto s = fit_normalizer(w);
  CHECK(s.min(0) == -1.0);
  CHECK(s.max(0) == 9.0);
  CHECK(s.degenerate(1));
  const Eigen::MatrixXd n = normalize_rows(w[0].values, s);
  CHECK(n(0, 0) == doctest::Approx(0.2));
  CHECK((n.row(1).array() == 0.5).all());
  CHECK_THROWS_AS(fit_normalizer(std::span<const WindowFrame>{}), CalibrationError);
}

TEST_CASE("normalization round trip over fuzzed inputs") {
  Xoshiro256 rng(17);
  int violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const double lo = rng.uniform(-1e3, 1e3);
    const double hi = lo + rng.uniform(1e-3, 1e3);
    const double x = rng.uniform(lo - 100, hi + 100);
    const double back = denormalize(normalize(x, lo, hi), lo, hi);
    if (std::abs(back - x) > 1e-9 * std::max(1.0, std::abs(x))) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("median filter: known values, edges and tie-break") {
  Eigen::MatrixXd x(1, 6);
  x << 1, 9, 2, 8, 3, 3;
  Eigen::MatrixXi sel;
  const auto m = median_filter_rows(x, 3, &sel);
  // windows: [1,1,9] [1,9,2] [9,2,8] [2,8,3] [8,3,3] [3,3,3]
  Eigen::RowVectorXd expected(6);
  expected << 1, 2, 8, 3, 3, 3;
  CHECK(m.row(0).isApprox(expected));
  CHECK(sel(0, 0) == 0);
  CHECK(sel(0, 5) == 5);  // ties ordered by column, middle of [4, 5, 5]
  for (Eigen::Index j = 0; j < 6; ++j) CHECK(x(0, sel(0, j)) == m(0, j));
  CHECK(median_filter_rows(x, 1).isApprox(x));
  CHECK_THROWS_AS(median_filter_rows(x, 2), ParameterError);
}

TEST_CASE("median filter removes an isolated glitch but keeps a 2-sample step") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 9);
  x(0, 4) = 100;
  CHECK(median_filter_rows(x, 3).cwiseAbs().maxCoeff() == 0.0);
  x(0, 5) = 100;
  const auto m = median_filter_rows(x, 3);
  CHECK(m(0, 4) == 100);
  CHECK(m(0, 5) == 100);
}
