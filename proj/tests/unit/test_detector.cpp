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

#include "ctxad/detector.hpp"
#include "ctxad/rng.hpp"
#include "doctest.h"

using namespace ctxad;

namespace {

BaselineModel<double> fixed(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
  BaselineModel<double> m;
  m.mu = mu;
  m.sigma = sigma;
  m.sigma_inv = sigma.inverse();
  return m;
}

Eigen::MatrixXd random_rows(Xoshiro256& rng, int n, int d) {
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
  }
  return x;
}

}  // namespace

TEST_CASE("Mahalanobis hand examples") {
  const auto eye = fixed(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  CHECK(mahalanobis_score(Eigen::Vector2d(3, 4), eye) == doctest::Approx(5.0).epsilon(1e-12));
  const auto diag = fixed(Eigen::Vector2d::Zero(), Eigen::Vector2d(4, 1).asDiagonal());
  CHECK(std::abs(mahalanobis_score(Eigen::Vector2d(2, 0), diag) - 1.0) <= 1e-12);
  CHECK(mahalanobis_score(Eigen::Vector2d::Zero(), diag) == 0.0);
}

TEST_CASE("fit_baseline: two-point covariance and ridge") {
  Eigen::MatrixXd x(2, 2);
  x << 0, 0, 2, 0;
  const auto m = fit_baseline(x, 1e-6);
  CHECK(m.mu.isApprox(Eigen::Vector2d(1, 0)));
  const double eps = std::max(1e-6 * 2.0 / 2.0, 1e-9);
  CHECK(m.epsilon == doctest::Approx(eps));
  CHECK(m.sigma(0, 0) == doctest::Approx(2.0 + eps));
  CHECK(m.sigma(1, 1) == doctest::Approx(eps));
  CHECK((m.sigma_inv * m.sigma).isApprox(Eigen::Matrix2d::Identity(), 1e-6));
}

TEST_CASE("fit_baseline: identical vectors, errors") {
  Eigen::MatrixXd same = Eigen::MatrixXd::Constant(5, 3, 0.7);
  const auto m = fit_baseline(same, 1e-6);
  CHECK(m.epsilon == 1e-9);
  CHECK(mahalanobis_score(Eigen::Vector3d::Constant(0.7), m) == 0.0);
  CHECK_THROWS_AS(fit_baseline(Eigen::MatrixXd::Zero(1, 3), 1e-6), CalibrationError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 2);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(fit_baseline(bad, 1e-6), DataError);
  CHECK_THROWS_AS(mahalanobis_score(Eigen::Vector2d::Zero(), m), DimensionError);
}

TEST_CASE("Mahalanobis matches an independent LU solve") {
  Xoshiro256 rng(8);
  const auto x = random_rows(rng, 200, 5);
  const auto m = fit_baseline(x, 1e-6);
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / 199.0;
  cov.diagonal().array() += m.epsilon;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd h = random_rows(rng, 1, 5).transpose();
    const Eigen::VectorXd delta = h - m.mu;
    const double oracle = std::sqrt(delta.dot(lu.solve(delta)));
    CHECK(mahalanobis_score(h, m) == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("score is monotone along rays") {
  Xoshiro256 rng(2);
  const auto m = fit_baseline(random_rows(rng, 100, 4), 1e-6);
  for (int r = 0; r < 20; ++r) {
    Eigen::VectorXd u = random_rows(rng, 1, 4).transpose();
    u.normalize();
    double prev = 0;
    for (double t = 0.1; t < 5; t += 0.1) {
      const double s = mahalanobis_score((m.mu + t * u).eval(), m);
      CHECK(s > prev);
      prev = s;
    }
  }
}

TEST_CASE("decision boundary is inclusive") {
  CHECK(decide(2.0, 2.0) == 1);
  CHECK(decide(2.0 - 1e-9, 2.0) == 0);
  CHECK(decide(12.0, 2.0) == 1);
}

TEST_CASE("nearest-rank threshold") {
  std::vector<double> s(1000);
  std::iota(s.begin(), s.end(), 1.0);
  std::reverse(s.begin(), s.end());
  CHECK(select_threshold(s, 0.995) == 995.0);
  CHECK(select_threshold(s, 1.0) == 1000.0);
  CHECK(select_threshold(s, 0.0) == 1.0);
  CHECK_THROWS(select_threshold(std::span<const double>{}, 0.5));
  Xoshiro256 rng(4);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng.next() % 500);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = std::floor(rng.uniform(0, 20));
    const double q = rng.uniform();
    const double theta = select_threshold(v, q);
    const auto rank = std::max(static_cast<long>(std::ceil(q * n - 1e-9)), 1L);
    const auto above = std::count_if(v.begin(), v.end(), [&](double x) { return x > theta; });
    const auto below = std::count_if(v.begin(), v.end(), [&](double x) { return x < theta; });
    CHECK(above <= n - rank);
    CHECK(below <= rank - 1);
  }
}

TEST_CASE("sigmoid and residual score") {
  CHECK(std::abs(sigmoid(std::log(3.0)) - 0.75) <= 1e-12);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  Eigen::Vector3d x(1, 2, 3);
  CHECK(residual_score(x, x) == 0.5);
  double prev = 0.5;
  for (double k = 0.5; k < 5; k += 0.5) {
    const double a = residual_score((x * (1 + k)).eval(), x);
    CHECK(a > prev);
    CHECK(a < 1.0);
    prev = a;
  }
  CHECK_THROWS_AS(residual_score(Eigen::VectorXd(x), Eigen::VectorXd::Zero(2).eval()), DimensionError);
}

TEST_CASE("residual head recovers a linear map") {
  Xoshiro256 rng(6);
  const auto in = random_rows(rng, 500, 6);
  const auto r_true = random_rows(rng, 10, 6);
  const Eigen::MatrixXd out = in * r_true.transpose();
  const auto head = fit_residual_head(in, out);
  CHECK((head.weights - r_true).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((head.predict(in.row(3).transpose()) - out.row(3).transpose()).norm() < 1e-6);
  const auto zero = fit_residual_head(in, Eigen::MatrixXd::Zero(500, 10));
  CHECK(zero.weights.cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(fit_residual_head(in.topRows(3), out.topRows(3)), CalibrationError);
}

TEST_CASE("constant targets with zero-mean inputs give a near-zero head") {
  Xoshiro256 rng(12);
  Eigen::MatrixXd in = random_rows(rng, 2000, 3);
  in = in.rowwise() - in.colwise().mean();
  const Eigen::MatrixXd out = Eigen::MatrixXd::Constant(2000, 4, 2.0);
  const auto head = fit_residual_head(in, out);
  CHECK(head.weights.cwiseAbs().maxCoeff() < 1e-9);
  const Eigen::VectorXd target = Eigen::VectorXd::Constant(4, 2.0);
  CHECK((target - head.predict(in.row(0).transpose())).norm() ==
        doctest::Approx(target.norm()).epsilon(1e-6));
}
