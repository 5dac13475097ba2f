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

#include <cmath>

#include "ctxad/context_engine.hpp"
#include "doctest.h"

using namespace ctxad;

TEST_CASE("softmax example and shift invariance") {
  Eigen::Vector2d e(0.0, std::log(2.0));
  const auto a = softmax(e);
  CHECK(std::abs(a(0) - 1.0 / 3.0) <= 1e-12);
  CHECK(std::abs(a(1) - 2.0 / 3.0) <= 1e-12);
  const Eigen::Vector2d shifted = e.array() + 1000.0;
  CHECK(softmax(shifted).isApprox(a, 1e-12));
  Eigen::Vector3d big(1000, 1001, -1e6);
  CHECK(softmax(big).allFinite());
}

TEST_CASE("attention is on the simplex over fuzzed inputs") {
  Xoshiro256 rng(5);
  int violations = 0;
  for (int t = 0; t < 100000; ++t) {
    const int n = 1 + static_cast<int>(rng.next() % 8);
    Eigen::VectorXd e(n);
    const double scale = std::pow(10.0, rng.uniform(-3, 3));
    for (int i = 0; i < n; ++i) e(i) = scale * rng.uniform(-1, 1);
    const auto a = softmax(e);
    if (!(a.array() >= 0).all() || !(a.array() <= 1).all() || std::abs(a.sum() - 1) > 1e-12) {
      ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("init_params is seeded, bounded and substream-separated") {
  const auto p = init_params(16, 12, 8, 99);
  const auto q = init_params(16, 12, 8, 99);
  CHECK(p.embed_weight == q.embed_weight);
  CHECK(p.score_vector == q.score_vector);
  CHECK(p.embed_weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(12.0));
  CHECK(p.state_weight.cwiseAbs().maxCoeff() <= 0.25);
  CHECK(p.embed_bias.isZero());
  CHECK(p.state_weight != p.context_weight);
  CHECK(init_params(16, 12, 8, 100).embed_weight != p.embed_weight);
  CHECK_THROWS_AS(init_params(0, 12, 8, 1), ParameterError);
}

TEST_CASE("memory ring buffer: cold start, FIFO eviction, bounded length") {
  MemoryBuffer<double> m(3, 2);
  CHECK(context_vector(m).isZero());
  for (int i = 1; i <= 5; ++i) m.push(Eigen::Vector2d(i, -i));
  CHECK(m.size() == 3);
  CHECK(m.entry(0)(0) == 3);
  CHECK(m.entry(2)(0) == 5);
  CHECK(context_vector(m).isApprox(Eigen::Vector2d(4, -4)));
  MemoryBuffer<double> big(8, 4);
  for (int i = 0; i < 1000000; ++i) big.push(Eigen::Vector4d::Constant(i));
  CHECK(big.size() == 8);
  CHECK(big.mean()(0) == doctest::Approx(999999 - 3.5));
  CHECK_THROWS_AS(m.push(Eigen::Vector3d::Zero()), DimensionError);
}

TEST_CASE("encode_step against a hand-rolled pipeline") {
  const auto p = init_params(4, 3, 2, 1);
  Eigen::MatrixXd x(2, 3);
  x << 0.1, 0.5, 0.9, 0.3, 0.3, 0.2;
  MemoryBuffer<double> mem(2, 4);
  mem.push(Eigen::Vector4d(0.1, -0.2, 0.3, 0.0));

  // oracle
  Eigen::MatrixXd h(2, 4);
  for (int i = 0; i < 2; ++i) {
    for (int r = 0; r < 4; ++r) {
      double acc = 0;
      for (int j = 0; j < 3; ++j) acc += p.embed_weight(r, j) * x(i, j);
      h(i, r) = std::tanh(acc);
    }
  }
  const Eigen::Vector4d c(0.1, -0.2, 0.3, 0.0);
  double e[2], z = 0;
  for (int i = 0; i < 2; ++i) {
    e[i] = 0;
    for (int r = 0; r < 4; ++r) {
      double u = 0;
      for (int s = 0; s < 4; ++s) u += p.state_weight(r, s) * h(i, s) + p.context_weight(r, s) * c(s);
      e[i] += p.score_vector(r) * std::tanh(u);
    }
    z += std::exp(e[i]);
  }
  const Eigen::Vector2d alpha(std::exp(e[0]) / z, std::exp(e[1]) / z);
  const Eigen::Vector4d attended = alpha(0) * h.row(0).transpose() + alpha(1) * h.row(1).transpose();

  const auto step = encode_step(x, mem, p);
  CHECK(step.per_sensor.isApprox(h, 1e-14));
  CHECK(step.context.isApprox(c));
  CHECK(step.attention.isApprox(alpha, 1e-14));
  CHECK(step.attended.isApprox(attended, 1e-14));
  CHECK(mem.size() == 2);
  CHECK(mem.entry(1).isApprox(h.colwise().mean().transpose()));
}

TEST_CASE("encoder works in single precision") {
  const auto p = init_params<float>(8, 12, 4, 3);
  MemoryBuffer<float> mem(4, 8);
  const Eigen::MatrixXf x = Eigen::MatrixXf::Constant(2, 12, 0.5f);
  const auto step = encode_step(x, mem, p);
  CHECK(step.attended.allFinite());
  CHECK(step.attention.sum() == doctest::Approx(1.0f));
}

TEST_CASE("dimension mismatches are reported") {
  const auto p = init_params(4, 3, 2, 1);
  MemoryBuffer<double> mem(2, 4);
  CHECK_THROWS_AS(encode_step(Eigen::MatrixXd::Zero(2, 5), mem, p), DimensionError);
  MemoryBuffer<double> wrong(2, 5);
  CHECK_THROWS_AS(encode_step(Eigen::MatrixXd::Zero(2, 3), wrong, p), DimensionError);
}
