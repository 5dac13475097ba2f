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

#include "ctxad/errors.hpp"
#include "ctxad/rng.hpp"
#include "ctxad/rules.hpp"
#include "doctest.h"

using namespace ctxad;

namespace {

std::vector<WindowFrame> noise_windows(int count, double mean, double sigma, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<WindowFrame> w(static_cast<std::size_t>(count));
  for (auto& f : w) {
    f.values.resize(1, 12);
    for (int j = 0; j < 12; ++j) f.values(0, j) = mean + sigma * rng.normal();
  }
  return w;
}

WindowFrame flat(double v, int n = 12) {
  WindowFrame f;
  f.values = Eigen::MatrixXd::Constant(1, n, v);
  return f;
}

}  // namespace

TEST_CASE("rule bounds and rate from calibration statistics") {
  const auto cal = noise_windows(400, 10.0, 2.0, 1);
  const std::vector<std::string> ch{"x"};
  const auto rules = fit_rules(cal, ch);
  REQUIRE(rules.rules.size() == 1);
  const auto& r = rules.rules[0];
  // oracle: two-pass statistics over every sample and every in-window step
  double sum = 0, n = 0;
  for (const auto& f : cal) sum += f.values.sum(), n += 12;
  const double mean = sum / n;
  double ss = 0;
  for (const auto& f : cal) ss += (f.values.array() - mean).square().sum();
  const double sd = std::sqrt(ss / (n - 1));
  CHECK(r.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(r.half_width == doctest::Approx(3 * sd).epsilon(1e-12));
  CHECK(r.lower == doctest::Approx(mean - 3 * sd));
  CHECK(r.max_step > 0);
}

TEST_CASE("in-band window passes, excursions fire") {
  const std::vector<std::string> ch{"x"};
  const auto rules = fit_rules(noise_windows(400, 10.0, 2.0, 1), ch);
  const auto& r = rules.rules[0];
  CHECK(rule_detect(flat(r.mean), rules).label == 0);
  auto hi = flat(r.mean);
  hi.values(0, 5) = r.upper + 1.0;
  const auto v = rule_detect(hi, rules);
  CHECK(v.label == 1);
  CHECK(v.score > 1.0);
  CHECK(std::find(v.fired.begin(), v.fired.end(), FiredRule{"x", RuleKind::kUpperBound, 5}) !=
        v.fired.end());
}

TEST_CASE("rate rule fires on a 10 sigma_diff jump inside bounds") {
  RuleSet rules;
  rules.rules.push_back({"x", 0.0, 100.0, -100.0, 100.0, 1.0});
  auto w = flat(0.0);
  w.values(0, 7) = 10.0;
  const auto v = rule_detect(w, rules);
  CHECK(v.label == 1);
  CHECK(v.fired.front() == FiredRule{"x", RuleKind::kRate, 7});
  CHECK(v.score == doctest::Approx(10.0));
}

TEST_CASE("constant calibration channel gets the floor band") {
  std::vector<WindowFrame> cal{flat(5.0), flat(5.0)};
  const std::vector<std::string> ch{"x"};
  const auto rules = fit_rules(cal, ch);
  CHECK(rules.rules[0].half_width == doctest::Approx(1e-6 * 5.0 + 1e-9));
  CHECK(rule_detect(flat(5.0), rules).label == 0);
  CHECK(rule_detect(flat(5.001), rules).label == 1);
}

TEST_CASE("unknown channel names are schema errors") {
  const std::vector<std::string> ch{"x"};
  const auto rules = fit_rules(noise_windows(10, 0, 1, 2), ch);
  const std::vector<std::string> other{"y"};
  CHECK_THROWS_AS(rule_detect(flat(0), rules, other), SchemaError);
}
