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

#ifndef CTXAD_TESTS_FIXTURES_HPP_
#define CTXAD_TESTS_FIXTURES_HPP_

#include "ctxad/pipeline.hpp"
#include "ctxad/simgen.hpp"

namespace ctxad::testing {

inline std::vector<SensorReading> clean_readings(int streams, std::int64_t seconds,
                                                 std::uint64_t seed,
                                                 sim::ScenarioKind kind =
                                                     sim::ScenarioKind::kSmartGrid) {
  sim::ScenarioSpec s;
  s.kind = kind;
  s.streams = streams;
  s.duration_s = seconds;
  s.seed = seed;
  return sim::generate_scenario(s).readings;
}

inline Model small_model(std::uint64_t seed = 3, PipelineConfig config = {}) {
  config.seed = seed;
  const auto r = clean_readings(2, 3600, seed);
  const auto ch = channel_order(r);
  return calibrate(config, ch, window_readings(r, ch, config));
}

}  // namespace ctxad::testing

#endif  // CTXAD_TESTS_FIXTURES_HPP_
