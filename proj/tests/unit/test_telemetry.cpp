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

#include <sstream>

#include "ctxad/errors.hpp"
#include "ctxad/telemetry.hpp"
#include "doctest.h"

using namespace ctxad;

namespace {

std::vector<SensorReading> grid(const std::string& stream, std::int64_t n,
                                std::initializer_list<std::string> channels,
                                std::int64_t t0 = 1000, std::int64_t period = 5000) {
  std::vector<SensorReading> out;
  for (std::int64_t i = 0; i < n; ++i) {
    int c = 0;
    for (const auto& ch : channels) {
      out.push_back({t0 + i * period, stream, ch, static_cast<double>(i * 10 + c), std::nullopt});
      ++c;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("window count formula") {
  Eigen::MatrixXd series = Eigen::MatrixXd::Zero(2, 5);
  std::vector<Label> labels(5, 0);
  CHECK(make_windows(series, labels, 3, 1).size() == 3);
  CHECK(make_windows(series, labels, 3, 2).size() == 2);
  CHECK(make_windows(series, labels, 6, 1).empty());
  for (Eigen::Index m : {12, 13, 40, 97}) {
    for (Eigen::Index l : {1, 3, 12}) {
      for (Eigen::Index s : {1, 2, 5}) {
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, m);
        std::vector<Label> lab(static_cast<std::size_t>(m), 0);
        const auto expected = m >= l ? (m - l) / s + 1 : 0;
        CHECK(static_cast<Eigen::Index>(make_windows(x, lab, l, s).size()) == expected);
      }
    }
  }
}

TEST_CASE("window labels use any-sample aggregation") {
  Eigen::MatrixXd series = Eigen::MatrixXd::Zero(1, 6);
  std::vector<Label> labels{0, 0, 0, 1, 0, 0};
  const auto w = make_windows(series, labels, 3, 1);
  REQUIRE(w.size() == 4);
  CHECK(w[0].truth_label == 0);
  CHECK(w[1].truth_label == 1);
  CHECK(w[2].truth_label == 1);
  CHECK(w[3].truth_label == 1);
}

TEST_CASE("ragged channel rows are rejected") {
  std::vector<std::vector<double>> rows{{1, 2, 3}, {1, 2}};
  std::vector<Label> labels(3, 0);
  CHECK_THROWS_AS(make_windows(rows, labels, 2, 1), AlignmentError);
}

TEST_CASE("alignment snaps, fills short gaps and splits long ones") {
  StreamSchema schema{"s", {"a"}, 5000};
  auto r = grid("s", 20, {"a"});
  r[3].timestamp_ms += 1200;  // jitter, still nearest to slot 3
  // Remove slots 5,6 (short gap) and 10..13 (long gap).
  std::vector<SensorReading> kept;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i == 5 || i == 6 || (i >= 10 && i <= 13)) continue;
    kept.push_back(r[i]);
  }
  const auto s = align_readings(kept, schema, 3);
  REQUIRE(s.segments.size() == 2);
  CHECK(s.segments[0].start_index == 0);
  CHECK(s.segments[0].length() == 10);
  CHECK(s.segments[0].values(0, 5) == doctest::Approx(40.0));
  CHECK(s.segments[0].imputed(0, 5) == 1);
  CHECK(s.segments[0].imputed(0, 4) == 0);
  CHECK(s.segments[1].start_index == 14);
  CHECK(s.segments[1].length() == 6);
}

TEST_CASE("duplicates collapse to their mean with an OR-ed label") {
  StreamSchema schema{"s", {"a"}, 5000};
  std::vector<SensorReading> r{{0, "s", "a", 1.0, 0}, {5000, "s", "a", 2.0, 0},
                               {5000, "s", "a", 4.0, 1}, {10000, "s", "a", 5.0, 0}};
  const auto s = align_readings(r, schema);
  REQUIRE(s.segments.size() == 1);
  CHECK(s.segments[0].values(0, 1) == 3.0);
  CHECK(s.segments[0].labels[1] == 1);
}

TEST_CASE("telemetry JSONL round trip") {
  auto r = grid("sg-00", 4, {"voltage", "current"});
  r[1].truth_label = 1;
  r[2].value = 0.1 + 0.2;
  std::stringstream ss;
  write_telemetry(ss, r);
  const auto back = read_telemetry(ss);
  REQUIRE(back.size() == r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(back[i].timestamp_ms == r[i].timestamp_ms);
    CHECK(back[i].value == r[i].value);
    CHECK(back[i].stream_id == r[i].stream_id);
  }
  CHECK(back[1].truth_label == Label{1});
}

TEST_CASE("malformed telemetry reports line numbers and returns nothing") {
  std::stringstream ss;
  ss << R"({"ts":0,"stream":"s","channel":"a","value":1})" << "\n"
     << "not json\n"
     << R"({"ts":5000,"stream":"s","channel":"a"})" << "\n"
     << R"({"ts":5000,"stream":"s","channel":"a","value":1,"extra":2})" << "\n";
  try {
    read_telemetry(ss);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(msg.find("  line 1:") == std::string::npos);
  }
}

TEST_CASE("fuzzed telemetry never crashes") {
  const std::string alphabet = "{}[]\":,0123456789.-eEtsrcahnvlu ";
  std::uint64_t x = 1;
  for (int trial = 0; trial < 2000; ++trial) {
    std::string line;
    const int len = static_cast<int>(x % 60);
    for (int i = 0; i < len; ++i) {
      x = x * 6364136223846793005ULL + 1442695040888963407ULL;
      line += alphabet[(x >> 33) % alphabet.size()];
    }
    std::stringstream ss(line + "\n");
    try {
      const auto r = read_telemetry(ss);
      CHECK(r.size() <= 1);
    } catch (const DataError&) {
    }
  }
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  const double v = 0.1 + 0.2;
  CHECK(std::stod(format_double(v)) == v);
}
