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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctxad/errors.hpp"
#include "ctxad/harness.hpp"
#include "doctest.h"

using namespace ctxad;
using namespace ctxad::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ctxad_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(CTXAD_BIN) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("config parsing names bad fields") {
  CHECK_THROWS_WITH_AS(parse_run_config(nlohmann::json::parse(R"({"sede": 1})")),
                       doctest::Contains("sede"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_run_config(nlohmann::json::parse(R"({"scenario": {"kind": "windfarm"}})")),
      doctest::Contains("scenario.kind"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_run_config(nlohmann::json::parse(R"({"pipeline": {"window": "twelve"}})")),
      doctest::Contains("pipeline.window"), ConfigError);
  const auto c = parse_run_config(nlohmann::json::parse(
      R"({"seed": 4, "pipeline": {"scorer": "both", "d": 8}, "bench": {"streams": 3}})"));
  CHECK(c.scorers.size() == 2);
  CHECK(c.pipeline.embed_dim == 8);
  CHECK(c.pipeline.seed == 4);
  CHECK(c.bench.streams == 3);
  CHECK(parse_run_config(c.snapshot()).snapshot() == c.snapshot());
}

TEST_CASE("event planner hits the labeled fraction without overlap") {
  sim::ScenarioSpec spec;
  spec.streams = 10;
  spec.duration_s = 7200;
  EventPlan plan;
  plan.anomalous_fraction = 0.02;
  plan.kinds = {{sim::AnomalyKind::kSpike, 4, 6.0}, {sim::AnomalyKind::kDrift, 36, 6.0}};
  const auto events = plan_events(spec, plan, 12, 7);
  CHECK(events == plan_events(spec, plan, 12, 7));
  std::int64_t labeled = 0;
  for (const auto& e : events) labeled += e.duration + 11;
  const double total = 10.0 * (1440 - 11);
  CHECK(labeled >= 0.02 * total);
  CHECK(labeled <= 0.02 * total + 47);
  for (std::size_t i = 0; i < events.size(); ++i) {
    for (std::size_t j = i + 1; j < events.size(); ++j) {
      if (events[i].stream_id != events[j].stream_id) continue;
      const auto& a = events[i];
      const auto& b = events[j];
      CHECK((a.start_index + a.duration + 12 <= b.start_index ||
             b.start_index + b.duration + 12 <= a.start_index));
    }
  }
}

TEST_CASE("evaluate joins records and reports orphans") {
  std::vector<TruthRecord> truth{{"s", 0, 0}, {"s", 1, 1}, {"s", 2, 0}, {"s", 3, 1}};
  std::vector<DecisionRecord> dec;
  const double scores[] = {0.1, 0.35, 0.4, 0.8};
  for (int i = 0; i < 4; ++i) {
    dec.push_back({"s", i, "d", scores[i], 0.5, scores[i] >= 0.5});
  }
  const auto r = evaluate(dec, truth);
  REQUIRE(r.size() == 1);
  CHECK(r[0].roc->auc == doctest::Approx(0.75));
  CHECK(r[0].counts == eval::ConfusionCounts{1, 0, 2, 1});

  auto orphan = dec;
  orphan.push_back({"s", 9, "d", 1.0, 0.5, 1});
  CHECK_THROWS_WITH_AS(evaluate(orphan, truth), doctest::Contains("s@9"), JoinError);
  auto missing = dec;
  missing.pop_back();
  CHECK_THROWS_AS(evaluate(missing, truth), JoinError);

  std::vector<TruthRecord> one_class{{"s", 0, 0}, {"s", 1, 0}, {"s", 2, 0}, {"s", 3, 0}};
  CHECK_FALSE(evaluate(dec, one_class)[0].roc.has_value());
}

TEST_CASE("perfect decisions give accuracy 1") {
  std::vector<TruthRecord> truth;
  std::vector<DecisionRecord> dec;
  for (int i = 0; i < 20; ++i) {
    truth.push_back({"s", i, i % 3 == 0});
    dec.push_back({"s", i, "d", static_cast<double>(i % 3 == 0), 0.5, i % 3 == 0});
  }
  const auto r = evaluate(dec, truth);
  CHECK(r[0].acc.accuracy == 1.0);
  CHECK(r[0].roc->auc == 1.0);
}

TEST_CASE("bench accounting") {
  RunConfig c;
  c.bench = {1, 1, 1, 600};
  auto r = bench(c);
  CHECK(r.latency_samples == 1);
  CHECK(r.windows_processed == 1);
  c.bench = {3, 5, 1, 600};
  const auto a = bench(c);
  c.bench.windows = 10;
  const auto b = bench(c);
  CHECK(b.windows_processed == 2 * a.windows_processed);
  CHECK(a.per_stream_state_bytes == b.per_stream_state_bytes);
}

TEST_CASE("CLI exit codes") {
  const auto dir = scratch("cli");
  const std::string out = " --out-dir " + dir.string();

  CHECK(run("--seed 1" + out + " simulate --kind windfarm --duration 50") == 2);
  CHECK(run("--seed 1" + out + " simulate --streams 0 --duration 50") == 2);
  write(dir / "bad.json", R"({"scenario": {"streams": 1, "duration_s": 50}, "bogus": 1})");
  CHECK(run("--config " + (dir / "bad.json").string() + out + " simulate") == 2);

  REQUIRE(run("--seed 1" + out + " simulate --kind smartgrid --streams 1 --duration 50") == 0);
  int lines = 0;
  {
    std::ifstream in(dir / "telemetry.jsonl");
    std::string l;
    while (std::getline(in, l)) ++lines;
  }
  CHECK(lines == 20);
  const auto first = slurp(dir / "telemetry.jsonl");
  REQUIRE(run("--seed 1" + out + " simulate --kind smartgrid --streams 1 --duration 50") == 0);
  CHECK(slurp(dir / "telemetry.jsonl") == first);
  CHECK(fs::exists(dir / "manifest-simulate.json"));

  // one window worth of samples: calibration fails
  CHECK(run(out + " calibrate --telemetry " + (dir / "telemetry.jsonl").string()) == 3);

  write(dir / "garbage.jsonl", "{\"ts\": 1}\nnope\n");
  CHECK(run(out + " calibrate --telemetry " + (dir / "garbage.jsonl").string()) == 4);

  write(dir / "dec.jsonl", R"({"stream":"s","start":0,"detector":"d","score":1,"theta":0.5,"decision":1})"
                           "\n");
  write(dir / "truth.jsonl", R"({"stream":"s","start":1,"label":1})"
                             "\n");
  CHECK(run(out + " evaluate --decisions " + (dir / "dec.jsonl").string() + " --truth " +
            (dir / "truth.jsonl").string()) == 5);
  write(dir / "truth.jsonl", R"({"stream":"s","start":0,"label":1})"
                             "\n");
  CHECK(run(out + " evaluate --decisions " + (dir / "dec.jsonl").string() + " --truth " +
            (dir / "truth.jsonl").string()) == 0);
  const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
  CHECK(metrics["detectors"]["d"]["auc"] == "undefined");
  CHECK(metrics["detectors"]["d"]["accuracy"] == 1.0);
}

TEST_CASE("full CLI flow with empty and mismatched telemetry") {
  const auto dir = scratch("flow");
  const std::string out = " --seed 3 --out-dir " + dir.string();
  REQUIRE(run(out + " simulate --streams 2 --duration 1800") == 0);
  REQUIRE(run(out + " calibrate --telemetry " + (dir / "telemetry.jsonl").string()) == 0);
  const auto model = (dir / "model.json").string();
  const auto digest = sha256_file(model);
  REQUIRE(run(out + " calibrate --telemetry " + (dir / "telemetry.jsonl").string()) == 0);
  CHECK(sha256_file(model) == digest);

  write(dir / "empty.jsonl", "");
  const auto empty_dir = dir / "empty";
  CHECK(run(" --out-dir " + empty_dir.string() + " detect --model " + model + " --telemetry " +
            (dir / "empty.jsonl").string()) == 0);
  CHECK(slurp(empty_dir / "decisions.jsonl").empty());

  const auto hc = dir / "hc";
  REQUIRE(run(" --out-dir " + hc.string() + " simulate --kind healthcare --duration 600") == 0);
  CHECK(run(" --out-dir " + (dir / "x").string() + " detect --model " + model +
            " --telemetry " + (hc / "telemetry.jsonl").string()) == 4);

  REQUIRE(run(out + " detect --scorer both --model " + model + " --telemetry " +
              (dir / "telemetry.jsonl").string()) == 0);
  const auto decisions = read_decisions((dir / "decisions.jsonl").string());
  const auto truth = read_truth((dir / "truth.jsonl").string());
  CHECK(decisions.size() == 3 * truth.size());
  REQUIRE(run(out + " explain-dump --stream sg-00 --start 40 --model " + model +
              " --telemetry " + (dir / "telemetry.jsonl").string()) == 0);
  const auto dump = nlohmann::json::parse(slurp(dir / "explain_dump.json"));
  REQUIRE(dump["windows"].size() == 1);
  CHECK(dump["windows"][0]["max_abs_error"].get<double>() < 1e-6);
}
