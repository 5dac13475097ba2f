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
#include <atomic>
#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include "ctxad/errors.hpp"
#include "ctxad/harness.hpp"
#include "ctxad/rng.hpp"

namespace ctxad::harness {

std::string detector_id(Scorer scorer) { return "contextual-" + to_string(scorer); }

namespace {

struct StreamResult {
  std::vector<DecisionRecord> decisions;
  std::vector<TruthRecord> truth;
  std::vector<ExplanationRecord> explanations;
  std::vector<LatencyRecord> latency;
  std::vector<Attribution> attributions;
  std::vector<Eigen::VectorXd> attentions;
  // Flagged attribution maps per contextual scorer, in scorer order.
  std::vector<std::vector<Eigen::MatrixXd>> flagged;
};

StreamResult run_stream(const Model& model, const std::string& stream,
                        const std::vector<WindowFrame>& windows,
                        const std::vector<Scorer>& scorers) {
  StreamResult out;
  out.flagged.resize(scorers.size());
  StreamState state(model);
  const auto& baseline = model.baseline_for(stream);
  for (const auto& w : windows) {
    WindowTiming timing;
    const WindowScore s = score_window(model, state, w, &timing);
    out.truth.push_back({stream, w.start_index, w.truth_label});
    out.attentions.push_back(s.step.attention);
    for (std::size_t k = 0; k < scorers.size(); ++k) {
      const Scorer scorer = scorers[k];
      const double score = score_of(s, scorer);
      const double theta = threshold_of(model, stream, scorer);
      const int flag = decide(score, theta) ? 1 : 0;
      const auto id = detector_id(scorer);
      out.decisions.push_back({stream, w.start_index, id, score, theta, flag});
      out.latency.push_back({stream, w.start_index, id, timing.contextual_ns});
      if (flag == 0) continue;
      Attribution attr = attribute(model, baseline, s.frozen, scorer, w);
      const std::vector<double> attention(s.step.attention.data(),
                                          s.step.attention.data() + s.step.attention.size());
      out.explanations.push_back(render_explanation(attr, attention, score, flag,
                                                    model.config.top_k,
                                                    {model.channels, w.start_ms, theta}));
      out.flagged[k].push_back(attr.gradient);
      out.attributions.push_back(std::move(attr));
    }
    out.decisions.push_back(
        {stream, w.start_index, kRulesDetector, s.rules.score, 1.0, s.rules.label});
    out.latency.push_back({stream, w.start_index, kRulesDetector, timing.rules_ns});
  }
  return out;
}

int worker_count(int requested, std::size_t jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(n, 1);
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(jobs, 1)));
}

}  // namespace

Detection detect(const Model& model, const StreamWindows& windows,
                 const std::vector<Scorer>& scorers, int workers) {
  for (const Scorer s : scorers) {
    if (s == Scorer::kResidual && !model.residual) {
      throw CalibrationError("residual scorer requested but the model has no residual head");
    }
  }
  std::vector<const std::pair<const std::string, std::vector<WindowFrame>>*> jobs;
  for (const auto& entry : windows) jobs.push_back(&entry);
  std::vector<StreamResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());

  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    const int n = worker_count(workers, jobs.size());
    for (int t = 0; t < n; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          try {
            results[i] = run_stream(model, jobs[i]->first, jobs[i]->second, scorers);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Detection out;
  std::vector<Eigen::VectorXd> attentions;
  std::vector<std::vector<Eigen::MatrixXd>> flagged(scorers.size());
  for (auto& r : results) {
    std::move(r.decisions.begin(), r.decisions.end(), std::back_inserter(out.decisions));
    std::move(r.truth.begin(), r.truth.end(), std::back_inserter(out.truth));
    std::move(r.explanations.begin(), r.explanations.end(), std::back_inserter(out.explanations));
    std::move(r.latency.begin(), r.latency.end(), std::back_inserter(out.latency));
    std::move(r.attributions.begin(), r.attributions.end(), std::back_inserter(out.attributions));
    std::move(r.attentions.begin(), r.attentions.end(), std::back_inserter(attentions));
    for (std::size_t k = 0; k < scorers.size(); ++k) {
      std::move(r.flagged[k].begin(), r.flagged[k].end(), std::back_inserter(flagged[k]));
    }
  }
  if (!attentions.empty()) {
    for (std::size_t k = 0; k < scorers.size(); ++k) {
      out.interpretability[detector_id(scorers[k])] =
          interpretability_metrics(attentions, flagged[k]);
    }
  }
  return out;
}

std::vector<DetectorReport> evaluate(
    const std::vector<DecisionRecord>& decisions, const std::vector<TruthRecord>& truth,
    const std::vector<LatencyRecord>& latency,
    const std::map<std::string, InterpretabilityMetrics>& interpretability) {
  using Key = std::pair<std::string, std::int64_t>;
  std::map<Key, int> labels;
  for (const auto& t : truth) {
    if (!labels.emplace(Key{t.stream, t.start}, t.label).second) {
      throw JoinError("duplicate truth record for " + t.stream + "@" + std::to_string(t.start));
    }
  }
  std::map<std::string, std::vector<const DecisionRecord*>> by_detector;
  for (const auto& d : decisions) by_detector[d.detector].push_back(&d);

  std::vector<std::string> orphans;
  for (const auto& [det, list] : by_detector) {
    std::set<Key> seen;
    for (const auto* d : list) {
      const Key key{d->stream, d->start};
      if (!labels.contains(key)) {
        orphans.push_back("decision " + det + " " + d->stream + "@" + std::to_string(d->start));
      }
      if (!seen.insert(key).second) {
        orphans.push_back("duplicate decision " + det + " " + d->stream + "@" +
                          std::to_string(d->start));
      }
    }
    for (const auto& [key, _] : labels) {
      if (!seen.contains(key)) {
        orphans.push_back("truth " + key.first + "@" + std::to_string(key.second) +
                          " has no " + det + " decision");
      }
    }
  }
  if (!orphans.empty()) {
    std::string msg = std::to_string(orphans.size()) + " unjoinable record(s):";
    for (std::size_t i = 0; i < orphans.size() && i < 20; ++i) msg += "\n  " + orphans[i];
    if (orphans.size() > 20) msg += "\n  ...";
    throw JoinError(msg);
  }

  std::map<std::string, std::vector<double>> lat;
  for (const auto& l : latency) lat[l.detector].push_back(static_cast<double>(l.latency_ns));

  std::vector<DetectorReport> reports;
  for (auto& [det, list] : by_detector) {
    std::sort(list.begin(), list.end(), [](const auto* a, const auto* b) {
      return std::tie(a->stream, a->start) < std::tie(b->stream, b->start);
    });
    DetectorReport r;
    r.detector = det;
    std::vector<int> pred, truths;
    std::vector<double> scores;
    for (const auto* d : list) {
      const int y = labels.at({d->stream, d->start});
      pred.push_back(d->decision);
      truths.push_back(y);
      scores.push_back(d->score);
      r.timeline.emplace_back(*d, y);
    }
    r.counts = eval::confusion(pred, truths);
    r.prf = eval::prf1(r.counts);
    r.acc = eval::accuracy_fpr(r.counts);
    try {
      r.roc = eval::roc_auc(scores, truths);
    } catch (const UndefinedMetricError&) {
      r.roc.reset();
    }
    if (const auto it = lat.find(det); it != lat.end() && !it->second.empty()) {
      r.latency = eval::latency_stats(it->second);
    }
    if (const auto it = interpretability.find(det); it != interpretability.end()) {
      r.interpretability = it->second;
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

namespace {

std::int64_t peak_rss_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) return std::stoll(line.substr(6));
  }
  return 0;
}

}  // namespace

BenchReport bench(const RunConfig& config, int workers) {
  (void)workers;  // tiers run on one thread so latency is per-window work only
  const auto& b = config.bench;
  const auto& p = config.pipeline;
  const auto kind = config.scenario ? config.scenario->kind : sim::ScenarioKind::kSmartGrid;

  sim::ScenarioSpec cal;
  cal.kind = kind;
  cal.streams = b.calibration_streams;
  cal.duration_s = b.calibration_duration_s;
  cal.sample_period_ms = p.sample_period_ms;
  cal.seed = derive_seed(config.seed, {"bench", "calibration"});
  const auto cal_readings = sim::generate_scenario(cal).readings;
  const auto channels = sim::scenario_channels(kind);
  const Model model = calibrate(p, channels, window_readings(cal_readings, channels, p));

  sim::ScenarioSpec live = cal;
  live.streams = b.streams;
  const std::int64_t samples = (b.windows - 1) * p.stride + p.window_length;
  live.duration_s = (samples * p.sample_period_ms + 999) / 1000;
  live.seed = derive_seed(config.seed, {"bench", "live"});
  const auto windows = window_readings(sim::generate_scenario(live).readings, channels, p);
  std::vector<const std::vector<WindowFrame>*> streams;
  for (const auto& [_, w] : windows) streams.push_back(&w);

  BenchReport report;
  report.streams = b.streams;
  report.windows_per_stream = b.windows;
  report.model_bytes = model.state_bytes();

  const std::array<std::pair<const char*, int>, 3> tiers{{
      {"low", std::max(1, b.streams / 10)},
      {"medium", std::max(1, b.streams / 2)},
      {"high", b.streams},
  }};
  for (const auto& [name, count] : tiers) {
    std::vector<StreamState> states;
    states.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) states.emplace_back(model);
    std::vector<double> lat;
    lat.reserve(static_cast<std::size_t>(count) * static_cast<std::size_t>(b.windows));
    const auto t0 = std::chrono::steady_clock::now();
    // Interleaved: every stream advances one window before any advances two.
    for (int w = 0; w < b.windows; ++w) {
      for (int s = 0; s < count; ++s) {
        const auto& list = *streams[static_cast<std::size_t>(s)];
        if (static_cast<std::size_t>(w) >= list.size()) continue;
        const auto a = std::chrono::steady_clock::now();
        const auto score = score_window(model, states[static_cast<std::size_t>(s)],
                                        list[static_cast<std::size_t>(w)]);
        const auto z = std::chrono::steady_clock::now();
        (void)score;
        lat.push_back(static_cast<double>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(z - a).count()));
      }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    BenchTier tier;
    tier.name = name;
    tier.streams = count;
    tier.windows = static_cast<std::int64_t>(lat.size());
    if (!lat.empty()) tier.latency = eval::latency_stats(lat);
    tier.windows_per_second = secs > 0 ? static_cast<double>(lat.size()) / secs : 0.0;
    std::size_t bytes = 0;
    for (const auto& st : states) bytes += st.state_bytes();
    tier.state_bytes = bytes;
    if (std::string_view(name) == "high") {
      report.windows_processed = tier.windows;
      report.latency_samples = lat.size();
      report.windows_per_second = tier.windows_per_second;
      report.stream_state_bytes = bytes;
      report.per_stream_state_bytes = count > 0 ? bytes / static_cast<std::size_t>(count) : 0;
      report.state_bytes = bytes + report.model_bytes;
    }
    report.tiers.push_back(std::move(tier));
  }
  report.peak_rss_kb = peak_rss_kb();
  return report;
}

}  // namespace ctxad::harness
