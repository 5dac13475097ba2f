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
#include <fstream>
#include <set>

#include "ctxad/errors.hpp"
#include "ctxad/harness.hpp"
#include "ctxad/rng.hpp"

namespace ctxad::harness {

namespace {

using Json = nlohmann::json;

void check_fields(const Json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; })) {
      throw ConfigError((path.empty() ? "" : path + ".") + key + ": unknown field");
    }
  }
}

template <typename T>
void read(const Json& obj, const char* key, const std::string& path, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string field = (path.empty() ? "" : path + ".") + key;
  try {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_integer()) throw ConfigError(field + ": expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(field + ": expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(field + ": expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError(field + ": expected a string");
    }
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(field + ": wrong type");
  }
}

sim::AnomalyEvent parse_event(const Json& j, const std::string& path) {
  check_fields(j, path, {"kind", "stream", "channels", "start_index", "duration", "magnitude"});
  sim::AnomalyEvent e;
  std::string kind;
  read(j, "kind", path, kind);
  if (kind.empty()) throw ConfigError(path + ".kind: required");
  e.kind = sim::parse_anomaly_kind(kind);
  read(j, "stream", path, e.stream_id);
  if (const auto it = j.find("channels"); it != j.end()) {
    if (!it->is_array()) throw ConfigError(path + ".channels: expected a list");
    for (const auto& c : *it) {
      if (!c.is_string()) throw ConfigError(path + ".channels: expected strings");
      e.channels.push_back(c.get<std::string>());
    }
  }
  read(j, "start_index", path, e.start_index);
  read(j, "duration", path, e.duration);
  read(j, "magnitude", path, e.magnitude);
  return e;
}

}  // namespace

std::vector<Scorer> parse_scorers(const std::string& text) {
  if (text == "both") return {Scorer::kMahalanobis, Scorer::kResidual};
  return {parse_scorer(text)};
}

RunConfig parse_run_config(const Json& doc) {
  check_fields(doc, "", {"seed", "scenario", "calibration", "events", "event_plan", "network",
                         "pipeline", "bench", "out_dir"});
  RunConfig c;
  read(doc, "seed", "", c.seed);
  read(doc, "out_dir", "", c.out_dir);

  if (const auto it = doc.find("scenario"); it != doc.end()) {
    check_fields(*it, "scenario",
                 {"kind", "streams", "duration_s", "sample_period_ms", "noise_scale", "start_ms"});
    sim::ScenarioSpec s;
    std::string kind = "smartgrid";
    read(*it, "kind", "scenario", kind);
    try {
      s.kind = sim::parse_scenario_kind(kind);
    } catch (const ConfigError&) {
      throw ConfigError("scenario.kind: unknown scenario kind '" + kind + "'");
    }
    read(*it, "streams", "scenario", s.streams);
    read(*it, "duration_s", "scenario", s.duration_s);
    read(*it, "sample_period_ms", "scenario", s.sample_period_ms);
    read(*it, "noise_scale", "scenario", s.noise_scale);
    read(*it, "start_ms", "scenario", s.start_ms);
    try {
      s.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("scenario.") + e.what());
    }
    c.scenario = s;
    c.pipeline.sample_period_ms = s.sample_period_ms;
  }
  if (const auto it = doc.find("calibration"); it != doc.end()) {
    check_fields(*it, "calibration", {"duration_s"});
    std::int64_t d = 0;
    read(*it, "duration_s", "calibration", d);
    if (d < 0) throw ConfigError("calibration.duration_s: must be >= 0");
    c.calibration_duration_s = d;
  }
  if (const auto it = doc.find("events"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("events: expected a list");
    for (std::size_t i = 0; i < it->size(); ++i) {
      c.events.push_back(parse_event((*it)[i], "events[" + std::to_string(i) + "]"));
    }
  }
  if (const auto it = doc.find("event_plan"); it != doc.end()) {
    check_fields(*it, "event_plan", {"anomalous_fraction", "kinds", "margin"});
    EventPlan plan;
    read(*it, "anomalous_fraction", "event_plan", plan.anomalous_fraction);
    read(*it, "margin", "event_plan", plan.margin);
    if (!(plan.anomalous_fraction >= 0.0 && plan.anomalous_fraction < 1.0)) {
      throw ConfigError("event_plan.anomalous_fraction: must be in [0, 1)");
    }
    if (const auto k = it->find("kinds"); k != it->end()) {
      if (!k->is_array()) throw ConfigError("event_plan.kinds: expected a list");
      for (std::size_t i = 0; i < k->size(); ++i) {
        const std::string path = "event_plan.kinds[" + std::to_string(i) + "]";
        check_fields((*k)[i], path, {"kind", "duration", "magnitude"});
        KindPlan kp;
        std::string kind;
        read((*k)[i], "kind", path, kind);
        kp.kind = sim::parse_anomaly_kind(kind);
        read((*k)[i], "duration", path, kp.duration);
        read((*k)[i], "magnitude", path, kp.magnitude);
        if (kp.duration < 1) throw ConfigError(path + ".duration: must be >= 1");
        plan.kinds.push_back(kp);
      }
    }
    if (plan.kinds.empty()) throw ConfigError("event_plan.kinds: at least one kind required");
    c.plan = plan;
  }
  if (const auto it = doc.find("network"); it != doc.end()) {
    check_fields(*it, "network", {"loss_prob", "latency_ms", "jitter_ms"});
    read(*it, "loss_prob", "network", c.network.loss_prob);
    read(*it, "latency_ms", "network", c.network.latency_ms);
    read(*it, "jitter_ms", "network", c.network.jitter_ms);
    c.network.validate();
  }
  if (const auto it = doc.find("pipeline"); it != doc.end()) {
    check_fields(*it, "pipeline",
                 {"window", "stride", "denoise_width", "gap_limit", "d", "k", "quantile",
                  "epsilon_scale", "per_stream_baseline", "top_k", "sample_period_ms", "scorer",
                  "rules"});
    auto& p = c.pipeline;
    read(*it, "window", "pipeline", p.window_length);
    read(*it, "stride", "pipeline", p.stride);
    read(*it, "denoise_width", "pipeline", p.denoise_width);
    read(*it, "gap_limit", "pipeline", p.gap_limit);
    read(*it, "d", "pipeline", p.embed_dim);
    read(*it, "k", "pipeline", p.context_length);
    read(*it, "quantile", "pipeline", p.quantile);
    read(*it, "epsilon_scale", "pipeline", p.epsilon_scale);
    read(*it, "per_stream_baseline", "pipeline", p.per_stream_baseline);
    read(*it, "top_k", "pipeline", p.top_k);
    read(*it, "sample_period_ms", "pipeline", p.sample_period_ms);
    std::string scorer;
    read(*it, "scorer", "pipeline", scorer);
    if (!scorer.empty()) {
      try {
        c.scorers = parse_scorers(scorer);
      } catch (const ConfigError&) {
        throw ConfigError("pipeline.scorer: expected mahalanobis, residual or both");
      }
    }
    if (const auto r = it->find("rules"); r != it->end()) {
      check_fields(*r, "pipeline.rules",
                   {"bound_sigmas", "step_sigmas", "min_band_rel", "min_band_abs"});
      read(*r, "bound_sigmas", "pipeline.rules", p.rules.bound_sigmas);
      read(*r, "step_sigmas", "pipeline.rules", p.rules.step_sigmas);
      read(*r, "min_band_rel", "pipeline.rules", p.rules.min_band_rel);
      read(*r, "min_band_abs", "pipeline.rules", p.rules.min_band_abs);
    }
  }
  if (const auto it = doc.find("bench"); it != doc.end()) {
    check_fields(*it, "bench",
                 {"streams", "windows", "calibration_streams", "calibration_duration_s"});
    read(*it, "streams", "bench", c.bench.streams);
    read(*it, "windows", "bench", c.bench.windows);
    read(*it, "calibration_streams", "bench", c.bench.calibration_streams);
    read(*it, "calibration_duration_s", "bench", c.bench.calibration_duration_s);
    if (c.bench.streams < 1) throw ConfigError("bench.streams: must be >= 1");
    if (c.bench.windows < 1) throw ConfigError("bench.windows: must be >= 1");
    if (c.bench.calibration_streams < 1) {
      throw ConfigError("bench.calibration_streams: must be >= 1");
    }
  }
  c.pipeline.seed = c.seed;
  c.pipeline.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

nlohmann::ordered_json RunConfig::snapshot() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  if (scenario) {
    j["scenario"] = {{"kind", sim::to_string(scenario->kind)},
                     {"streams", scenario->streams},
                     {"duration_s", scenario->duration_s},
                     {"sample_period_ms", scenario->sample_period_ms},
                     {"noise_scale", scenario->noise_scale},
                     {"start_ms", scenario->start_ms}};
  }
  if (calibration_duration_s) j["calibration"] = {{"duration_s", *calibration_duration_s}};
  if (!events.empty()) {
    auto& list = j["events"] = nlohmann::ordered_json::array();
    for (const auto& e : events) {
      list.push_back({{"kind", sim::to_string(e.kind)},
                      {"stream", e.stream_id},
                      {"channels", e.channels},
                      {"start_index", e.start_index},
                      {"duration", e.duration},
                      {"magnitude", e.magnitude}});
    }
  }
  if (plan) {
    auto kinds = nlohmann::ordered_json::array();
    for (const auto& k : plan->kinds) {
      kinds.push_back({{"kind", sim::to_string(k.kind)},
                       {"duration", k.duration},
                       {"magnitude", k.magnitude}});
    }
    j["event_plan"] = {{"anomalous_fraction", plan->anomalous_fraction},
                       {"margin", plan->margin},
                       {"kinds", kinds}};
  }
  j["network"] = {{"loss_prob", network.loss_prob},
                  {"latency_ms", network.latency_ms},
                  {"jitter_ms", network.jitter_ms}};
  const auto& p = pipeline;
  std::string scorer = scorers.size() > 1 ? "both" : to_string(scorers.front());
  j["pipeline"] = {{"window", p.window_length},
                   {"stride", p.stride},
                   {"denoise_width", p.denoise_width},
                   {"gap_limit", p.gap_limit},
                   {"d", p.embed_dim},
                   {"k", p.context_length},
                   {"quantile", p.quantile},
                   {"epsilon_scale", p.epsilon_scale},
                   {"per_stream_baseline", p.per_stream_baseline},
                   {"top_k", p.top_k},
                   {"sample_period_ms", p.sample_period_ms},
                   {"scorer", scorer},
                   {"rules",
                    {{"bound_sigmas", p.rules.bound_sigmas},
                     {"step_sigmas", p.rules.step_sigmas},
                     {"min_band_rel", p.rules.min_band_rel},
                     {"min_band_abs", p.rules.min_band_abs}}}};
  j["bench"] = {{"streams", bench.streams},
                {"windows", bench.windows},
                {"calibration_streams", bench.calibration_streams},
                {"calibration_duration_s", bench.calibration_duration_s}};
  return j;
}

std::uint64_t scenario_seed(const RunConfig& c) { return derive_seed(c.seed, {"scenario"}); }
std::uint64_t calibration_seed(const RunConfig& c) { return derive_seed(c.seed, {"calibration"}); }
std::uint64_t plan_seed(const RunConfig& c) { return derive_seed(c.seed, {"event_plan"}); }
std::uint64_t injection_seed(const RunConfig& c) { return derive_seed(c.seed, {"injection"}); }
std::uint64_t network_seed(const RunConfig& c) { return derive_seed(c.seed, {"network"}); }

std::vector<sim::AnomalyEvent> plan_events(const sim::ScenarioSpec& spec, const EventPlan& plan,
                                           Eigen::Index window_length, std::uint64_t seed) {
  const std::int64_t samples = spec.samples_per_stream();
  const std::int64_t l = window_length;
  const std::int64_t windows_per_stream = std::max<std::int64_t>(samples - l + 1, 0);
  const std::int64_t total_windows = windows_per_stream * spec.streams;
  const auto target =
      static_cast<std::int64_t>(std::ceil(plan.anomalous_fraction * static_cast<double>(total_windows)));
  const std::int64_t margin = plan.margin > 0 ? plan.margin : l;
  const auto channels = sim::scenario_channels(spec.kind);

  std::vector<sim::AnomalyEvent> events;
  if (target == 0 || plan.kinds.empty()) return events;

  Xoshiro256 rng(seed);
  // Occupied sample intervals per stream, margins included.
  std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> busy(
      static_cast<std::size_t>(spec.streams));
  std::int64_t labeled = 0;
  std::size_t next_kind = 0;
  int failures = 0;
  while (labeled < target && failures < 10'000) {
    const auto& kp = plan.kinds[next_kind % plan.kinds.size()];
    const auto s = static_cast<int>(rng.next() % static_cast<std::uint64_t>(spec.streams));
    // Leave a window's worth of clean history at the start for the memory.
    const std::int64_t lo = 2 * l;
    const std::int64_t hi = samples - kp.duration - l;
    if (hi <= lo) {
      ++failures;
      continue;
    }
    const std::int64_t start = lo + static_cast<std::int64_t>(
                                        rng.next() % static_cast<std::uint64_t>(hi - lo));
    const std::int64_t end = start + kp.duration;
    auto& intervals = busy[static_cast<std::size_t>(s)];
    const bool clash = std::any_of(intervals.begin(), intervals.end(), [&](const auto& iv) {
      return start < iv.second + margin && iv.first < end + margin;
    });
    if (clash) {
      ++failures;
      continue;
    }
    intervals.emplace_back(start, end);
    sim::AnomalyEvent e;
    e.kind = kp.kind;
    e.stream_id = sim::stream_name(spec.kind, s, spec.streams);
    e.start_index = start;
    e.duration = kp.duration;
    e.magnitude = kp.magnitude;
    if (kp.kind != sim::AnomalyKind::kDropout && kp.kind != sim::AnomalyKind::kDosBurst) {
      e.channels = {channels[rng.next() % channels.size()]};
    }
    events.push_back(std::move(e));
    // Windows whose span touches [start, end).
    const std::int64_t first = std::max<std::int64_t>(start - l + 1, 0);
    const std::int64_t last = std::min<std::int64_t>(end - 1, windows_per_stream - 1);
    labeled += std::max<std::int64_t>(last - first + 1, 0);
    ++next_kind;
  }
  return events;
}

Simulation simulate(const RunConfig& config) {
  if (!config.scenario) throw ConfigError("scenario: required for simulate");
  sim::ScenarioSpec spec = *config.scenario;
  spec.seed = scenario_seed(config);
  auto scenario = sim::generate_scenario(spec);

  std::vector<sim::AnomalyEvent> events = config.events;
  if (config.plan) {
    auto planned = plan_events(spec, *config.plan, config.pipeline.window_length, plan_seed(config));
    events.insert(events.end(), planned.begin(), planned.end());
  }
  const auto scaled = sim::channel_noise_sigma(spec.kind, spec.noise_scale);
  Simulation out;
  try {
    auto injected = sim::inject_anomalies(scenario.readings, scenario.schemas, events, scaled,
                                          injection_seed(config));
    out.events = std::move(injected.log);
    scenario.readings = std::move(injected.readings);
  } catch (const RangeError& e) {
    throw ConfigError(std::string("events: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("events: ") + e.what());
  }
  sim::NetworkEffects fx = config.network;
  fx.seed = network_seed(config);
  out.telemetry = sim::apply_network_effects(scenario.readings, fx);

  if (config.calibration_duration_s) {
    sim::ScenarioSpec cal = spec;
    cal.seed = calibration_seed(config);
    cal.duration_s = *config.calibration_duration_s;
    out.calibration = sim::generate_scenario(cal).readings;
  }
  return out;
}

}  // namespace ctxad::harness
