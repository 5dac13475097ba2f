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

#include "ctxad/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <tuple>

#include "ctxad/errors.hpp"
#include "ctxad/rng.hpp"
#include "json.hpp"

namespace ctxad::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Slow-oscillation periods in seconds.
constexpr double kVoltagePeriod = 3600.0;
constexpr double kLoadPeriod = 1800.0;
constexpr double kHeartRatePeriod = 7200.0;
constexpr double kSpo2Period = 5400.0;

}  // namespace

std::string to_string(ScenarioKind kind) {
  return kind == ScenarioKind::kSmartGrid ? "smartgrid" : "healthcare";
}

ScenarioKind parse_scenario_kind(const std::string& text) {
  if (text == "smartgrid") return ScenarioKind::kSmartGrid;
  if (text == "healthcare") return ScenarioKind::kHealthcare;
  throw ConfigError("kind: unknown scenario kind '" + text + "'");
}

void ScenarioSpec::validate() const {
  if (streams < 1) throw ConfigError("streams: must be >= 1");
  if (duration_s < 0) throw ConfigError("duration_s: must be >= 0");
  if (sample_period_ms <= 0) throw ConfigError("sample_period_ms: must be > 0");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw ConfigError("noise_scale: must be finite and >= 0");
  }
  if (start_ms < 0) throw ConfigError("start_ms: must be >= 0");
}

std::vector<std::string> scenario_channels(ScenarioKind kind) {
  if (kind == ScenarioKind::kSmartGrid) return {"voltage", "current"};
  return {"heart_rate", "spo2"};
}

std::vector<double> channel_base_sigma(ScenarioKind kind) {
  if (kind == ScenarioKind::kSmartGrid) return {2.3, 0.1};
  return {1.5, 0.4};
}

std::vector<double> channel_noise_sigma(ScenarioKind kind, double noise_scale) {
  auto sigma = channel_base_sigma(kind);
  if (kind == ScenarioKind::kSmartGrid) {
    const auto base = channel_baseline(kind);
    sigma[1] = std::hypot(sigma[1], sigma[0] * base[1] / base[0]);
  }
  for (double& s : sigma) s *= noise_scale;
  return sigma;
}

std::vector<double> channel_baseline(ScenarioKind kind) {
  if (kind == ScenarioKind::kSmartGrid) return {230.0, 10.0};
  return {75.0, 97.5};
}

std::string stream_name(ScenarioKind kind, int index, int streams) {
  int width = 2;
  for (int n = streams - 1; n >= 100; n /= 10) ++width;
  std::string digits = std::to_string(index);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return (kind == ScenarioKind::kSmartGrid ? "sg-" : "hc-") + digits;
}

Scenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Scenario out;
  const auto channels = scenario_channels(spec.kind);
  const auto sigma = channel_base_sigma(spec.kind);
  const auto base = channel_baseline(spec.kind);
  const std::int64_t samples = spec.samples_per_stream();
  out.readings.reserve(static_cast<std::size_t>(samples) * channels.size() *
                       static_cast<std::size_t>(spec.streams));

  for (int s = 0; s < spec.streams; ++s) {
    const auto id = stream_name(spec.kind, s, spec.streams);
    out.schemas.push_back({id, channels, spec.sample_period_ms});

    Xoshiro256 phase_rng(derive_seed(spec.seed, {id, "phase"}));
    const double phase0 = phase_rng.uniform(0.0, kTwoPi);
    const double phase1 = phase_rng.uniform(0.0, kTwoPi);
    Xoshiro256 rng0(derive_seed(spec.seed, {id, channels[0]}));
    Xoshiro256 rng1(derive_seed(spec.seed, {id, channels[1]}));

    for (std::int64_t t = 0; t < samples; ++t) {
      const std::int64_t ts = spec.start_ms + t * spec.sample_period_ms;
      const double sec = static_cast<double>(t * spec.sample_period_ms) / 1000.0;
      double v0 = 0.0;
      double v1 = 0.0;
      if (spec.kind == ScenarioKind::kSmartGrid) {
        const double clean_v =
            base[0] * (1.0 + 0.01 * std::sin(kTwoPi * sec / kVoltagePeriod + phase0));
        v0 = clean_v + spec.noise_scale * sigma[0] * rng0.normal();
        const double load =
            base[1] * (1.0 + 0.05 * std::sin(kTwoPi * sec / kLoadPeriod + phase1));
        v1 = load * (v0 / base[0]) + spec.noise_scale * sigma[1] * rng1.normal();
      } else {
        v0 = base[0] + 10.0 * std::sin(kTwoPi * sec / kHeartRatePeriod + phase0) +
             spec.noise_scale * sigma[0] * rng0.normal();
        v1 = base[1] + 0.8 * std::sin(kTwoPi * sec / kSpo2Period + phase1) +
             spec.noise_scale * sigma[1] * rng1.normal();
        v1 = std::clamp(v1, 95.0, 100.0);
      }
      out.readings.push_back({ts, id, channels[0], v0, Label{0}});
      out.readings.push_back({ts, id, channels[1], v1, Label{0}});
    }
  }
  return out;
}

std::string to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kSpike: return "spike";
    case AnomalyKind::kDrift: return "drift";
    case AnomalyKind::kDropout: return "dropout";
    case AnomalyKind::kStuck: return "stuck";
    case AnomalyKind::kSpoof: return "spoof";
    case AnomalyKind::kDosBurst: return "dos_burst";
  }
  return "unknown";
}

AnomalyKind parse_anomaly_kind(const std::string& text) {
  for (const auto k : {AnomalyKind::kSpike, AnomalyKind::kDrift, AnomalyKind::kDropout,
                       AnomalyKind::kStuck, AnomalyKind::kSpoof, AnomalyKind::kDosBurst}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("events.kind: unknown anomaly kind '" + text + "'");
}

namespace {

bool is_rate_event(AnomalyKind k) {
  return k == AnomalyKind::kDropout || k == AnomalyKind::kDosBurst;
}

std::string event_name(std::size_t index, const AnomalyEvent& e) {
  return "event #" + std::to_string(index) + " (" + to_string(e.kind) + " on '" +
         e.stream_id + "')";
}

struct StreamLayout {
  const StreamSchema* schema = nullptr;
  std::int64_t origin = std::numeric_limits<std::int64_t>::max();
  std::int64_t samples = 0;
  Eigen::MatrixXd clean;  // N x samples, NaN where absent
};

}  // namespace

InjectionResult inject_anomalies(std::span<const SensorReading> readings,
                                 std::span<const StreamSchema> schemas,
                                 std::span<const AnomalyEvent> events,
                                 std::span<const double> sigma, std::uint64_t seed) {
  std::map<std::string, StreamLayout> layout;
  for (const auto& s : schemas) {
    s.validate();
    if (sigma.size() != s.size()) {
      throw ParameterError("sigma must have one entry per schema channel");
    }
    layout[s.stream_id].schema = &s;
  }
  for (const auto& r : readings) {
    auto it = layout.find(r.stream_id);
    if (it == layout.end()) throw SchemaError("reading for unknown stream '" + r.stream_id + "'");
    it->second.origin = std::min(it->second.origin, r.timestamp_ms);
  }
  auto index_of = [](const StreamLayout& l, std::int64_t ts) {
    const auto p = l.schema->sample_period_ms;
    return (ts - l.origin + p / 2) / p;
  };
  for (const auto& r : readings) {
    auto& l = layout[r.stream_id];
    l.samples = std::max(l.samples, index_of(l, r.timestamp_ms) + 1);
  }
  for (auto& [id, l] : layout) {
    l.clean = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(l.schema->size()),
                                        l.samples, std::numeric_limits<double>::quiet_NaN());
  }
  for (const auto& r : readings) {
    auto& l = layout[r.stream_id];
    const int i = l.schema->channel_index(r.channel_id);
    if (i < 0) throw SchemaError("reading for unknown channel '" + r.channel_id + "'");
    const auto t = index_of(l, r.timestamp_ms);
    if (std::isnan(l.clean(i, t))) l.clean(i, t) = r.value;
  }

  // Resolved channel masks per event.
  std::vector<std::vector<int>> event_channels(events.size());
  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto& e = events[k];
    const auto it = layout.find(e.stream_id);
    if (it == layout.end()) throw SchemaError(event_name(k, e) + ": unknown stream");
    if (e.start_index < 0 || e.duration < 1) {
      throw RangeError(event_name(k, e) + ": start_index must be >= 0 and duration >= 1");
    }
    if (e.start_index + e.duration > it->second.samples) {
      throw RangeError(event_name(k, e) + ": covers samples [" +
                       std::to_string(e.start_index) + ", " +
                       std::to_string(e.start_index + e.duration) +
                       ") beyond scenario length " + std::to_string(it->second.samples));
    }
    if (is_rate_event(e.kind)) {
      if (e.kind == AnomalyKind::kDosBurst && !(e.magnitude >= 1.0)) {
        throw ParameterError(event_name(k, e) + ": dos_burst magnitude must be >= 1");
      }
      continue;
    }
    if (e.channels.empty()) throw ParameterError(event_name(k, e) + ": no channels");
    for (const auto& c : e.channels) {
      const int i = it->second.schema->channel_index(c);
      if (i < 0) throw SchemaError(event_name(k, e) + ": unknown channel '" + c + "'");
      event_channels[k].push_back(i);
    }
  }

  InjectionResult out;
  out.readings.reserve(readings.size());
  std::vector<Xoshiro256> dos_rng;
  dos_rng.reserve(events.size());
  for (std::size_t k = 0; k < events.size(); ++k) {
    dos_rng.emplace_back(derive_seed(seed, {"dos", events[k].stream_id, std::to_string(k)}));
    EventLogEntry entry;
    entry.event = k;
    entry.spec = events[k];
    const auto& l = layout[events[k].stream_id];
    const auto p = l.schema->sample_period_ms;
    entry.start_ms = l.origin + events[k].start_index * p;
    entry.end_ms = l.origin + (events[k].start_index + events[k].duration - 1) * p;
    out.log.push_back(std::move(entry));
  }

  auto covers = [](const AnomalyEvent& e, std::int64_t t) {
    return t >= e.start_index && t < e.start_index + e.duration;
  };

  for (const auto& r : readings) {
    const auto& l = layout[r.stream_id];
    const int i = l.schema->channel_index(r.channel_id);
    const auto t = index_of(l, r.timestamp_ms);

    std::ptrdiff_t value_event = -1;
    std::ptrdiff_t rate_event = -1;
    for (std::size_t k = 0; k < events.size(); ++k) {
      const auto& e = events[k];
      if (e.stream_id != r.stream_id || !covers(e, t)) continue;
      if (is_rate_event(e.kind)) {
        rate_event = static_cast<std::ptrdiff_t>(k);
      } else if (std::find(event_channels[k].begin(), event_channels[k].end(), i) !=
                 event_channels[k].end()) {
        value_event = static_cast<std::ptrdiff_t>(k);
      }
    }

    SensorReading mutated = r;
    if (value_event >= 0) {
      const auto& e = events[static_cast<std::size_t>(value_event)];
      const double s = sigma[static_cast<std::size_t>(i)];
      const double clean = std::isnan(l.clean(i, t)) ? r.value : l.clean(i, t);
      const auto pre = e.start_index > 0 ? e.start_index - 1 : 0;
      const double before = std::isnan(l.clean(i, pre)) ? clean : l.clean(i, pre);
      switch (e.kind) {
        case AnomalyKind::kSpike:
          mutated.value = clean + e.magnitude * s;
          break;
        case AnomalyKind::kDrift: {
          const double frac = static_cast<double>(t - e.start_index + 1) /
                              static_cast<double>(e.duration);
          mutated.value = clean + frac * e.magnitude * s;
          break;
        }
        case AnomalyKind::kStuck:
          mutated.value = before;
          break;
        case AnomalyKind::kSpoof:
          mutated.value = before + e.magnitude * s;
          break;
        default:
          break;
      }
    }
    const bool labeled = value_event >= 0 || rate_event >= 0;
    if (labeled) mutated.truth_label = Label{1};

    if (rate_event >= 0) {
      const auto k = static_cast<std::size_t>(rate_event);
      const auto& e = events[k];
      if (e.kind == AnomalyKind::kDropout) {
        ++out.log[k].removed;
        continue;
      }
      out.readings.push_back(mutated);
      const auto copies = static_cast<std::int64_t>(std::llround(e.magnitude)) - 1;
      const double jitter = 0.1 * sigma[static_cast<std::size_t>(i)];
      for (std::int64_t c = 0; c < copies; ++c) {
        SensorReading dup = mutated;
        dup.value = mutated.value + jitter * dos_rng[k].normal();
        out.readings.push_back(std::move(dup));
        ++out.log[k].added;
      }
      continue;
    }
    out.readings.push_back(std::move(mutated));
  }
  return out;
}

void NetworkEffects::validate() const {
  if (!(loss_prob >= 0.0 && loss_prob <= 1.0)) {
    throw ConfigError("network.loss_prob: must be in [0, 1]");
  }
  if (latency_ms < 0) throw ConfigError("network.latency_ms: must be >= 0");
  if (jitter_ms < 0) throw ConfigError("network.jitter_ms: must be >= 0");
}

NetworkDraw network_draw(const NetworkEffects& fx, const SensorReading& r,
                         std::uint64_t occurrence) {
  const std::uint64_t identity =
      derive_seed(fx.seed, {r.stream_id, r.channel_id, std::to_string(r.timestamp_ms),
                            std::to_string(occurrence)});
  NetworkDraw d;
  d.loss_uniform = unit_interval(splitmix64(identity ^ 0x6c6f7373ULL));
  const double u = unit_interval(splitmix64(identity ^ 0x6a6974ULL));
  d.jitter_ms = std::min<std::int64_t>(
      fx.jitter_ms, static_cast<std::int64_t>(u * static_cast<double>(fx.jitter_ms + 1)));
  return d;
}

std::vector<SensorReading> apply_network_effects(std::span<const SensorReading> readings,
                                                 const NetworkEffects& fx) {
  fx.validate();
  std::map<std::tuple<std::string, std::string, std::int64_t>, std::uint64_t> seen;
  std::vector<SensorReading> out;
  out.reserve(readings.size());
  for (const auto& r : readings) {
    const auto occurrence = seen[{r.stream_id, r.channel_id, r.timestamp_ms}]++;
    const auto draw = network_draw(fx, r, occurrence);
    if (draw.loss_uniform < fx.loss_prob) continue;
    SensorReading moved = r;
    moved.timestamp_ms += fx.latency_ms + draw.jitter_ms;
    out.push_back(std::move(moved));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.timestamp_ms < b.timestamp_ms;
  });
  return out;
}

void write_event_log(std::ostream& out, std::span<const EventLogEntry> log) {
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    j["event"] = e.event;
    j["kind"] = to_string(e.spec.kind);
    j["stream"] = e.spec.stream_id;
    j["channels"] = e.spec.channels;
    j["start_index"] = e.spec.start_index;
    j["end_index"] = e.spec.start_index + e.spec.duration - 1;
    j["duration"] = e.spec.duration;
    j["magnitude"] = e.spec.magnitude;
    j["start_ts"] = e.start_ms;
    j["end_ts"] = e.end_ms;
    if (e.spec.kind == AnomalyKind::kDropout) {
      j["hole"] = {{"from_ts", e.start_ms}, {"to_ts", e.end_ms}, {"removed", e.removed},
                   {"label", 1}};
    }
    if (e.spec.kind == AnomalyKind::kDosBurst) j["added"] = e.added;
    out << j.dump() << '\n';
  }
}

}  // namespace ctxad::sim
