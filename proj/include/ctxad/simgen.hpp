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

#ifndef CTXAD_SIMGEN_HPP_
#define CTXAD_SIMGEN_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ctxad/telemetry.hpp"

namespace ctxad::sim {

enum class ScenarioKind { kSmartGrid, kHealthcare };

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& text);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kSmartGrid;
  int streams = 1;
  std::int64_t duration_s = 0;
  std::int64_t sample_period_ms = 5000;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;
  std::int64_t start_ms = 1'700'000'000'000;

  void validate() const;
  std::int64_t samples_per_stream() const {
    return duration_s * 1000 / sample_period_ms;
  }
};

// Channel layout and per-channel generator noise terms (at noise_scale = 1).
std::vector<std::string> scenario_channels(ScenarioKind kind);
std::vector<double> channel_base_sigma(ScenarioKind kind);
// Total per-sample noise std of each channel, the unit for injected
// magnitudes. Current inherits voltage noise through the load coupling.
std::vector<double> channel_noise_sigma(ScenarioKind kind, double noise_scale = 1.0);
std::vector<double> channel_baseline(ScenarioKind kind);
std::string stream_name(ScenarioKind kind, int index, int streams);

struct Scenario {
  std::vector<SensorReading> readings;
  std::vector<StreamSchema> schemas;
};

// Stream-major, then time, then channel order. Every reading carries label 0.
Scenario generate_scenario(const ScenarioSpec& spec);

enum class AnomalyKind { kSpike, kDrift, kDropout, kStuck, kSpoof, kDosBurst };

std::string to_string(AnomalyKind kind);
AnomalyKind parse_anomaly_kind(const std::string& text);

struct AnomalyEvent {
  AnomalyKind kind = AnomalyKind::kSpike;
  std::string stream_id;
  std::vector<std::string> channels;  // ignored by dropout / dos_burst
  std::int64_t start_index = 0;
  std::int64_t duration = 1;
  // Multiples of the channel sigma for spike, drift and spoof; emission-rate
  // multiplier for dos_burst.
  double magnitude = 0.0;

  bool operator==(const AnomalyEvent&) const = default;
};

// Sidecar record for one applied event, with resolved sample indices.
struct EventLogEntry {
  std::size_t event = 0;
  AnomalyEvent spec;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;  // timestamp of the last covered sample
  std::int64_t removed = 0;
  std::int64_t added = 0;
};

struct InjectionResult {
  std::vector<SensorReading> readings;
  std::vector<EventLogEntry> log;
};

// Value events (spike, drift, stuck, spoof) are evaluated against the clean
// value; for each sample the last covering value event wins. Rate events
// (dropout, dos_burst) likewise resolve by last-wins. `sigma` is the
// per-channel noise scale in schema channel order, taken from the scenario.
InjectionResult inject_anomalies(std::span<const SensorReading> readings,
                                 std::span<const StreamSchema> schemas,
                                 std::span<const AnomalyEvent> events,
                                 std::span<const double> sigma,
                                 std::uint64_t seed = 0);

struct NetworkEffects {
  double loss_prob = 0.0;
  std::int64_t latency_ms = 0;
  std::int64_t jitter_ms = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Draws for one reading, a pure function of (seed, reading identity). The
// identity is (stream, channel, timestamp, occurrence) where occurrence counts
// earlier readings with the same triple in the input.
struct NetworkDraw {
  double loss_uniform = 0.0;
  std::int64_t jitter_ms = 0;
};
NetworkDraw network_draw(const NetworkEffects& fx, const SensorReading& r,
                         std::uint64_t occurrence);

std::vector<SensorReading> apply_network_effects(std::span<const SensorReading> readings,
                                                 const NetworkEffects& fx);

void write_event_log(std::ostream& out, std::span<const EventLogEntry> log);

}  // namespace ctxad::sim

#endif  // CTXAD_SIMGEN_HPP_
