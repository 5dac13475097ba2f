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

#include "ctxad/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ctxad/errors.hpp"
#include "json.hpp"

namespace ctxad {

void StreamSchema::validate() const {
  if (channels.empty()) {
    throw SchemaError("stream '" + stream_id + "': channel list is empty");
  }
  std::set<std::string> seen;
  for (const auto& c : channels) {
    if (!seen.insert(c).second) {
      throw SchemaError("stream '" + stream_id + "': duplicate channel '" + c + "'");
    }
  }
  if (sample_period_ms <= 0) {
    throw SchemaError("stream '" + stream_id + "': sample_period_ms must be > 0");
  }
}

int StreamSchema::channel_index(const std::string& channel) const {
  const auto it = std::find(channels.begin(), channels.end(), channel);
  return it == channels.end() ? -1 : static_cast<int>(it - channels.begin());
}

namespace {

std::string describe(const SensorReading& r) {
  std::ostringstream os;
  os << "reading(ts=" << r.timestamp_ms << ", stream=" << r.stream_id
     << ", channel=" << r.channel_id << ")";
  return os.str();
}

}  // namespace

AlignedSeries align_readings(std::span<const SensorReading> readings,
                             const StreamSchema& schema, int gap_limit) {
  schema.validate();
  if (gap_limit < 0) throw ParameterError("gap_limit must be >= 0");

  AlignedSeries out;
  out.stream_id = schema.stream_id;
  out.sample_period_ms = schema.sample_period_ms;
  if (readings.empty()) return out;

  const auto n = static_cast<Eigen::Index>(schema.size());
  std::int64_t origin = readings.front().timestamp_ms;
  for (const auto& r : readings) {
    if (r.stream_id != schema.stream_id) {
      throw SchemaError(describe(r) + " does not belong to stream '" +
                        schema.stream_id + "'");
    }
    if (schema.channel_index(r.channel_id) < 0) {
      throw SchemaError(describe(r) + ": unknown channel '" + r.channel_id + "'");
    }
    if (!std::isfinite(r.value)) throw DataError(describe(r) + ": non-finite value");
    if (r.timestamp_ms < 0) throw DataError(describe(r) + ": negative timestamp");
    origin = std::min(origin, r.timestamp_ms);
  }
  out.origin_ms = origin;

  const std::int64_t period = schema.sample_period_ms;
  auto slot_of = [&](std::int64_t ts) { return (ts - origin + period / 2) / period; };
  std::int64_t slots = 0;
  for (const auto& r : readings) slots = std::max(slots, slot_of(r.timestamp_ms) + 1);

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, slots);
  Eigen::MatrixXi count = Eigen::MatrixXi::Zero(n, slots);
  std::vector<Label> slot_label(static_cast<std::size_t>(slots), 0);
  for (const auto& r : readings) {
    const auto i = schema.channel_index(r.channel_id);
    const auto t = slot_of(r.timestamp_ms);
    sum(i, t) += r.value;
    count(i, t) += 1;
    if (r.truth_label.value_or(0) != 0) slot_label[static_cast<std::size_t>(t)] = 1;
  }

  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, slots);
  LabelMatrix imputed = LabelMatrix::Zero(n, slots);
  // valid(i, t): channel i has an observed or forward-filled value at slot t.
  LabelMatrix valid = LabelMatrix::Zero(n, slots);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::int64_t t = 0;
    bool have_previous = false;
    while (t < slots) {
      if (count(i, t) > 0) {
        values(i, t) = sum(i, t) / count(i, t);
        valid(i, t) = 1;
        have_previous = true;
        ++t;
        continue;
      }
      std::int64_t gap_end = t;
      while (gap_end < slots && count(i, gap_end) == 0) ++gap_end;
      if (have_previous && gap_end - t <= gap_limit) {
        for (auto u = t; u < gap_end; ++u) {
          values(i, u) = values(i, t - 1);
          imputed(i, u) = 1;
          valid(i, u) = 1;
        }
      }
      t = gap_end;
    }
  }

  std::int64_t t = 0;
  while (t < slots) {
    if (valid.col(t).minCoeff() == 0) {
      ++t;
      continue;
    }
    std::int64_t end = t;
    while (end < slots && valid.col(end).minCoeff() != 0) ++end;
    AlignedSegment seg;
    seg.start_index = t;
    seg.values = values.middleCols(t, end - t);
    seg.imputed = imputed.middleCols(t, end - t);
    seg.labels.assign(slot_label.begin() + t, slot_label.begin() + end);
    out.segments.push_back(std::move(seg));
    t = end;
  }
  return out;
}

std::vector<WindowFrame> make_windows(const Eigen::MatrixXd& series,
                                      std::span<const Label> labels,
                                      Eigen::Index length, Eigen::Index stride,
                                      const std::string& stream_id,
                                      std::int64_t start_index) {
  if (length < 1) throw ParameterError("window length must be >= 1");
  if (stride < 1) throw ParameterError("window stride must be >= 1");
  const Eigen::Index m = series.cols();
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != m) {
    throw AlignmentError("label count does not match series length");
  }
  std::vector<WindowFrame> out;
  if (m < length) return out;
  const Eigen::Index count = (m - length) / stride + 1;
  out.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index j = 0; j < count; ++j) {
    const Eigen::Index c = j * stride;
    WindowFrame w;
    w.stream_id = stream_id;
    w.start_index = start_index + c;
    w.values = series.middleCols(c, length);
    if (!labels.empty()) {
      w.truth_label = std::any_of(labels.begin() + c, labels.begin() + c + length,
                                  [](Label l) { return l != 0; })
                          ? 1
                          : 0;
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<WindowFrame> make_windows(std::span<const std::vector<double>> channels,
                                      std::span<const Label> labels,
                                      Eigen::Index length, Eigen::Index stride) {
  if (channels.empty()) return {};
  const auto m = channels.front().size();
  for (const auto& row : channels) {
    if (row.size() != m) throw AlignmentError("channels have mismatched lengths");
  }
  Eigen::MatrixXd series(static_cast<Eigen::Index>(channels.size()),
                         static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < channels.size(); ++i) {
    series.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(channels[i].data(),
                                             static_cast<Eigen::Index>(m));
  }
  return make_windows(series, labels, length, stride);
}

std::vector<WindowFrame> make_windows(const AlignedSeries& series,
                                      Eigen::Index length, Eigen::Index stride) {
  std::vector<WindowFrame> out;
  for (const auto& seg : series.segments) {
    auto part = make_windows(seg.values, seg.labels, length, stride,
                             series.stream_id, seg.start_index);
    for (auto& w : part) {
      w.start_ms = series.slot_timestamp(w.start_index);
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::map<std::string, std::vector<SensorReading>> group_by_stream(
    std::span<const SensorReading> readings) {
  std::map<std::string, std::vector<SensorReading>> out;
  for (const auto& r : readings) out[r.stream_id].push_back(r);
  return out;
}

std::vector<StreamSchema> infer_schemas(std::span<const SensorReading> readings,
                                        std::int64_t sample_period_ms) {
  std::map<std::string, StreamSchema> by_stream;
  for (const auto& r : readings) {
    auto& schema = by_stream[r.stream_id];
    schema.stream_id = r.stream_id;
    schema.sample_period_ms = sample_period_ms;
    if (schema.channel_index(r.channel_id) < 0) schema.channels.push_back(r.channel_id);
  }
  std::vector<StreamSchema> out;
  for (auto& [id, schema] : by_stream) out.push_back(std::move(schema));
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

constexpr std::size_t kMaxDiagnostics = 20;

SensorReading parse_line(const std::string& line) {
  const auto doc = nlohmann::json::parse(line);
  if (!doc.is_object()) throw DataError("record is not an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "ts" && key != "stream" && key != "channel" && key != "value" &&
        key != "label") {
      throw DataError("unexpected field '" + key + "'");
    }
  }
  SensorReading r;
  const auto need = [&](const char* key) -> const nlohmann::json& {
    const auto it = doc.find(key);
    if (it == doc.end()) throw DataError(std::string("missing field '") + key + "'");
    return *it;
  };
  const auto& ts = need("ts");
  if (!ts.is_number_integer()) throw DataError("'ts' must be an integer");
  r.timestamp_ms = ts.get<std::int64_t>();
  if (r.timestamp_ms < 0) throw DataError("'ts' must be >= 0");
  const auto& stream = need("stream");
  if (!stream.is_string() || stream.get<std::string>().empty()) {
    throw DataError("'stream' must be a non-empty string");
  }
  r.stream_id = stream.get<std::string>();
  const auto& channel = need("channel");
  if (!channel.is_string() || channel.get<std::string>().empty()) {
    throw DataError("'channel' must be a non-empty string");
  }
  r.channel_id = channel.get<std::string>();
  const auto& value = need("value");
  if (!value.is_number()) throw DataError("'value' must be a number");
  r.value = value.get<double>();
  if (!std::isfinite(r.value)) throw DataError("'value' is not finite");
  if (const auto it = doc.find("label"); it != doc.end()) {
    if (!it->is_number_integer()) throw DataError("'label' must be 0 or 1");
    const auto l = it->get<std::int64_t>();
    if (l != 0 && l != 1) throw DataError("'label' must be 0 or 1");
    r.truth_label = static_cast<Label>(l);
  }
  return r;
}

}  // namespace

std::vector<SensorReading> read_telemetry(std::istream& in) {
  std::vector<SensorReading> out;
  std::vector<std::string> diagnostics;
  std::size_t failures = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(parse_line(line));
    } catch (const std::exception& e) {
      ++failures;
      if (diagnostics.size() < kMaxDiagnostics) {
        diagnostics.push_back("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  if (failures > 0) {
    std::string msg = std::to_string(failures) + " malformed telemetry line(s)";
    for (const auto& d : diagnostics) msg += "\n  " + d;
    if (failures > diagnostics.size()) msg += "\n  ...";
    throw DataError(msg);
  }
  return out;
}

std::vector<SensorReading> read_telemetry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open telemetry file '" + path + "'");
  return read_telemetry(in);
}

void write_telemetry(std::ostream& out, std::span<const SensorReading> readings) {
  std::string line;
  for (const auto& r : readings) {
    line.clear();
    line += "{\"ts\":";
    line += std::to_string(r.timestamp_ms);
    line += ",\"stream\":";
    line += nlohmann::json(r.stream_id).dump();
    line += ",\"channel\":";
    line += nlohmann::json(r.channel_id).dump();
    line += ",\"value\":";
    line += format_double(r.value);
    if (r.truth_label) {
      line += ",\"label\":";
      line += *r.truth_label ? '1' : '0';
    }
    line += "}\n";
    out << line;
  }
}

}  // namespace ctxad
