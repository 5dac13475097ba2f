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

#ifndef CTXAD_TELEMETRY_HPP_
#define CTXAD_TELEMETRY_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ctxad {

using Label = std::uint8_t;
using LabelMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct SensorReading {
  std::int64_t timestamp_ms = 0;
  std::string stream_id;
  std::string channel_id;
  double value = 0.0;
  std::optional<Label> truth_label;

  bool operator==(const SensorReading&) const = default;
};

struct StreamSchema {
  std::string stream_id;
  // Order defines the sensor index i for the whole run.
  std::vector<std::string> channels;
  std::int64_t sample_period_ms = 5000;

  // Throws SchemaError when the channel list is empty or has duplicates, or
  // the period is not positive.
  void validate() const;
  // -1 when unknown.
  int channel_index(const std::string& channel) const;
  std::size_t size() const { return channels.size(); }
};

// A maximal run of grid slots in which every channel has a value.
struct AlignedSegment {
  std::int64_t start_index = 0;  // grid slot of column 0
  Eigen::MatrixXd values;        // N x M, row = channel
  LabelMatrix imputed;           // 1 where the cell was forward-filled
  std::vector<Label> labels;     // per slot; OR over non-imputed readings

  Eigen::Index length() const { return values.cols(); }
};

struct AlignedSeries {
  std::string stream_id;
  std::int64_t origin_ms = 0;  // timestamp of grid slot 0
  std::int64_t sample_period_ms = 0;
  std::vector<AlignedSegment> segments;

  std::int64_t slot_timestamp(std::int64_t slot) const {
    return origin_ms + slot * sample_period_ms;
  }
};

// Snaps readings onto the schema's sample grid (slot 0 = earliest timestamp,
// nearest-slot rounding). Duplicates in a slot collapse to their mean with an
// OR-ed label. Runs of at most `gap_limit` missing slots are forward-filled
// and flagged; longer runs split the stream into segments.
AlignedSeries align_readings(std::span<const SensorReading> readings,
                             const StreamSchema& schema, int gap_limit = 3);

struct WindowFrame {
  std::string stream_id;
  std::int64_t start_index = 0;
  std::int64_t start_ms = 0;
  Eigen::MatrixXd values;  // N x L
  Label truth_label = 0;

  Eigen::Index channels() const { return values.rows(); }
  Eigen::Index length() const { return values.cols(); }
};

// floor((M - L) / s) + 1 windows when M >= L, none otherwise. Window j covers
// columns [j*s, j*s + L); labels aggregate with the any-sample rule.
std::vector<WindowFrame> make_windows(const Eigen::MatrixXd& series,
                                      std::span<const Label> labels,
                                      Eigen::Index length, Eigen::Index stride,
                                      const std::string& stream_id = {},
                                      std::int64_t start_index = 0);

// Row-per-channel variant; throws AlignmentError on ragged input.
std::vector<WindowFrame> make_windows(std::span<const std::vector<double>> channels,
                                      std::span<const Label> labels,
                                      Eigen::Index length, Eigen::Index stride);

// Windows over every segment of an aligned stream, in increasing start_index.
std::vector<WindowFrame> make_windows(const AlignedSeries& series,
                                      Eigen::Index length, Eigen::Index stride);

// Readings grouped per stream, preserving file order inside each group.
std::map<std::string, std::vector<SensorReading>> group_by_stream(
    std::span<const SensorReading> readings);

// One schema per stream with channels in order of first appearance.
std::vector<StreamSchema> infer_schemas(std::span<const SensorReading> readings,
                                        std::int64_t sample_period_ms);

// Newline-delimited telemetry records:
//   {"ts":<int>,"stream":"<id>","channel":"<id>","value":<number>[,"label":0|1]}
// Malformed lines are collected with their line numbers and reported together
// as a DataError; nothing is returned in that case.
std::vector<SensorReading> read_telemetry(std::istream& in);
std::vector<SensorReading> read_telemetry_file(const std::string& path);
void write_telemetry(std::ostream& out, std::span<const SensorReading> readings);

// Shortest round-trip decimal text for a double.
std::string format_double(double value);

}  // namespace ctxad

#endif  // CTXAD_TELEMETRY_HPP_
