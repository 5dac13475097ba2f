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

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ctxad/artifact.hpp"
#include "ctxad/errors.hpp"
#include "ctxad/harness.hpp"
#include "ctxad/telemetry.hpp"

namespace ctxad::harness {

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

int report_error(const std::exception& e) {
  ExitCode code = ExitCode::kInternal;
  const char* what = "error";
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
      dynamic_cast<const RangeError*>(&e)) {
    code = ExitCode::kConfig;
    what = "config error";
  } else if (dynamic_cast<const CalibrationError*>(&e)) {
    code = ExitCode::kCalibration;
    what = "calibration error";
  } else if (dynamic_cast<const SchemaError*>(&e) || dynamic_cast<const DataError*>(&e) ||
             dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const AlignmentError*>(&e)) {
    code = ExitCode::kSchema;
    what = "schema error";
  } else if (dynamic_cast<const JoinError*>(&e)) {
    code = ExitCode::kJoin;
    what = "join error";
  }
  std::cerr << "ctxad: " << what << ": " << e.what() << '\n';
  return static_cast<int>(code);
}

namespace {

class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config)
      : command_(std::move(command)), config_(config), t0_(Clock::now()), mark_(t0_) {}

  void input(const std::string& path) { inputs_.push_back(path); }
  void output(const std::string& path) { outputs_.push_back(path); }
  void phase(const std::string& name) {
    const auto now = Clock::now();
    timings_[name] = std::chrono::duration<double, std::milli>(now - mark_).count();
    mark_ = now;
  }

  void write() {
    OJson j;
    j["command"] = command_;
    j["version"] = kVersion;
    j["seed"] = config_.seed;
    j["config"] = config_.snapshot();
    auto digests = [](const std::vector<std::string>& paths) {
      OJson d = OJson::object();
      for (const auto& p : paths) d[fs::path(p).filename().string()] = sha256_file(p);
      return d;
    };
    j["inputs"] = digests(inputs_);
    j["outputs"] = digests(outputs_);
    j["timings_ms"] = timings_;
    j["timings_ms"]["total"] =
        std::chrono::duration<double, std::milli>(Clock::now() - t0_).count();
    const auto path = (fs::path(config_.out_dir) / ("manifest-" + command_ + ".json")).string();
    std::ofstream out(path);
    out << j.dump(2) << '\n';
  }

 private:
  using Clock = std::chrono::steady_clock;
  std::string command_;
  const RunConfig& config_;
  Clock::time_point t0_, mark_;
  std::vector<std::string> inputs_, outputs_;
  OJson timings_ = OJson::object();
};

std::string out_path(const RunConfig& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return in;
}

// Doubles in JSON lines and CSVs use the shortest round-trip form.
std::string num(double v) {
  if (std::isnan(v)) return "null";
  return format_double(v);
}

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

void write_decisions(std::ostream& out, const std::vector<DecisionRecord>& list) {
  for (const auto& d : list) {
    out << "{\"stream\":" << quoted(d.stream) << ",\"start\":" << d.start
        << ",\"detector\":" << quoted(d.detector) << ",\"score\":" << num(d.score)
        << ",\"theta\":" << num(d.theta) << ",\"decision\":" << d.decision << "}\n";
  }
}

void write_truth(std::ostream& out, const std::vector<TruthRecord>& list) {
  for (const auto& t : list) {
    out << "{\"stream\":" << quoted(t.stream) << ",\"start\":" << t.start
        << ",\"label\":" << t.label << "}\n";
  }
}

OJson interp_json(const InterpretabilityMetrics& m) {
  return {{"attention_entropy_norm", m.attention_entropy_norm},
          {"attribution_concentration", m.attribution_concentration},
          {"windows", m.windows},
          {"attributions", m.attributions}};
}

template <typename F>
void read_lines(const std::string& path, F&& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t n = 0;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(line);
    } catch (const std::exception& e) {
      if (problems.size() < 20) {
        problems.push_back(path + ":" + std::to_string(n) + ": " + e.what());
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "malformed records:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw DataError(msg);
  }
}

}  // namespace

std::vector<DecisionRecord> read_decisions(const std::string& path) {
  std::vector<DecisionRecord> out;
  read_lines(path, [&](const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    DecisionRecord d;
    d.stream = j.at("stream").get<std::string>();
    d.start = j.at("start").get<std::int64_t>();
    d.detector = j.at("detector").get<std::string>();
    d.score = j.at("score").is_null() ? std::nan("") : j.at("score").get<double>();
    d.theta = j.at("theta").is_null() ? std::nan("") : j.at("theta").get<double>();
    d.decision = j.at("decision").get<int>();
    if (d.decision != 0 && d.decision != 1) throw DataError("decision must be 0 or 1");
    out.push_back(std::move(d));
  });
  return out;
}

std::vector<TruthRecord> read_truth(const std::string& path) {
  std::vector<TruthRecord> out;
  read_lines(path, [&](const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    TruthRecord t;
    t.stream = j.at("stream").get<std::string>();
    t.start = j.at("start").get<std::int64_t>();
    t.label = j.at("label").get<int>();
    if (t.label != 0 && t.label != 1) throw DataError("label must be 0 or 1");
    out.push_back(std::move(t));
  });
  return out;
}

std::vector<LatencyRecord> read_latency(const std::string& path) {
  std::vector<LatencyRecord> out;
  bool header = true;
  read_lines(path, [&](const std::string& line) {
    if (header) {
      header = false;
      if (line.rfind("stream,", 0) == 0) return;
    }
    std::stringstream ss(line);
    LatencyRecord r;
    std::string start, ns;
    if (!std::getline(ss, r.stream, ',') || !std::getline(ss, start, ',') ||
        !std::getline(ss, r.detector, ',') || !std::getline(ss, ns)) {
      throw DataError("expected stream,start,detector,latency_ns");
    }
    r.start = std::stoll(start);
    r.latency_ns = std::stoll(ns);
    out.push_back(std::move(r));
  });
  return out;
}

int cmd_simulate(const RunConfig& config) {
  Manifest m("simulate", config);
  const auto sim = simulate(config);
  m.phase("simulate");
  const auto tel = out_path(config, "telemetry.jsonl");
  {
    auto out = open_out(tel);
    write_telemetry(out, sim.telemetry);
  }
  m.output(tel);
  const auto ev = out_path(config, "events.jsonl");
  {
    auto out = open_out(ev);
    sim::write_event_log(out, sim.events);
  }
  m.output(ev);
  if (config.calibration_duration_s) {
    const auto cal = out_path(config, "calibration.jsonl");
    auto out = open_out(cal);
    write_telemetry(out, sim.calibration);
    out.close();
    m.output(cal);
  }
  m.phase("write");
  m.write();
  return 0;
}

int cmd_calibrate(const RunConfig& config, const std::string& telemetry_path) {
  Manifest m("calibrate", config);
  m.input(telemetry_path);
  const auto readings = read_telemetry_file(telemetry_path);
  m.phase("read");
  const auto channels = channel_order(readings);
  const auto windows = window_readings(readings, channels, config.pipeline);
  const Model model = calibrate(config.pipeline, channels, windows);
  m.phase("calibrate");
  const auto path = out_path(config, "model.json");
  save_model(model, path);
  m.output(path);
  m.phase("write");
  m.write();
  return 0;
}

int cmd_detect(const RunConfig& config, const std::string& model_path,
               const std::string& telemetry_path) {
  Manifest m("detect", config);
  m.input(model_path);
  m.input(telemetry_path);
  const Model model = load_model(model_path);
  const auto readings = read_telemetry_file(telemetry_path);
  m.phase("read");
  Detection det;
  if (!readings.empty()) {
    const auto windows = window_readings(readings, model.channels, model.config);
    det = detect(model, windows, config.scorers);
  }
  m.phase("detect");

  const auto dec = out_path(config, "decisions.jsonl");
  {
    auto out = open_out(dec);
    write_decisions(out, det.decisions);
  }
  m.output(dec);
  const auto tr = out_path(config, "truth.jsonl");
  {
    auto out = open_out(tr);
    write_truth(out, det.truth);
  }
  m.output(tr);
  const auto ex = out_path(config, "explanations.jsonl");
  {
    auto out = open_out(ex);
    for (const auto& e : det.explanations) out << to_json_line(e) << '\n';
  }
  m.output(ex);
  const auto lat = out_path(config, "latency.csv");
  {
    auto out = open_out(lat);
    out << "stream,start,detector,latency_ns\n";
    for (const auto& l : det.latency) {
      out << l.stream << ',' << l.start << ',' << l.detector << ',' << l.latency_ns << '\n';
    }
  }
  m.output(lat);
  const auto ip = out_path(config, "interpretability.json");
  {
    OJson j = OJson::object();
    for (const auto& [k, v] : det.interpretability) j[k] = interp_json(v);
    auto out = open_out(ip);
    out << j.dump(2) << '\n';
  }
  m.output(ip);
  m.phase("write");
  m.write();
  return 0;
}

int cmd_evaluate(const RunConfig& config, const std::string& decisions_path,
                 const std::string& truth_path, const std::string& latency_path,
                 const std::string& interpretability_path) {
  Manifest m("evaluate", config);
  m.input(decisions_path);
  m.input(truth_path);
  const auto decisions = read_decisions(decisions_path);
  const auto truth = read_truth(truth_path);
  std::vector<LatencyRecord> latency;
  if (!latency_path.empty()) {
    m.input(latency_path);
    latency = read_latency(latency_path);
  }
  std::map<std::string, InterpretabilityMetrics> interp;
  if (!interpretability_path.empty()) {
    m.input(interpretability_path);
    auto in = open_in(interpretability_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      for (const auto& [k, v] : j.items()) {
        InterpretabilityMetrics im;
        im.attention_entropy_norm = v.at("attention_entropy_norm").get<double>();
        im.attribution_concentration = v.at("attribution_concentration").get<double>();
        im.windows = v.at("windows").get<std::size_t>();
        im.attributions = v.at("attributions").get<std::size_t>();
        interp[k] = im;
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(interpretability_path + ": " + e.what());
    }
  }
  m.phase("read");
  const auto reports = evaluate(decisions, truth, latency, interp);
  m.phase("evaluate");

  OJson doc;
  doc["windows"] = truth.size();
  auto& dets = doc["detectors"] = OJson::object();
  for (const auto& r : reports) {
    OJson d;
    d["tp"] = r.counts.tp;
    d["fp"] = r.counts.fp;
    d["tn"] = r.counts.tn;
    d["fn"] = r.counts.fn;
    d["accuracy"] = r.acc.accuracy;
    d["fpr"] = r.acc.fpr;
    d["precision"] = r.prf.precision;
    d["recall"] = r.prf.recall;
    d["f1"] = r.prf.f1;
    if (r.roc) {
      d["auc"] = r.roc->auc;
    } else {
      d["auc"] = "undefined";
      std::cerr << "ctxad: warning: AUC undefined for " << r.detector
                << " (truth holds a single class)\n";
    }
    if (r.latency) {
      d["latency_ns"] = {{"p50", r.latency->p50},
                         {"p95", r.latency->p95},
                         {"p99", r.latency->p99},
                         {"mean", r.latency->mean},
                         {"count", r.latency->count}};
    }
    if (r.interpretability) d["interpretability"] = interp_json(*r.interpretability);
    dets[r.detector] = d;

    const auto roc = out_path(config, "roc_" + r.detector + ".csv");
    {
      auto out = open_out(roc);
      out << "fpr,tpr\n";
      if (r.roc) {
        for (const auto& p : r.roc->points) out << num(p.fpr) << ',' << num(p.tpr) << '\n';
      }
    }
    m.output(roc);
    const auto tl = out_path(config, "timeline_" + r.detector + ".csv");
    {
      auto out = open_out(tl);
      out << "stream,start,score,decision,truth\n";
      for (const auto& [d, y] : r.timeline) {
        out << d.stream << ',' << d.start << ',' << num(d.score) << ',' << d.decision << ','
            << y << '\n';
      }
    }
    m.output(tl);
  }
  const auto mp = out_path(config, "metrics.json");
  {
    auto out = open_out(mp);
    out << doc.dump(2) << '\n';
  }
  m.output(mp);
  m.phase("write");
  m.write();
  return 0;
}

int cmd_bench(const RunConfig& config) {
  Manifest m("bench", config);
  const auto r = bench(config);
  m.phase("bench");
  OJson j;
  j["streams"] = r.streams;
  j["windows_per_stream"] = r.windows_per_stream;
  j["windows_processed"] = r.windows_processed;
  j["latency_samples"] = r.latency_samples;
  j["windows_per_second"] = r.windows_per_second;
  j["model_bytes"] = r.model_bytes;
  j["stream_state_bytes"] = r.stream_state_bytes;
  j["per_stream_state_bytes"] = r.per_stream_state_bytes;
  j["state_bytes"] = r.state_bytes;
  j["peak_rss_kb"] = r.peak_rss_kb;
  auto& tiers = j["tiers"] = OJson::array();
  for (const auto& t : r.tiers) {
    tiers.push_back({{"name", t.name},
                     {"streams", t.streams},
                     {"windows", t.windows},
                     {"windows_per_second", t.windows_per_second},
                     {"state_bytes", t.state_bytes},
                     {"latency_ns",
                      {{"p50", t.latency.p50},
                       {"p95", t.latency.p95},
                       {"p99", t.latency.p99},
                       {"mean", t.latency.mean},
                       {"count", t.latency.count}}}});
  }
  const auto path = out_path(config, "bench.json");
  {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
  }
  m.output(path);
  m.write();
  return 0;
}

int cmd_explain_dump(const RunConfig& config, const std::string& model_path,
                     const std::string& telemetry_path, const std::string& stream,
                     std::optional<std::int64_t> start) {
  Manifest m("explain-dump", config);
  m.input(model_path);
  m.input(telemetry_path);
  const Model model = load_model(model_path);
  const auto readings = read_telemetry_file(telemetry_path);
  const auto windows = window_readings(readings, model.channels, model.config);
  const auto it = windows.find(stream);
  if (it == windows.end()) throw ConfigError("stream: '" + stream + "' has no windows");

  OJson doc;
  doc["stream"] = stream;
  doc["channels"] = model.channels;
  auto& list = doc["windows"] = OJson::array();
  StreamState state(model);
  const auto& baseline = model.baseline_for(stream);
  bool found = !start.has_value();
  for (const auto& w : it->second) {
    const auto s = score_window(model, state, w);
    if (start && w.start_index != *start) continue;
    found = true;
    for (const Scorer scorer : config.scorers) {
      if (scorer == Scorer::kResidual && !model.residual) continue;
      const auto a = attribute(model, baseline, s.frozen, scorer, w);
      const auto fd = finite_diff_attribution(model, baseline, s.frozen, scorer, w);
      OJson e;
      e["start"] = w.start_index;
      e["timestamp"] = w.start_ms;
      e["detector"] = detector_id(scorer);
      e["score"] = score_of(s, scorer);
      e["theta"] = threshold_of(model, stream, scorer);
      e["attention"] = std::vector<double>(s.step.attention.data(),
                                           s.step.attention.data() + s.step.attention.size());
      auto rows = [](const Eigen::MatrixXd& g) {
        OJson r = OJson::array();
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          r.push_back(std::vector<double>(g.row(i).begin(), g.row(i).end()));
        }
        return r;
      };
      e["attribution"] = rows(a.gradient);
      e["finite_difference"] = rows(fd.gradient);
      e["max_abs_error"] = (a.gradient - fd.gradient).cwiseAbs().maxCoeff();
      e["singular_at_mean"] = a.singular;
      list.push_back(std::move(e));
    }
  }
  if (!found) throw ConfigError("start: no window of '" + stream + "' starts at " +
                                std::to_string(*start));
  m.phase("explain");
  const auto path = out_path(config, "explain_dump.json");
  {
    auto out = open_out(path);
    out << doc.dump(1) << '\n';
  }
  m.output(path);
  m.write();
  return 0;
}

}  // namespace ctxad::harness
