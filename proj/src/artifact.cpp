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

#include "ctxad/artifact.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "ctxad/errors.hpp"
#include "json.hpp"

namespace ctxad {

namespace {

using Json = nlohmann::ordered_json;

template <typename Derived>
Json matrix_json(const Eigen::MatrixBase<Derived>& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from(const Json& j, const char* what) {
  try {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
      throw SchemaError(std::string("model artifact: bad shape for ") + what);
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model artifact: malformed ") + what + ": " + e.what());
  }
}

Eigen::VectorXd vector_from(const Json& j, const char* what) {
  const Eigen::MatrixXd m = matrix_from(j, what);
  if (m.cols() != 1) throw SchemaError(std::string("model artifact: ") + what + " is not a vector");
  return m.col(0);
}

// NaN thresholds are stored as null.
Json maybe_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double number_or_nan(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Json baseline_json(const BaselineModel<double>& b) {
  Json j;
  j["mu"] = matrix_json(b.mu);
  j["sigma"] = matrix_json(b.sigma);
  j["sigma_inv"] = matrix_json(b.sigma_inv);
  j["epsilon"] = b.epsilon;
  j["theta"] = maybe_number(b.theta);
  j["calibration_count"] = b.calibration_count;
  return j;
}

BaselineModel<double> baseline_from(const Json& j) {
  BaselineModel<double> b;
  b.mu = vector_from(j.at("mu"), "baseline.mu");
  b.sigma = matrix_from(j.at("sigma"), "baseline.sigma");
  b.sigma_inv = matrix_from(j.at("sigma_inv"), "baseline.sigma_inv");
  b.epsilon = j.at("epsilon").get<double>();
  b.theta = number_or_nan(j.at("theta"));
  b.calibration_count = j.at("calibration_count").get<std::int64_t>();
  return b;
}

}  // namespace

std::string serialize_model(const Model& m) {
  Json j;
  j["format"] = kModelFormat;
  j["seed"] = m.config.seed;
  const auto& c = m.config;
  j["config"] = {{"window", c.window_length},
                 {"stride", c.stride},
                 {"denoise_width", c.denoise_width},
                 {"gap_limit", c.gap_limit},
                 {"d", c.embed_dim},
                 {"k", c.context_length},
                 {"seed", c.seed},
                 {"quantile", c.quantile},
                 {"epsilon_scale", c.epsilon_scale},
                 {"per_stream_baseline", c.per_stream_baseline},
                 {"top_k", c.top_k},
                 {"sample_period_ms", c.sample_period_ms},
                 {"rules",
                  {{"bound_sigmas", c.rules.bound_sigmas},
                   {"step_sigmas", c.rules.step_sigmas},
                   {"min_band_rel", c.rules.min_band_rel},
                   {"min_band_abs", c.rules.min_band_abs}}}};
  j["channels"] = m.channels;
  j["calibration_windows"] = m.calibration_windows;
  j["normalizer"] = {{"min", matrix_json(m.normalizer.min)},
                     {"max", matrix_json(m.normalizer.max)},
                     {"fitted_on", m.normalizer.fitted_on}};
  const auto& e = m.encoder;
  j["encoder"] = {{"d", e.dim()},
                  {"L", e.window_length},
                  {"k", e.context_length},
                  {"seed", e.seed},
                  {"embed_weight", matrix_json(e.embed_weight)},
                  {"embed_bias", matrix_json(e.embed_bias)},
                  {"state_weight", matrix_json(e.state_weight)},
                  {"context_weight", matrix_json(e.context_weight)},
                  {"score_vector", matrix_json(e.score_vector)}};
  j["baseline"] = baseline_json(m.global_baseline);
  Json streams = Json::object();
  for (const auto& [id, b] : m.stream_baselines) streams[id] = baseline_json(b);
  j["stream_baselines"] = std::move(streams);
  Json rules = Json::array();
  for (const auto& r : m.rules.rules) {
    rules.push_back({{"channel", r.channel},
                     {"mean", r.mean},
                     {"half_width", r.half_width},
                     {"lower", r.lower},
                     {"upper", r.upper},
                     {"max_step", r.max_step}});
  }
  j["rules"] = std::move(rules);
  if (m.residual) {
    j["residual"] = {{"weights", matrix_json(m.residual->weights)},
                     {"theta", maybe_number(m.residual_theta)}};
  } else {
    j["residual"] = nullptr;
  }
  return j.dump(1) + "\n";
}

Model deserialize_model(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model artifact: not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw SchemaError("model artifact: unsupported format '" +
                        j.at("format").get<std::string>() + "'");
    }
    Model m;
    const auto& c = j.at("config");
    m.config.window_length = c.at("window").get<Eigen::Index>();
    m.config.stride = c.at("stride").get<Eigen::Index>();
    m.config.denoise_width = c.at("denoise_width").get<int>();
    m.config.gap_limit = c.at("gap_limit").get<int>();
    m.config.embed_dim = c.at("d").get<Eigen::Index>();
    m.config.context_length = c.at("k").get<Eigen::Index>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.quantile = c.at("quantile").get<double>();
    m.config.epsilon_scale = c.at("epsilon_scale").get<double>();
    m.config.per_stream_baseline = c.at("per_stream_baseline").get<bool>();
    m.config.top_k = c.at("top_k").get<int>();
    m.config.sample_period_ms = c.at("sample_period_ms").get<std::int64_t>();
    const auto& rc = c.at("rules");
    m.config.rules.bound_sigmas = rc.at("bound_sigmas").get<double>();
    m.config.rules.step_sigmas = rc.at("step_sigmas").get<double>();
    m.config.rules.min_band_rel = rc.at("min_band_rel").get<double>();
    m.config.rules.min_band_abs = rc.at("min_band_abs").get<double>();

    m.channels = j.at("channels").get<std::vector<std::string>>();
    m.calibration_windows = j.at("calibration_windows").get<std::int64_t>();
    const auto& nz = j.at("normalizer");
    m.normalizer.min = vector_from(nz.at("min"), "normalizer.min");
    m.normalizer.max = vector_from(nz.at("max"), "normalizer.max");
    m.normalizer.fitted_on = nz.at("fitted_on").get<std::vector<std::int64_t>>();

    const auto& e = j.at("encoder");
    m.encoder.window_length = e.at("L").get<Eigen::Index>();
    m.encoder.context_length = e.at("k").get<Eigen::Index>();
    m.encoder.seed = e.at("seed").get<std::uint64_t>();
    m.encoder.embed_weight = matrix_from(e.at("embed_weight"), "encoder.embed_weight");
    m.encoder.embed_bias = vector_from(e.at("embed_bias"), "encoder.embed_bias");
    m.encoder.state_weight = matrix_from(e.at("state_weight"), "encoder.state_weight");
    m.encoder.context_weight = matrix_from(e.at("context_weight"), "encoder.context_weight");
    m.encoder.score_vector = vector_from(e.at("score_vector"), "encoder.score_vector");

    m.global_baseline = baseline_from(j.at("baseline"));
    for (const auto& [id, b] : j.at("stream_baselines").items()) {
      m.stream_baselines.emplace(id, baseline_from(b));
    }
    m.rules.options = m.config.rules;
    for (const auto& r : j.at("rules")) {
      m.rules.rules.push_back({r.at("channel").get<std::string>(), r.at("mean").get<double>(),
                               r.at("half_width").get<double>(), r.at("lower").get<double>(),
                               r.at("upper").get<double>(), r.at("max_step").get<double>()});
    }
    if (const auto& res = j.at("residual"); !res.is_null()) {
      ResidualHead<double> head;
      head.weights = matrix_from(res.at("weights"), "residual.weights");
      head.fitted = true;
      m.residual = std::move(head);
      m.residual_theta = number_or_nan(res.at("theta"));
    }

    const auto n = static_cast<Eigen::Index>(m.channels.size());
    const Eigen::Index d = m.encoder.embed_weight.rows();
    if (n < 1 || m.normalizer.min.size() != n || m.normalizer.max.size() != n ||
        static_cast<Eigen::Index>(m.rules.rules.size()) != n ||
        m.encoder.embed_weight.cols() != m.config.window_length || d != m.config.embed_dim ||
        m.global_baseline.mu.size() != d || !m.encoder.all_finite()) {
      throw SchemaError("model artifact: inconsistent dimensions");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model artifact: ") + e.what());
  }
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write model artifact '" + path + "'");
  out << serialize_model(model);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model artifact '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

namespace {

template <typename A, typename B>
bool same_bits(const A& a, const B& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      const double x = a(r, c), y = b(r, c);
      if (std::memcmp(&x, &y, sizeof(double)) != 0) return false;
    }
  }
  return true;
}

bool same_bits(double x, double y) { return std::memcmp(&x, &y, sizeof(double)) == 0; }

bool same_baseline(const BaselineModel<double>& a, const BaselineModel<double>& b) {
  return same_bits(a.mu, b.mu) && same_bits(a.sigma, b.sigma) &&
         same_bits(a.sigma_inv, b.sigma_inv) && same_bits(a.epsilon, b.epsilon) &&
         (same_bits(a.theta, b.theta) || (std::isnan(a.theta) && std::isnan(b.theta))) &&
         a.calibration_count == b.calibration_count;
}

}  // namespace

bool bit_identical(const Model& a, const Model& b) {
  if (a.channels != b.channels || a.calibration_windows != b.calibration_windows) return false;
  if (!same_bits(a.normalizer.min, b.normalizer.min) ||
      !same_bits(a.normalizer.max, b.normalizer.max) ||
      a.normalizer.fitted_on != b.normalizer.fitted_on) {
    return false;
  }
  const auto& x = a.encoder;
  const auto& y = b.encoder;
  if (x.seed != y.seed || !same_bits(x.embed_weight, y.embed_weight) ||
      !same_bits(x.embed_bias, y.embed_bias) || !same_bits(x.state_weight, y.state_weight) ||
      !same_bits(x.context_weight, y.context_weight) || !same_bits(x.score_vector, y.score_vector)) {
    return false;
  }
  if (!same_baseline(a.global_baseline, b.global_baseline)) return false;
  if (a.stream_baselines.size() != b.stream_baselines.size()) return false;
  for (const auto& [id, base] : a.stream_baselines) {
    const auto it = b.stream_baselines.find(id);
    if (it == b.stream_baselines.end() || !same_baseline(base, it->second)) return false;
  }
  if (a.rules.rules.size() != b.rules.rules.size()) return false;
  for (std::size_t i = 0; i < a.rules.rules.size(); ++i) {
    const auto& r = a.rules.rules[i];
    const auto& s = b.rules.rules[i];
    if (r.channel != s.channel || !same_bits(r.mean, s.mean) ||
        !same_bits(r.half_width, s.half_width) || !same_bits(r.lower, s.lower) ||
        !same_bits(r.upper, s.upper) || !same_bits(r.max_step, s.max_step)) {
      return false;
    }
  }
  if (a.residual.has_value() != b.residual.has_value()) return false;
  if (a.residual && (!same_bits(a.residual->weights, b.residual->weights) ||
                     !(same_bits(a.residual_theta, b.residual_theta) ||
                       (std::isnan(a.residual_theta) && std::isnan(b.residual_theta))))) {
    return false;
  }
  return true;
}

}  // namespace ctxad
