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

#include "ctxad/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ctxad/errors.hpp"
#include "json.hpp"

namespace ctxad {

namespace {

// Routes d(score)/d(denoised cell) back through min-max scaling and the
// median selection onto raw cells.
Eigen::MatrixXd to_raw_gradient(const Model& model, const PreparedWindow& prepared,
                                const Eigen::MatrixXd& grad_normalized) {
  const Eigen::Index n = grad_normalized.rows();
  const Eigen::Index l = grad_normalized.cols();
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, l);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double slope = normalize_slope(model.normalizer.min(i), model.normalizer.max(i));
    for (Eigen::Index p = 0; p < l; ++p) {
      raw(i, prepared.selected(i, p)) += grad_normalized(i, p) * slope;
    }
  }
  return raw;
}

}  // namespace

Attribution attribute(const Model& model, const BaselineModel<double>& baseline,
                      const FrozenStep& frozen, Scorer scorer, const WindowFrame& window) {
  Attribution out;
  out.scorer = scorer;
  out.stream_id = window.stream_id;
  out.start_index = window.start_index;
  const PreparedWindow prepared = prepare_window(model, window.values);
  const Eigen::Index n = prepared.normalized.rows();
  const Eigen::Index l = prepared.normalized.cols();
  out.gradient = Eigen::MatrixXd::Zero(n, l);

  if (scorer == Scorer::kResidual) {
    if (frozen.prediction.size() != n * l) throw ParameterError("model has no residual head");
    const Eigen::VectorXd diff = flatten_window(prepared.normalized) - frozen.prediction;
    const double r = diff.norm();
    if (r == 0.0) {
      out.singular = true;
      return out;
    }
    const double a = sigmoid(r);
    const double scale = a * (1.0 - a) / r;
    Eigen::MatrixXd grad(n, l);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < l; ++j) grad(i, j) = scale * diff(i * l + j);
    }
    out.gradient = to_raw_gradient(model, prepared, grad);
    return out;
  }

  const auto& p = model.encoder;
  const Eigen::MatrixXd h = embed_sensors(prepared.normalized, p);  // N x d
  const Eigen::VectorXd uc = p.context_weight * frozen.context;
  Eigen::MatrixXd act = h * p.state_weight.transpose();
  act.rowwise() += uc.transpose();
  const Eigen::MatrixXd t = act.array().tanh().matrix();
  const Eigen::VectorXd alpha = softmax(t * p.score_vector);
  const Eigen::VectorXd attended = h.transpose() * alpha;
  const Eigen::VectorXd delta = attended - baseline.mu;
  const double score = mahalanobis_score(attended, baseline);
  if (score == 0.0) {
    out.singular = true;
    return out;
  }

  // dS/dh~ = Sigma^-1 delta / S.
  const Eigen::VectorXd g = baseline.sigma_inv * delta / score;
  const Eigen::VectorXd s = h * g;  // dS/dalpha_m = g . h_m
  const double s_bar = g.dot(attended);
  Eigen::MatrixXd grad(n, l);
  for (Eigen::Index i = 0; i < n; ++i) {
    // e_i = v . tanh(W h_i + U c)  =>  de_i/dh_i = W^T (v o (1 - t_i^2)).
    const Eigen::VectorXd de_dh =
        p.state_weight.transpose() *
        (p.score_vector.array() * (1.0 - t.row(i).transpose().array().square())).matrix();
    // Softmax Jacobian folded in: dS/de_i = alpha_i (s_i - g . h~).
    const Eigen::VectorXd ds_dh = alpha(i) * g + alpha(i) * (s(i) - s_bar) * de_dh;
    const Eigen::VectorXd ds_dpre =
        (ds_dh.array() * (1.0 - h.row(i).transpose().array().square())).matrix();
    grad.row(i) = (p.embed_weight.transpose() * ds_dpre).transpose();
  }
  out.gradient = to_raw_gradient(model, prepared, grad);
  return out;
}

Eigen::MatrixXd finite_diff_gradient(const std::function<double(const Eigen::MatrixXd&)>& fn,
                                     const Eigen::MatrixXd& x, double h,
                                     const Eigen::VectorXd& step_scale) {
  if (!(h > 0.0)) throw ParameterError("finite difference step must be > 0");
  Eigen::MatrixXd grad(x.rows(), x.cols());
  Eigen::MatrixXd probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double step = step_scale.size() > 0 ? h * step_scale(i) : h;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      probe(i, j) = x(i, j) + step;
      const double up = fn(probe);
      probe(i, j) = x(i, j) - step;
      const double down = fn(probe);
      probe(i, j) = x(i, j);
      grad(i, j) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

Attribution finite_diff_attribution(const Model& model, const BaselineModel<double>& baseline,
                                    const FrozenStep& frozen, Scorer scorer,
                                    const WindowFrame& window, double h) {
  Eigen::VectorXd scale(window.channels());
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    const double range = model.normalizer.max(i) - model.normalizer.min(i);
    scale(i) = range > 0.0 ? range : 1.0;
  }
  Attribution out;
  out.scorer = scorer;
  out.stream_id = window.stream_id;
  out.start_index = window.start_index;
  out.gradient = finite_diff_gradient(
      [&](const Eigen::MatrixXd& x) { return frozen_score(model, baseline, frozen, scorer, x); },
      window.values, h, scale);
  return out;
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::string rationale_text(const ExplanationRecord& r) {
  std::string text = "Window " + std::to_string(r.start_index) + " on " + r.stream_id +
                     " scored " + fmt("%.4f", r.score) + " (θ=" + fmt("%.4f", r.theta) +
                     "): ";
  if (r.singular || r.top_k.empty()) {
    text += "at baseline mean; no contributor";
  } else {
    text += "dominant contributors ";
    for (std::size_t i = 0; i < r.top_k.size(); ++i) {
      const auto& c = r.top_k[i];
      if (i > 0) text += ", ";
      text += c.channel + "@" + std::to_string(c.offset) + " (" + fmt("%+.4g", c.attribution) +
              ")";
    }
  }
  if (!r.attention.empty()) {
    const auto top = static_cast<std::size_t>(
        std::max_element(r.attention.begin(), r.attention.end()) - r.attention.begin());
    const std::string name = top < r.channels.size() ? r.channels[top] : std::to_string(top);
    text += "; attention concentrated on " + name + " (" + fmt("%.4f", r.attention[top]) + ")";
  }
  text += ".";
  return text;
}

ExplanationRecord render_explanation(const Attribution& attribution,
                                     std::span<const double> attention, double score,
                                     int decision, int top_k, const ExplanationContext& ctx) {
  if (top_k < 1) throw ParameterError("top_k must be >= 1");
  ExplanationRecord r;
  r.stream_id = attribution.stream_id;
  r.start_index = attribution.start_index;
  r.timestamp_ms = ctx.timestamp_ms;
  r.scorer = attribution.scorer;
  r.score = score;
  r.theta = ctx.theta;
  r.decision = decision;
  r.attention.assign(attention.begin(), attention.end());
  r.channels = ctx.channels;
  r.singular = attribution.singular;

  struct Cell {
    Eigen::Index i, j;
    double v;
  };
  std::vector<Cell> cells;
  const auto& g = attribution.gradient;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      if (g(i, j) != 0.0) cells.push_back({i, j, g(i, j)});
    }
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    const double ma = std::abs(a.v), mb = std::abs(b.v);
    if (ma != mb) return ma > mb;
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  if (cells.size() > static_cast<std::size_t>(top_k)) cells.resize(static_cast<std::size_t>(top_k));
  for (const auto& c : cells) {
    const auto idx = static_cast<std::size_t>(c.i);
    r.top_k.push_back({idx < ctx.channels.size() ? ctx.channels[idx] : std::to_string(c.i), c.j,
                       c.v, c.v > 0.0 ? 1 : -1});
  }
  r.rationale = rationale_text(r);
  return r;
}

std::string to_json_line(const ExplanationRecord& r) {
  nlohmann::ordered_json j;
  j["stream"] = r.stream_id;
  j["start"] = r.start_index;
  j["timestamp"] = r.timestamp_ms;
  j["scorer"] = to_string(r.scorer);
  j["score"] = r.score;
  j["theta"] = r.theta;
  j["decision"] = r.decision;
  auto& top = j["top_k"] = nlohmann::ordered_json::array();
  for (const auto& c : r.top_k) {
    top.push_back({{"channel", c.channel},
                   {"offset", c.offset},
                   {"attribution", c.attribution},
                   {"sign", c.sign}});
  }
  j["attention"] = r.attention;
  j["singular_at_mean"] = r.singular;
  j["rationale"] = r.rationale;
  return j.dump();
}

double normalized_entropy(const Eigen::VectorXd& attention) {
  const Eigen::Index n = attention.size();
  if (n <= 1) return 0.0;
  double h = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = attention(i);
    if (a > 0.0) h -= a * std::log(a);
  }
  return std::clamp(h / std::log(static_cast<double>(n)), 0.0, 1.0);
}

double concentration(const Eigen::MatrixXd& attribution) {
  const double total = attribution.cwiseAbs().sum();
  if (total == 0.0) return 0.0;
  return attribution.cwiseAbs().maxCoeff() / total;
}

InterpretabilityMetrics interpretability_metrics(std::span<const Eigen::VectorXd> attentions,
                                                 std::span<const Eigen::MatrixXd> attributions) {
  if (attentions.empty()) throw ParameterError("interpretability: no scored windows");
  InterpretabilityMetrics m;
  m.windows = attentions.size();
  m.attributions = attributions.size();
  for (const auto& a : attentions) m.attention_entropy_norm += normalized_entropy(a);
  m.attention_entropy_norm /= static_cast<double>(attentions.size());
  if (!attributions.empty()) {
    for (const auto& a : attributions) m.attribution_concentration += concentration(a);
    m.attribution_concentration /= static_cast<double>(attributions.size());
  }
  return m;
}

}  // namespace ctxad
