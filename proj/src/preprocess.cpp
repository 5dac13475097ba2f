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

#include "ctxad/preprocess.hpp"

namespace ctxad {

NormalizerState<double> fit_normalizer(std::span<const WindowFrame> windows) {
  if (windows.empty()) throw CalibrationError("normalizer: no calibration windows");
  const Eigen::Index n = windows.front().channels();
  if (n == 0) throw CalibrationError("normalizer: calibration windows have no channels");
  NormalizerState<double> state;
  state.min = windows.front().values.rowwise().minCoeff();
  state.max = windows.front().values.rowwise().maxCoeff();
  state.fitted_on.assign(static_cast<std::size_t>(n), 0);
  for (const auto& w : windows) {
    if (w.channels() != n) throw DimensionError("normalizer: ragged calibration windows");
    state.min = state.min.cwiseMin(w.values.rowwise().minCoeff());
    state.max = state.max.cwiseMax(w.values.rowwise().maxCoeff());
    for (auto& c : state.fitted_on) c += w.length();
  }
  for (const auto c : state.fitted_on) {
    if (c < 1) throw CalibrationError("normalizer: empty calibration windows");
  }
  return state;
}

WindowFrame denoise(const WindowFrame& window, int width) {
  WindowFrame out = window;
  out.values = median_filter_rows(window.values, width);
  return out;
}

}  // namespace ctxad
