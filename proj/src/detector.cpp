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

#include "ctxad/detector.hpp"

namespace ctxad {

std::size_t nearest_rank(double q, std::size_t n) {
  if (n == 0) return 0;
  // The small slack absorbs representation error in q * n (0.995 * 1000).
  const double r = std::ceil(q * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(r < 1.0 ? 1 : static_cast<std::size_t>(r), 1, n);
}

double select_threshold(std::span<const double> scores, double q) {
  if (scores.empty()) throw CalibrationError("threshold: no calibration scores");
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("threshold quantile must be in [0, 1]");
  std::vector<double> sorted(scores.begin(), scores.end());
  const auto k = nearest_rank(q, sorted.size()) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k),
                   sorted.end());
  return sorted[k];
}

}  // namespace ctxad
