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

#ifndef CTXAD_PREPROCESS_HPP_
#define CTXAD_PREPROCESS_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ctxad/errors.hpp"
#include "ctxad/telemetry.hpp"

namespace ctxad {

// Per-channel min-max bounds, frozen after calibration.
template <typename Scalar>
struct NormalizerState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector min;
  Vector max;
  std::vector<std::int64_t> fitted_on;

  Eigen::Index channels() const { return min.size(); }
  bool degenerate(Eigen::Index i) const { return !(max(i) > min(i)); }
};

// (value - min) / (max - min), not clamped. A degenerate channel (min == max)
// maps every value to 0.5.
template <typename Scalar>
Scalar normalize(Scalar value, Scalar lo, Scalar hi) {
  if (!(hi > lo)) return Scalar(0.5);
  return (value - lo) / (hi - lo);
}

template <typename Scalar>
Scalar denormalize(Scalar unit, Scalar lo, Scalar hi) {
  if (!(hi > lo)) return lo;
  return lo + unit * (hi - lo);
}

// d(normalized)/d(value) for one channel; zero on degenerate bounds.
template <typename Scalar>
Scalar normalize_slope(Scalar lo, Scalar hi) {
  return hi > lo ? Scalar(1) / (hi - lo) : Scalar(0);
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> normalize_rows(
    const Eigen::MatrixBase<Derived>& window,
    const NormalizerState<typename Derived::Scalar>& state) {
  using Scalar = typename Derived::Scalar;
  if (window.rows() != state.channels()) {
    throw DimensionError("window channel count does not match normalizer");
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(window.rows(), window.cols());
  for (Eigen::Index i = 0; i < window.rows(); ++i) {
    for (Eigen::Index j = 0; j < window.cols(); ++j) {
      out(i, j) = normalize(window(i, j), state.min(i), state.max(i));
    }
  }
  return out;
}

// Min/max over every sample of every calibration window. Throws
// CalibrationError when there is nothing to fit.
NormalizerState<double> fit_normalizer(std::span<const WindowFrame> windows);

// Moving median of odd `width` along each row, edges replicated. Ties break
// toward the lower column index so the selection is deterministic. When
// `selected` is given it receives, per output cell, the input column the
// median was taken from (the denoiser's Jacobian is that selection).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> median_filter_rows(
    const Eigen::MatrixBase<Derived>& x, int width, Eigen::MatrixXi* selected = nullptr) {
  using Scalar = typename Derived::Scalar;
  if (width < 1 || width % 2 == 0) {
    throw ParameterError("denoise width must be an odd integer >= 1");
  }
  const Eigen::Index rows = x.rows();
  const Eigen::Index cols = x.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows, cols);
  if (selected) selected->resize(rows, cols);
  const int radius = width / 2;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(width));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index p = 0; p < cols; ++p) {
      for (int o = -radius; o <= radius; ++o) {
        idx[static_cast<std::size_t>(o + radius)] =
            std::clamp<Eigen::Index>(p + o, 0, cols - 1);
      }
      const auto mid = idx.begin() + radius;
      std::nth_element(idx.begin(), mid, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        return x(i, a) < x(i, b) || (x(i, a) == x(i, b) && a < b);
      });
      out(i, p) = x(i, *mid);
      if (selected) (*selected)(i, p) = static_cast<int>(*mid);
    }
  }
  return out;
}

WindowFrame denoise(const WindowFrame& window, int width);

}  // namespace ctxad

#endif  // CTXAD_PREPROCESS_HPP_
