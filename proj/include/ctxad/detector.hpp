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

#ifndef CTXAD_DETECTOR_HPP_
#define CTXAD_DETECTOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ctxad/context_engine.hpp"
#include "ctxad/errors.hpp"

namespace ctxad {

// Normal-behaviour distribution of attended vectors plus the decision
// threshold. `sigma` already includes the ridge epsilon * I.
template <typename Scalar>
struct BaselineModel {
  VectorX<Scalar> mu;
  MatrixX<Scalar> sigma;
  MatrixX<Scalar> sigma_inv;
  Scalar epsilon = 0;
  Scalar theta = std::numeric_limits<Scalar>::quiet_NaN();
  std::int64_t calibration_count = 0;

  Eigen::Index dim() const { return mu.size(); }
  bool has_threshold() const { return std::isfinite(theta); }
};

// Ridge floor applied whenever epsilon_scale > 0.
inline constexpr double kEpsilonFloor = 1e-9;

// Rows of `vectors` are calibration attended vectors. Sigma is the sample
// covariance (n - 1 denominator) plus eps * I with
// eps = max(epsilon_scale * trace(cov) / d, 1e-9); epsilon_scale == 0 disables
// the ridge entirely. The inverse comes from a Cholesky factorization, which
// also certifies positive definiteness.
template <typename Derived>
BaselineModel<typename Derived::Scalar> fit_baseline(const Eigen::MatrixBase<Derived>& vectors,
                                                     double epsilon_scale) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = vectors.rows();
  const Eigen::Index d = vectors.cols();
  if (n < 2) {
    throw CalibrationError("baseline needs at least 2 calibration vectors, got " +
                           std::to_string(n));
  }
  if (!vectors.allFinite()) throw DataError("baseline: non-finite calibration vector");
  if (!(epsilon_scale >= 0.0)) throw ParameterError("epsilon_scale must be >= 0");

  BaselineModel<Scalar> m;
  m.calibration_count = n;
  m.mu = vectors.colwise().mean().transpose();
  const MatrixX<Scalar> centered = vectors.rowwise() - m.mu.transpose();
  MatrixX<Scalar> cov = (centered.transpose() * centered) / Scalar(n - 1);
  cov = (cov + cov.transpose()) / Scalar(2);
  m.epsilon = epsilon_scale > 0.0
                  ? std::max<Scalar>(Scalar(epsilon_scale) * cov.trace() / Scalar(d),
                                     Scalar(kEpsilonFloor))
                  : Scalar(0);
  m.sigma = cov;
  m.sigma.diagonal().array() += m.epsilon;

  Eigen::LLT<MatrixX<Scalar>> llt(m.sigma);
  if (llt.info() != Eigen::Success) {
    throw CalibrationError("baseline covariance is not positive definite; raise epsilon_scale");
  }
  m.sigma_inv = llt.solve(MatrixX<Scalar>::Identity(d, d));
  m.sigma_inv = (m.sigma_inv + m.sigma_inv.transpose()) / Scalar(2);
  return m;
}

template <typename Scalar>
BaselineModel<Scalar> fit_baseline(std::span<const VectorX<Scalar>> vectors,
                                   double epsilon_scale) {
  if (vectors.empty()) throw CalibrationError("baseline: no calibration vectors");
  MatrixX<Scalar> rows(static_cast<Eigen::Index>(vectors.size()), vectors.front().size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != rows.cols()) throw DimensionError("baseline: ragged vectors");
    rows.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose();
  }
  return fit_baseline(rows, epsilon_scale);
}

// sqrt((h - mu)^T Sigma^-1 (h - mu)).
template <typename Derived>
typename Derived::Scalar mahalanobis_score(const Eigen::MatrixBase<Derived>& h,
                                           const BaselineModel<typename Derived::Scalar>& m) {
  using Scalar = typename Derived::Scalar;
  if (h.size() != m.dim()) throw DimensionError("score input does not match baseline dimension");
  const VectorX<Scalar> delta = h.derived().reshaped() - m.mu;
  if ((delta.array() == Scalar(0)).all()) return Scalar(0);
  const Scalar q = delta.dot(m.sigma_inv * delta);
  return std::sqrt(std::max(q, Scalar(0)));
}

// Boundary inclusive: S == theta is anomalous.
template <typename Scalar>
int decide(Scalar score, Scalar theta) {
  return score >= theta ? 1 : 0;
}

// Nearest-rank quantile: the ceil(q * n)-th smallest score, q = 0 giving the
// minimum.
double select_threshold(std::span<const double> scores, double q);

// 1-based nearest rank for n items, clamped into [1, n].
std::size_t nearest_rank(double q, std::size_t n);

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

// Linear map from an attended vector to the flattened (channel-major)
// normalized next window.
template <typename Scalar>
struct ResidualHead {
  MatrixX<Scalar> weights;  // (N * L) x d
  bool fitted = false;

  template <typename Derived>
  VectorX<Scalar> predict(const Eigen::MatrixBase<Derived>& attended) const {
    if (attended.size() != weights.cols()) {
      throw DimensionError("residual head input does not match dimension");
    }
    return weights * attended.derived().reshaped();
  }
};

inline constexpr double kResidualRidge = 1e-6;

// Ridge least squares without intercept: rows of `inputs` are attended
// vectors, rows of `targets` the matching flattened next windows.
template <typename DerivedX, typename DerivedY>
ResidualHead<typename DerivedX::Scalar> fit_residual_head(
    const Eigen::MatrixBase<DerivedX>& inputs, const Eigen::MatrixBase<DerivedY>& targets,
    double ridge = kResidualRidge) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Index n = inputs.rows();
  const Eigen::Index d = inputs.cols();
  if (targets.rows() != n) throw DimensionError("residual head: unpaired samples");
  if (n < d || n < 1) {
    throw CalibrationError("residual head needs at least d = " + std::to_string(d) +
                           " pairs, got " + std::to_string(n));
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw DataError("residual head: non-finite calibration data");
  }
  MatrixX<Scalar> gram = inputs.transpose() * inputs;
  gram.diagonal().array() += Scalar(ridge);
  const MatrixX<Scalar> rhs = inputs.transpose() * targets;
  Eigen::LDLT<MatrixX<Scalar>> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw CalibrationError("residual head: singular system");
  ResidualHead<Scalar> head;
  head.weights = ldlt.solve(rhs).transpose();
  head.fitted = true;
  return head;
}

// sigmoid(||x - x_hat||_2), always in [0.5, 1).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar residual_score(const Eigen::MatrixBase<DerivedA>& observed,
                                         const Eigen::MatrixBase<DerivedB>& predicted) {
  if (observed.size() != predicted.size()) {
    throw DimensionError("residual score: length mismatch");
  }
  return sigmoid((observed.derived().reshaped() - predicted.derived().reshaped()).norm());
}

}  // namespace ctxad

#endif  // CTXAD_DETECTOR_HPP_
