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

#ifndef CTXAD_CONTEXT_ENGINE_HPP_
#define CTXAD_CONTEXT_ENGINE_HPP_

// Contextual encoder: per-sensor temporal embedding, sliding memory context,
// additive attention over sensors and the attended decision vector.
//
//   h_i   = tanh(W_e z_i + b_e)                 z_i: normalized row of sensor i
//   c     = mean of the last k pooled embeddings (zero when memory is empty)
//   e_i   = v^T tanh(W h_i + U c)
//   alpha = softmax(e)
//   h~    = sum_i alpha_i h_i
//
// After each step the pooled embedding (1/N) sum_i h_i enters the memory.

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "ctxad/errors.hpp"
#include "ctxad/rng.hpp"

namespace ctxad {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct EncoderParams {
  Eigen::Index window_length = 0;  // L
  Eigen::Index context_length = 0;  // k
  std::uint64_t seed = 0;

  MatrixX<Scalar> embed_weight;    // W_e, d x L, shared by every sensor
  VectorX<Scalar> embed_bias;      // b_e, d
  MatrixX<Scalar> state_weight;    // W, d x d
  MatrixX<Scalar> context_weight;  // U, d x d
  VectorX<Scalar> score_vector;    // v, d

  Eigen::Index dim() const { return embed_weight.rows(); }

  bool all_finite() const {
    return embed_weight.allFinite() && embed_bias.allFinite() && state_weight.allFinite() &&
           context_weight.allFinite() && score_vector.allFinite();
  }
};

namespace internal {

template <typename Scalar>
void fill_uniform(MatrixX<Scalar>& m, Eigen::Index rows, Eigen::Index cols, double bound,
                  std::uint64_t seed) {
  Xoshiro256 rng(seed);
  m.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = Scalar(rng.uniform(-bound, bound));
  }
}

}  // namespace internal

// W_e ~ U(-1/sqrt(L), 1/sqrt(L)); W, U, v ~ U(-1/sqrt(d), 1/sqrt(d)); b_e = 0.
// Each tensor draws from its own substream, filled in row-major order.
template <typename Scalar = double>
EncoderParams<Scalar> init_params(Eigen::Index d, Eigen::Index window_length,
                                  Eigen::Index context_length, std::uint64_t seed) {
  if (d < 1 || window_length < 1 || context_length < 1) {
    throw ParameterError("encoder dimensions d, L and k must all be >= 1");
  }
  EncoderParams<Scalar> p;
  p.window_length = window_length;
  p.context_length = context_length;
  p.seed = seed;
  const double embed_bound = 1.0 / std::sqrt(static_cast<double>(window_length));
  const double attn_bound = 1.0 / std::sqrt(static_cast<double>(d));
  internal::fill_uniform(p.embed_weight, d, window_length, embed_bound,
                         derive_seed(seed, {"embed_weight"}));
  p.embed_bias = VectorX<Scalar>::Zero(d);
  internal::fill_uniform(p.state_weight, d, d, attn_bound, derive_seed(seed, {"state_weight"}));
  internal::fill_uniform(p.context_weight, d, d, attn_bound,
                         derive_seed(seed, {"context_weight"}));
  MatrixX<Scalar> v;
  internal::fill_uniform(v, d, 1, attn_bound, derive_seed(seed, {"score_vector"}));
  p.score_vector = v.col(0);
  return p;
}

// Ring buffer of at most k pooled embeddings, oldest evicted first.
template <typename Scalar>
class MemoryBuffer {
 public:
  MemoryBuffer() = default;
  MemoryBuffer(Eigen::Index capacity, Eigen::Index dim)
      : slots_(MatrixX<Scalar>::Zero(capacity, dim)) {
    if (capacity < 1 || dim < 1) throw ParameterError("memory capacity and dim must be >= 1");
  }

  Eigen::Index capacity() const { return slots_.rows(); }
  Eigen::Index dim() const { return slots_.cols(); }
  Eigen::Index size() const { return size_; }
  bool empty() const { return size_ == 0; }

  template <typename Derived>
  void push(const Eigen::MatrixBase<Derived>& h) {
    if (h.size() != dim()) throw DimensionError("memory entry has wrong dimension");
    slots_.row(head_) = h.transpose();
    head_ = (head_ + 1) % capacity();
    if (size_ < capacity()) ++size_;
  }

  // i = 0 is the oldest entry.
  auto entry(Eigen::Index i) const {
    const Eigen::Index start = (head_ - size_ + capacity()) % capacity();
    return slots_.row((start + i) % capacity()).transpose();
  }

  VectorX<Scalar> mean() const {
    if (size_ == 0) return VectorX<Scalar>::Zero(dim());
    VectorX<Scalar> acc = VectorX<Scalar>::Zero(dim());
    for (Eigen::Index i = 0; i < size_; ++i) acc += entry(i);
    return acc / Scalar(size_);
  }

  std::size_t state_bytes() const {
    return sizeof(*this) + static_cast<std::size_t>(slots_.size()) * sizeof(Scalar);
  }

 private:
  MatrixX<Scalar> slots_;
  Eigen::Index head_ = 0;
  Eigen::Index size_ = 0;
};

template <typename Derived>
VectorX<typename Derived::Scalar> embed_sensor_window(
    const Eigen::MatrixBase<Derived>& row, const EncoderParams<typename Derived::Scalar>& p) {
  if (row.size() != p.window_length) {
    throw DimensionError("sensor row length does not match window length L");
  }
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> pre = p.embed_weight * row.derived().reshaped() + p.embed_bias;
  return pre.array().tanh().matrix();
}

// Row i is h_i for sensor i.
template <typename Derived>
MatrixX<typename Derived::Scalar> embed_sensors(
    const Eigen::MatrixBase<Derived>& normalized, const EncoderParams<typename Derived::Scalar>& p) {
  if (normalized.cols() != p.window_length) {
    throw DimensionError("window length does not match encoder L");
  }
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> pre = normalized * p.embed_weight.transpose();
  pre.rowwise() += p.embed_bias.transpose();
  return pre.array().tanh().matrix();
}

template <typename Scalar>
VectorX<Scalar> context_vector(const MemoryBuffer<Scalar>& memory) {
  return memory.mean();
}

template <typename Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  if (scores.size() == 0) throw DimensionError("softmax of an empty vector");
  VectorX<Scalar> shifted = scores.derived().reshaped();
  shifted.array() -= shifted.maxCoeff();
  shifted = shifted.array().exp().matrix();
  return shifted / shifted.sum();
}

// e_i = v^T tanh(W h_i + U c).
template <typename DerivedH, typename DerivedC>
VectorX<typename DerivedH::Scalar> attention_scores(
    const Eigen::MatrixBase<DerivedH>& per_sensor, const Eigen::MatrixBase<DerivedC>& context,
    const EncoderParams<typename DerivedH::Scalar>& p) {
  using Scalar = typename DerivedH::Scalar;
  if (per_sensor.rows() < 1) throw DimensionError("attention needs at least one sensor");
  if (per_sensor.cols() != p.dim() || context.size() != p.dim()) {
    throw DimensionError("attention inputs do not match embedding dimension");
  }
  const VectorX<Scalar> uc = p.context_weight * context.derived().reshaped();
  MatrixX<Scalar> act = per_sensor * p.state_weight.transpose();
  act.rowwise() += uc.transpose();
  return act.array().tanh().matrix() * p.score_vector;
}

template <typename DerivedH, typename DerivedC>
VectorX<typename DerivedH::Scalar> attention_weights(
    const Eigen::MatrixBase<DerivedH>& per_sensor, const Eigen::MatrixBase<DerivedC>& context,
    const EncoderParams<typename DerivedH::Scalar>& p) {
  return softmax(attention_scores(per_sensor, context, p));
}

// Convex combination sum_i alpha_i h_i.
template <typename DerivedH, typename DerivedA>
VectorX<typename DerivedH::Scalar> attended_vector(const Eigen::MatrixBase<DerivedH>& per_sensor,
                                                   const Eigen::MatrixBase<DerivedA>& attention) {
  if (attention.size() != per_sensor.rows()) {
    throw DimensionError("attention length does not match sensor count");
  }
  return per_sensor.transpose() * attention.derived().reshaped();
}

template <typename Scalar>
struct EncodedStep {
  MatrixX<Scalar> per_sensor;  // N x d
  VectorX<Scalar> context;     // d
  VectorX<Scalar> attention;   // N
  VectorX<Scalar> attended;    // d
};

template <typename Derived>
EncodedStep<typename Derived::Scalar> encode_step(
    const Eigen::MatrixBase<Derived>& normalized, MemoryBuffer<typename Derived::Scalar>& memory,
    const EncoderParams<typename Derived::Scalar>& p) {
  using Scalar = typename Derived::Scalar;
  if (memory.dim() != p.dim()) throw DimensionError("memory dimension does not match encoder");
  EncodedStep<Scalar> step;
  step.per_sensor = embed_sensors(normalized, p);
  step.context = context_vector(memory);
  step.attention = attention_weights(step.per_sensor, step.context, p);
  step.attended = attended_vector(step.per_sensor, step.attention);
  memory.push(step.per_sensor.colwise().mean().transpose());
  return step;
}

}  // namespace ctxad

#endif  // CTXAD_CONTEXT_ENGINE_HPP_
