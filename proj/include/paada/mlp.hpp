/**
 * Copyright 2026 The paada Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Small multilayer perceptrons with hand-written reverse-mode gradients.
//
// Batches are stored feature-major: a Matrix has one row per feature and one
// column per sample. Every kernel performs the same scalar operation sequence
// for a column regardless of how many columns the batch has, so evaluating a
// state alone or inside a batch gives bit-identical results (the build turns
// off floating-point contraction to keep it that way).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "paada/error.hpp"
#include "paada/random.hpp"

namespace paada {

/// Floor applied to probabilities before taking logs.
inline constexpr double kProbFloor = 1e-8;

/// Dense row-major matrix; rows are features, columns are samples.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  /// Single-column matrix holding `v`.
  static Matrix column(std::span<const double> v) {
    Matrix m(v.size(), 1);
    std::copy(v.begin(), v.end(), m.data.begin());
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::vector<double> col(std::size_t c) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
    return out;
  }
  void set_col(std::size_t c, std::span<const double> v) {
    for (std::size_t r = 0; r < rows; ++r) (*this)(r, c) = v[r];
  }
};

enum class Activation { tanh, relu };
enum class Head { softmax, identity };

/// Layered parameter set. All weights and biases live in one flat buffer:
/// for each layer, the row-major [out x in] weight block followed by the
/// bias vector. A parameter gradient is another MlpParams of the same shape.
class MlpParams {
 public:
  MlpParams() = default;

  /// Zero-initialized network with layer widths `dims` (input first).
  MlpParams(std::vector<std::size_t> dims, Activation activation, Head head)
      : dims_(std::move(dims)), activation_(activation), head_(head) {
    if (dims_.size() < 2) throw ShapeError("an MLP needs at least an input and an output width");
    for (auto d : dims_)
      if (d == 0) throw ShapeError("MLP layer widths must be positive");
    offsets_.resize(dims_.size());
    std::size_t off = 0;
    for (std::size_t k = 0; k + 1 < dims_.size(); ++k) {
      offsets_[k] = off;
      off += dims_[k + 1] * dims_[k] + dims_[k + 1];
    }
    offsets_.back() = off;
    values_.assign(off, 0.0);
  }

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  static MlpParams glorot(std::vector<std::size_t> dims, Activation activation, Head head,
                          std::uint64_t seed) {
    MlpParams p(std::move(dims), activation, head);
    Rng rng(seed);
    for (std::size_t k = 0; k < p.num_layers(); ++k) {
      const double limit = std::sqrt(6.0 / static_cast<double>(p.in_dim(k) + p.out_dim(k)));
      for (double& w : p.weights(k)) w = rng.uniform(-limit, limit);
    }
    return p;
  }

  MlpParams zeros_like() const {
    MlpParams z = *this;
    std::fill(z.values_.begin(), z.values_.end(), 0.0);
    return z;
  }

  std::size_t num_layers() const noexcept { return dims_.empty() ? 0 : dims_.size() - 1; }
  std::size_t in_dim(std::size_t k) const { return dims_.at(k); }
  std::size_t out_dim(std::size_t k) const { return dims_.at(k + 1); }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  Activation activation() const noexcept { return activation_; }
  Head head() const noexcept { return head_; }

  std::span<double> weights(std::size_t k) {
    return {values_.data() + offsets_[k], out_dim(k) * in_dim(k)};
  }
  std::span<const double> weights(std::size_t k) const {
    return {values_.data() + offsets_[k], out_dim(k) * in_dim(k)};
  }
  std::span<double> bias(std::size_t k) {
    return {values_.data() + offsets_[k] + out_dim(k) * in_dim(k), out_dim(k)};
  }
  std::span<const double> bias(std::size_t k) const {
    return {values_.data() + offsets_[k] + out_dim(k) * in_dim(k), out_dim(k)};
  }

  std::span<double> flat() noexcept { return values_; }
  std::span<const double> flat() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  bool same_shape(const MlpParams& o) const noexcept {
    return dims_ == o.dims_ && activation_ == o.activation_ && head_ == o.head_;
  }

  bool all_finite() const noexcept {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  /// Throws if the layer chain is empty or any entry is non-finite.
  void validate() const {
    if (num_layers() == 0) throw ShapeError("MLP has no layers");
    if (!all_finite()) throw NumericError("MLP parameters contain non-finite entries");
  }

  friend bool operator==(const MlpParams&, const MlpParams&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
  Activation activation_ = Activation::tanh;
  Head head_ = Head::identity;
};

/// Post-activation values of every layer, input first. The last entry holds
/// the raw network output (logits or value) before any head transform.
struct ForwardTrace {
  std::vector<Matrix> activations;
};

namespace detail {

// out(r, c) = init[r] + sum_k lhs(r, k) * rhs(k, c) with k ascending for every
// element, where lhs(r, k) = lhs[r * lr + k * lk] and rhs/out are row-major
// with n columns. Register-blocked over 4 rows x 16 columns; each lane and the
// remainder paths perform the identical per-element sequence.
using Lane8 = double __attribute__((vector_size(64)));

inline void blocked_product(std::size_t rows, std::size_t inner, std::size_t n, const double* lhs, std::size_t lr,
                            std::size_t lk, const double* rhs, const double* init, double* out) {
  constexpr std::size_t kRb = 4, kCb = 16;
  std::size_t r0 = 0;
  for (; r0 + kRb <= rows; r0 += kRb) {
    std::size_t c0 = 0;
    for (; c0 + kCb <= n; c0 += kCb) {
      Lane8 acc[kRb][2];
      for (std::size_t r = 0; r < kRb; ++r) {
        const double b = init ? init[r0 + r] : 0.0;
        acc[r][0] = Lane8{} + b;
        acc[r][1] = Lane8{} + b;
      }
      for (std::size_t k = 0; k < inner; ++k) {
        Lane8 x0, x1;
        std::memcpy(&x0, rhs + k * n + c0, sizeof x0);
        std::memcpy(&x1, rhs + k * n + c0 + 8, sizeof x1);
        for (std::size_t r = 0; r < kRb; ++r) {
          const double l = lhs[(r0 + r) * lr + k * lk];
          acc[r][0] += l * x0;
          acc[r][1] += l * x1;
        }
      }
      for (std::size_t r = 0; r < kRb; ++r) {
        std::memcpy(out + (r0 + r) * n + c0, &acc[r][0], sizeof(Lane8));
        std::memcpy(out + (r0 + r) * n + c0 + 8, &acc[r][1], sizeof(Lane8));
      }
    }
    for (; c0 + 8 <= n; c0 += 8) {
      Lane8 acc[kRb];
      for (std::size_t r = 0; r < kRb; ++r) acc[r] = Lane8{} + (init ? init[r0 + r] : 0.0);
      for (std::size_t k = 0; k < inner; ++k) {
        Lane8 x;
        std::memcpy(&x, rhs + k * n + c0, sizeof x);
        for (std::size_t r = 0; r < kRb; ++r) acc[r] += lhs[(r0 + r) * lr + k * lk] * x;
      }
      for (std::size_t r = 0; r < kRb; ++r) std::memcpy(out + (r0 + r) * n + c0, &acc[r], sizeof(Lane8));
    }
    for (; c0 < n; ++c0)
      for (std::size_t r = 0; r < kRb; ++r) {
        double acc = init ? init[r0 + r] : 0.0;
        for (std::size_t k = 0; k < inner; ++k) acc += lhs[(r0 + r) * lr + k * lk] * rhs[k * n + c0];
        out[(r0 + r) * n + c0] = acc;
      }
  }
  for (; r0 < rows; ++r0)
    for (std::size_t c = 0; c < n; ++c) {
      double acc = init ? init[r0] : 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += lhs[r0 * lr + k * lk] * rhs[k * n + c];
      out[r0 * n + c] = acc;
    }
}

inline void affine(std::span<const double> w, std::span<const double> b, const Matrix& x, Matrix& y) {
  const std::size_t out = b.size(), in = x.rows, n = x.cols;
  if (y.rows != out || y.cols != n) y = Matrix(out, n);
  blocked_product(out, in, n, w.data(), in, 1, x.data.data(), b.data(), y.data.data());
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
#pragma omp simd reduction(+ : s)
  for (std::size_t c = 0; c < n; ++c) s += a[c] * b[c];
  return s;
}

// exp(x) for x in [0, 41]: Cody-Waite reduction by ln 2 and a rational
// approximation on [-ln2/2, ln2/2]. Branch-free so activation loops vectorize.
inline double exp_nonneg(double x) {
  constexpr double kShift = 6755399441055744.0;  // 1.5 * 2^52, rounds to integer
  const double t = 1.4426950408889634 * x + kShift;
  const double n = t - kShift;
  double r = x - n * 6.93145751953125e-1;
  r = r - n * 1.42860682030941723212e-6;
  const double rr = r * r;
  const double px = r * ((1.26177193074810590878e-4 * rr + 3.02994407707441961300e-2) * rr + 1.0);
  const double q = ((3.00198505138664455042e-6 * rr + 2.52448340349684104192e-3) * rr + 2.27265548208155028766e-1) * rr + 2.0;
  const double e = 1.0 + 2.0 * (px / (q - px));
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(t);
  return e * std::bit_cast<double>((bits + 1023) << 52);
}

// tanh to within 2 ulp of the C library; rational form near zero, exp form
// elsewhere.
inline double tanh(double v) {
  const double a = std::fabs(v);
  const double z = v * v;
  const double p = (-9.64399179425052238628e-1 * z - 9.92877231001918586564e1) * z - 1.61468768441708447952e3;
  const double q = ((z + 1.12811678491632931402e2) * z + 2.23548839060100448583e3) * z + 4.84406305325125486048e3;
  const double small = a + a * z * (p / q);
  const double e = exp_nonneg(2.0 * (a < 20.0 ? a : 20.0));
  const double large = 1.0 - 2.0 / (e + 1.0);
  return std::copysign(a < 0.625 ? small : large, v);
}

inline void activate(Activation a, Matrix& m) {
  double* d = m.data.data();
  const std::size_t n = m.data.size();
  if (a == Activation::tanh) {
    for (std::size_t e = 0; e < n; ++e) d[e] = detail::tanh(d[e]);
  } else {
    for (std::size_t e = 0; e < n; ++e) d[e] = d[e] > 0.0 ? d[e] : 0.0;
  }
}

}  // namespace detail

/// Raw network output for a batch (logits for softmax heads).
inline Matrix forward(const MlpParams& p, const Matrix& input, ForwardTrace* trace = nullptr) {
  if (input.rows != p.input_dim())
    throw ShapeError("input dimension " + std::to_string(input.rows) + " does not match network input " +
                     std::to_string(p.input_dim()));
  if (!trace) {
    Matrix cur = input, next;
    for (std::size_t k = 0; k < p.num_layers(); ++k) {
      detail::affine(p.weights(k), p.bias(k), cur, next);
      if (k + 1 < p.num_layers()) detail::activate(p.activation(), next);
      std::swap(cur, next);
    }
    return cur;
  }
  auto& acts = trace->activations;
  acts.resize(p.num_layers() + 1);
  acts[0] = input;
  for (std::size_t k = 0; k < p.num_layers(); ++k) {
    detail::affine(p.weights(k), p.bias(k), acts[k], acts[k + 1]);
    if (k + 1 < p.num_layers()) detail::activate(p.activation(), acts[k + 1]);
  }
  return acts.back();
}

/// Reverse pass. `grad_out` is d(objective)/d(raw output). Parameter
/// gradients are accumulated into `grad_params` (same shape as `p`), the
/// input gradient is written to `grad_input`; either may be null.
inline void backward(const MlpParams& p, const ForwardTrace& trace, Matrix grad_out, MlpParams* grad_params,
                     Matrix* grad_input) {
  const std::size_t n = grad_out.cols;
  Matrix delta = std::move(grad_out);
  for (std::size_t k = p.num_layers(); k-- > 0;) {
    const Matrix& a_in = trace.activations[k];
    const std::size_t in = p.in_dim(k), out = p.out_dim(k);
    const auto w = p.weights(k);
    if (grad_params) {
      auto dw = grad_params->weights(k);
      auto db = grad_params->bias(k);
      for (std::size_t j = 0; j < out; ++j) {
        const double* dr = delta.data.data() + j * n;
        double bsum = 0.0;
        for (std::size_t c = 0; c < n; ++c) bsum += dr[c];
        db[j] += bsum;
        for (std::size_t i = 0; i < in; ++i) dw[j * in + i] += detail::dot(dr, a_in.data.data() + i * n, n);
      }
    }
    if (k == 0 && !grad_input) break;
    Matrix prev(in, n);
    detail::blocked_product(in, out, n, w.data(), 1, in, delta.data.data(), nullptr, prev.data.data());
    if (k > 0) {
      // through the hidden activation of layer k-1, whose output is a_in
      if (p.activation() == Activation::tanh) {
        for (std::size_t e = 0; e < prev.data.size(); ++e) prev.data[e] *= 1.0 - a_in.data[e] * a_in.data[e];
      } else {
        for (std::size_t e = 0; e < prev.data.size(); ++e)
          if (!(a_in.data[e] > 0.0)) prev.data[e] = 0.0;
      }
      delta = std::move(prev);
    } else {
      *grad_input = std::move(prev);
    }
  }
}

/// Column-wise softmax of a logit matrix.
inline Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows, logits.cols);
  for (std::size_t c = 0; c < logits.cols; ++c) {
    double mx = logits(0, c);
    for (std::size_t r = 1; r < logits.rows; ++r) mx = std::max(mx, logits(r, c));
    double sum = 0.0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
      const double e = std::exp(logits(r, c) - mx);
      p(r, c) = e;
      sum += e;
    }
    for (std::size_t r = 0; r < logits.rows; ++r) p(r, c) /= sum;
  }
  return p;
}

inline double floored_log(double prob) { return std::log(std::max(prob, kProbFloor)); }

namespace detail {

inline void check_state(const MlpParams& p, std::span<const double> state) {
  if (state.size() != p.input_dim())
    throw ShapeError("state dimension " + std::to_string(state.size()) + " does not match network input " +
                     std::to_string(p.input_dim()));
  for (double v : state)
    if (!std::isfinite(v)) throw NumericError("non-finite state entry");
}

}  // namespace detail

/// Action probabilities for a batch of states (one column per state).
inline Matrix policy_forward_batch(const MlpParams& policy, const Matrix& states) {
  if (policy.head() != Head::softmax) throw ShapeError("policy network must have a softmax head");
  for (double v : states.data)
    if (!std::isfinite(v)) throw NumericError("non-finite state entry");
  return softmax(forward(policy, states));
}

/// Value estimates for a batch of states.
inline std::vector<double> value_forward_batch(const MlpParams& value, const Matrix& states) {
  if (value.head() != Head::identity || value.output_dim() != 1)
    throw ShapeError("value network must have a single identity output");
  for (double v : states.data)
    if (!std::isfinite(v)) throw NumericError("non-finite state entry");
  const Matrix out = forward(value, states);
  return {out.data.begin(), out.data.end()};
}

/// pi(. | state).
inline std::vector<double> policy_forward(const MlpParams& policy, std::span<const double> state) {
  detail::check_state(policy, state);
  return policy_forward_batch(policy, Matrix::column(state)).data;
}

/// V(state).
inline double value_forward(const MlpParams& value, std::span<const double> state) {
  detail::check_state(value, state);
  return value_forward_batch(value, Matrix::column(state)).front();
}

/// FNV-1a over the raw parameter bytes; used to prove a network was not
/// modified by a read-only operation.
inline std::uint64_t checksum(const MlpParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : p.flat()) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace paada
