// SPDX-License-Identifier: Apache-2.0
//
// Single-layer GRU with exact reverse-mode gradients.
//
//   z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)
//   r_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)
//   c_t = tanh(W_h x_t + U_h (r_t * h_{t-1}) + b_h)
//   h_t = (1 - z_t) * h_{t-1} + z_t * c_t
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sten/matrix.hpp"

namespace sten {

template <class M>
struct GruBlocks {
  M w_z, w_r, w_h;  // hidden x input
  M u_z, u_r, u_h;  // hidden x hidden
  M b_z, b_r, b_h;  // hidden x 1

  template <class F, class... S>
  static void visit(F&& f, S&&... s) {
    f(std::string("w_z"), s.w_z...);
    f(std::string("w_r"), s.w_r...);
    f(std::string("w_h"), s.w_h...);
    f(std::string("u_z"), s.u_z...);
    f(std::string("u_r"), s.u_r...);
    f(std::string("u_h"), s.u_h...);
    f(std::string("b_z"), s.b_z...);
    f(std::string("b_r"), s.b_r...);
    f(std::string("b_h"), s.b_h...);
  }

  [[nodiscard]] std::size_t input_dim() const { return static_cast<std::size_t>(w_z.cols()); }
  [[nodiscard]] std::size_t hidden_dim() const { return static_cast<std::size_t>(w_z.rows()); }
};

using GruParams = GruBlocks<Matrix>;
using GruWeights = GruBlocks<Mat>;

/// Zero-initialised storage with the given shapes.
GruParams make_gru_params(std::size_t input_dim, std::size_t hidden_dim);

/// Throws std::invalid_argument if the blocks are not mutually consistent.
void check_gru_shapes(const GruWeights& p);

/// One recurrence step for a single input vector.
Vec gru_step(const Vec& x, const Vec& h_prev, const GruWeights& p);

/// Runs `seq` (T x D, one row per step) from `h0` (zero when absent) and
/// returns the final hidden state.
Vec gru_encode(const Mat& seq, const GruWeights& p, const std::optional<Vec>& h0 = std::nullopt);

/// Intermediates of a batched forward pass; h[0] is the initial state.
struct GruTape {
  std::vector<Mat> h;
  std::vector<Mat> z;
  std::vector<Mat> r;
  std::vector<Mat> c;
};

/// Batched forward over T steps. `xs[t]` is D x B (one column per sequence).
/// Starts from zeros and returns h_T (hidden x B). Records into `tape` when
/// given.
Mat gru_forward(const GruWeights& p, std::span<const Mat> xs, GruTape* tape = nullptr);

/// Backpropagation through time. `dh_final` is dLoss/dh_T; `dh_steps`, if
/// non-empty, holds dLoss/dh_{t+1} for every step t (added on top of the
/// recurrent gradient). Parameter gradients are accumulated into `grads`.
void gru_backward(const GruWeights& p, std::span<const Mat> xs, const GruTape& tape,
                  const Mat& dh_final, std::span<const Mat> dh_steps, GruWeights& grads);

}  // namespace sten
