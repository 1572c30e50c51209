// SPDX-License-Identifier: Apache-2.0
//
// Dense storage and working-precision helpers.
//
// Parameters live in `Matrix` (row-major, 32-bit floats). All arithmetic is
// carried out on Eigen double matrices obtained with `to_working()`, so the
// forward pass, its gradients and the finite-difference oracle share one
// 64-bit code path.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sten {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0F);

  /// Rounds a working matrix to storage precision. Throws NumericError on
  /// non-finite entries.
  static Matrix from_working(const Mat& m);
  [[nodiscard]] Mat to_working() const;

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<const float> data() const noexcept { return data_; }
  [[nodiscard]] std::span<float> data() noexcept { return data_; }

  [[nodiscard]] bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// Numerically stable softmax (max-subtracted). Throws NumericError on
/// non-finite input.
std::vector<double> softmax(std::span<const double> logits);

/// Column-wise softmax of a logits matrix (one distribution per column).
Mat softmax_columns(const Mat& logits);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace sten
