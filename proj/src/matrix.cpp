// SPDX-License-Identifier: Apache-2.0
#include "sten/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sten/errors.hpp"

namespace sten {

Matrix::Matrix(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_working(const Mat& m) {
  Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (!std::isfinite(v)) {
        throw NumericError("non-finite value at (" + std::to_string(r) + ", " +
                           std::to_string(c) + ")");
      }
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = static_cast<float>(v);
    }
  }
  return out;
}

Mat Matrix::to_working() const {
  Mat m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (*this)(r, c);
    }
  }
  return m;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) {
    return {};
  }
  double hi = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw NumericError("softmax: non-finite logit");
    }
    hi = std::max(hi, v);
  }
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - hi);
    total += out[i];
  }
  for (double& v : out) {
    v /= total;
  }
  return out;
}

Mat softmax_columns(const Mat& logits) {
  if (!logits.allFinite()) {
    throw NumericError("softmax: non-finite logit");
  }
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double hi = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - hi).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

}  // namespace sten
