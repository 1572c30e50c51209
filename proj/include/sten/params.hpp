// SPDX-License-Identifier: Apache-2.0
//
// Generic helpers over parameter-block structs. A block struct exposes
//   template <class F, class... S> static void visit(F&& f, S&&... s);
// calling f(name, s.block...) for every block in a fixed order. The same
// struct template is instantiated with `Matrix` for storage and `Mat` for
// working precision / gradients.
#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "sten/matrix.hpp"

namespace sten {

namespace detail {

inline std::size_t block_size(const Matrix& m) { return m.size(); }
inline std::size_t block_size(const Mat& m) { return static_cast<std::size_t>(m.size()); }

}  // namespace detail

template <class Blocks>
std::size_t param_count(const Blocks& b) {
  std::size_t n = 0;
  Blocks::visit([&](const std::string&, const auto& m) { n += detail::block_size(m); }, b);
  return n;
}

/// Row-major flattening, blocks in visit order.
template <class Blocks>
std::vector<double> flatten(const Blocks& b) {
  std::vector<double> out;
  out.reserve(param_count(b));
  Blocks::visit(
      [&](const std::string&, const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Matrix>) {
          for (float v : m.data()) {
            out.push_back(v);
          }
        } else {
          for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
              out.push_back(m(r, c));
            }
          }
        }
      },
      b);
  return out;
}

/// Inverse of flatten(); shapes of `b` are kept. For `Matrix` blocks the values
/// are rounded to float.
template <class Blocks>
void unflatten(std::span<const double> flat, Blocks& b) {
  std::size_t k = 0;
  Blocks::visit(
      [&](const std::string&, auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Matrix>) {
          for (float& v : m.data()) {
            v = static_cast<float>(flat[k++]);
          }
        } else {
          for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
              m(r, c) = flat[k++];
            }
          }
        }
      },
      b);
}

template <class WorkingBlocks, class StorageBlocks>
WorkingBlocks to_working(const StorageBlocks& s) {
  WorkingBlocks w;
  WorkingBlocks::visit([](const std::string&, Mat& dst, const Matrix& src) { dst = src.to_working(); },
                       w, s);
  return w;
}

template <class StorageBlocks, class WorkingBlocks>
StorageBlocks to_storage(const WorkingBlocks& w) {
  StorageBlocks s;
  StorageBlocks::visit(
      [](const std::string&, Matrix& dst, const Mat& src) { dst = Matrix::from_working(src); }, s, w);
  return s;
}

/// Zero working blocks with the shapes of `like` (storage or working).
template <class WorkingBlocks, class Like>
WorkingBlocks zeros_like(const Like& like) {
  WorkingBlocks w;
  WorkingBlocks::visit(
      [](const std::string&, Mat& dst, const auto& src) {
        dst = Mat::Zero(static_cast<Eigen::Index>(src.rows()), static_cast<Eigen::Index>(src.cols()));
      },
      w, like);
  return w;
}

/// Fills every entry uniformly in [-bound, bound] in visit order.
template <class StorageBlocks>
void init_uniform(StorageBlocks& s, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  StorageBlocks::visit(
      [&](const std::string&, Matrix& m) {
        for (float& v : m.data()) {
          v = static_cast<float>(dist(rng));
        }
      },
      s);
}

}  // namespace sten
