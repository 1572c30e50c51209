// SPDX-License-Identifier: Apache-2.0
#include "sten/windowing.hpp"

#include <numeric>
#include <random>
#include <string>

#include "sten/errors.hpp"

namespace sten {

std::vector<std::size_t> window_starts(std::size_t n, std::size_t length, std::size_t stride,
                                       TailPolicy tail) {
  if (length == 0 || stride == 0) {
    throw ConfigError("window length and stride must be >= 1");
  }
  if (length > n) {
    throw DataError("window length " + std::to_string(length) + " exceeds series length " +
                    std::to_string(n));
  }
  std::vector<std::size_t> starts;
  for (std::size_t s = 1; s + length - 1 <= n; s += stride) {
    starts.push_back(s);
  }
  if (tail == TailPolicy::cover && starts.back() + length - 1 < n) {
    starts.push_back(n - length + 1);
  }
  return starts;
}

std::vector<Window> make_windows(const MultivariateSeries& series, std::size_t length, std::size_t stride,
                                 TailPolicy tail) {
  std::vector<Window> out;
  for (std::size_t s : window_starts(series.length(), length, stride, tail)) {
    out.push_back(Window{s, length,
                         series.values.middleRows(static_cast<Eigen::Index>(s - 1),
                                                  static_cast<Eigen::Index>(length))});
  }
  return out;
}

void SubSeqLayout::check(std::size_t window_len) const {
  if (length == 0 || stride == 0 || count == 0) {
    throw ConfigError("sub-sequence length, stride and count must be >= 1");
  }
  if (window_length() != window_len) {
    throw ConfigError("l + (m-1)*r = " + std::to_string(length) + " + " + std::to_string(count - 1) + "*" +
                      std::to_string(stride) + " = " + std::to_string(window_length()) +
                      " does not equal window length " + std::to_string(window_len));
  }
}

std::vector<SubSeq> split_subsequences(const Window& w, const SubSeqLayout& layout) {
  layout.check(w.length);
  std::vector<SubSeq> out;
  out.reserve(layout.count);
  for (std::size_t i = 0; i < layout.count; ++i) {
    const std::size_t offset = i * layout.stride;
    out.push_back(SubSeq{w.start, offset, layout.length, i,
                         w.data.middleRows(static_cast<Eigen::Index>(offset),
                                           static_cast<Eigen::Index>(layout.length))});
  }
  return out;
}

Mat ShuffledCollection::one_hot() const {
  const auto m = static_cast<Eigen::Index>(permutation.size());
  Mat y = Mat::Zero(m, m);
  for (Eigen::Index slot = 0; slot < m; ++slot) {
    y(slot, static_cast<Eigen::Index>(permutation[static_cast<std::size_t>(slot)])) = 1.0;
  }
  return y;
}

std::vector<std::size_t> random_permutation(std::size_t m, std::uint64_t seed) {
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = m; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  return perm;
}

ShuffledCollection shuffle_with_labels(std::vector<SubSeq> subseqs, std::uint64_t seed) {
  ShuffledCollection c;
  c.permutation = random_permutation(subseqs.size(), seed);
  c.subseqs.reserve(subseqs.size());
  for (std::size_t slot = 0; slot < subseqs.size(); ++slot) {
    c.subseqs.push_back(std::move(subseqs[c.permutation[slot]]));
  }
  return c;
}

ShuffledCollection in_order(std::vector<SubSeq> subseqs) {
  ShuffledCollection c;
  c.permutation.resize(subseqs.size());
  std::iota(c.permutation.begin(), c.permutation.end(), std::size_t{0});
  c.subseqs = std::move(subseqs);
  return c;
}

Mat unshuffle(const ShuffledCollection& c, std::size_t window_length) {
  if (c.subseqs.empty()) {
    return {};
  }
  Mat out = Mat::Zero(static_cast<Eigen::Index>(window_length), c.subseqs.front().data.cols());
  for (const SubSeq& s : c.subseqs) {
    out.middleRows(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.length)) = s.data;
  }
  return out;
}

}  // namespace sten
