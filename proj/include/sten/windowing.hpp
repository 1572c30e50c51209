// SPDX-License-Identifier: Apache-2.0
//
// Sliding windows of length L / stride R over a series, and the split of a
// window into m sub-sequences of length l / stride r (l + (m-1) r == L).
// Timestamps and window starts are 1-based.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sten/matrix.hpp"
#include "sten/series.hpp"

namespace sten {

struct Window {
  std::size_t start = 1;  // timestamp of the first row
  std::size_t length = 0;
  Mat data;               // length x D
};

enum class TailPolicy {
  drop,   // windows stop at the last full stride
  cover,  // one extra window anchored at N-L+1 when the tail is not covered
};

/// Window start timestamps 1, 1+R, ... with start+L-1 <= N.
std::vector<std::size_t> window_starts(std::size_t n, std::size_t length, std::size_t stride,
                                       TailPolicy tail = TailPolicy::drop);

std::vector<Window> make_windows(const MultivariateSeries& series, std::size_t length, std::size_t stride,
                                 TailPolicy tail = TailPolicy::drop);

struct SubSeqLayout {
  std::size_t length = 10;  // l
  std::size_t stride = 10;  // r
  std::size_t count = 10;   // m

  [[nodiscard]] std::size_t window_length() const { return length + (count - 1) * stride; }
  /// Throws ConfigError unless l + (m-1) r == window_length and all are >= 1.
  void check(std::size_t window_length) const;
};

struct SubSeq {
  std::size_t parent_start = 1;
  std::size_t offset = 0;  // row offset inside the window
  std::size_t length = 0;
  std::size_t position_label = 0;
  Mat data;  // length x D
};

std::vector<SubSeq> split_subsequences(const Window& w, const SubSeqLayout& layout);

/// Sub-sequences in presented order; permutation[slot] is the true position
/// of the sub-sequence shown in `slot`.
struct ShuffledCollection {
  std::vector<SubSeq> subseqs;
  std::vector<std::size_t> permutation;

  /// m x m one-hot ground truth, row = presented slot.
  [[nodiscard]] Mat one_hot() const;
};

/// Uniform random permutation of [0, m) from the seeded generator.
std::vector<std::size_t> random_permutation(std::size_t m, std::uint64_t seed);

ShuffledCollection shuffle_with_labels(std::vector<SubSeq> subseqs, std::uint64_t seed);

/// Collection in true order (identity permutation).
ShuffledCollection in_order(std::vector<SubSeq> subseqs);

/// Rebuilds the window rows covered by the sub-sequences.
Mat unshuffle(const ShuffledCollection& c, std::size_t window_length);

}  // namespace sten
