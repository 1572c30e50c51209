// SPDX-License-Identifier: Apache-2.0
//
// Trainable encoder (GRU + order head), frozen random projector, and the
// operations that apply them to sub-sequences and windows.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sten/gru.hpp"
#include "sten/matrix.hpp"
#include "sten/windowing.hpp"

namespace sten {

enum class TrainMode { full, otn_only, dsn_only, dsn_plus_ep };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& s);

[[nodiscard]] constexpr bool uses_order_branch(TrainMode m) {
  return m == TrainMode::full || m == TrainMode::otn_only;
}
[[nodiscard]] constexpr bool uses_distance_branch(TrainMode m) { return m != TrainMode::otn_only; }
[[nodiscard]] constexpr bool uses_ep_head(TrainMode m) { return m == TrainMode::dsn_plus_ep; }

/// Architecture-level settings shared by training, scoring and checkpoints.
struct NetworkShape {
  std::size_t input_dim = 1;
  std::size_t d_model = 256;
  SubSeqLayout layout;
  TrainMode mode = TrainMode::full;
  bool separate_towers = false;
  bool normalize_embeddings = false;

  [[nodiscard]] std::size_t window_length() const { return layout.window_length(); }
};

template <class M>
struct PhiBlocks {
  GruBlocks<M> gru;      // sub-sequence encoder; also the window encoder when towers are shared
  GruBlocks<M> seq_gru;  // window encoder when towers are separate, empty otherwise
  M head_w, head_b;      // order head: m x d_model, m x 1
  M ep_w, ep_b;          // next-step head: D x d_model, D x 1 (EP ablation only)

  template <class F, class... S>
  static void visit(F&& f, S&&... s) {
    GruBlocks<M>::visit([&](const std::string& n, auto&&... b) { f("gru." + n, b...); }, s.gru...);
    GruBlocks<M>::visit([&](const std::string& n, auto&&... b) { f("seq_gru." + n, b...); }, s.seq_gru...);
    f(std::string("head_w"), s.head_w...);
    f(std::string("head_b"), s.head_b...);
    f(std::string("ep_w"), s.ep_w...);
    f(std::string("ep_b"), s.ep_b...);
  }

  [[nodiscard]] bool has_separate_towers() const { return seq_gru.w_z.size() > 0; }
  [[nodiscard]] const GruBlocks<M>& sequence_gru() const { return has_separate_towers() ? seq_gru : gru; }
};

using PhiParams = PhiBlocks<Matrix>;
using PhiWeights = PhiBlocks<Mat>;

/// Randomly initialised, never-updated projector.
struct EtaParams {
  GruParams gru;
  bool frozen = true;

  /// CRC-32 of the little-endian float bytes of every block.
  [[nodiscard]] std::uint32_t checksum() const;
};

/// Entries uniform in +-1/sqrt(d_model); blocks unused by `shape.mode` are
/// left empty.
PhiParams init_phi(const NetworkShape& shape, std::uint64_t seed);
EtaParams init_eta(const NetworkShape& shape, std::uint64_t seed);

/// Final GRU state of one sub-sequence.
Vec encode_subseq(const PhiWeights& phi, const SubSeq& s);

/// probs/labels are m x m, one row per presented slot.
struct OrderPrediction {
  Mat probs;
  Mat labels;
};

OrderPrediction order_probs(const PhiWeights& phi, const ShuffledCollection& collection);

/// Final GRU state over a whole window.
Vec embed_sequence(const GruWeights& gru, const Window& w);
Vec embed_sequence(const PhiWeights& phi, const Window& w);

/// Scales each column to unit L2 norm (norms floored at 1e-12).
Mat normalize_columns(const Mat& e);

/// Dot product; with `normalize` both vectors are scaled to unit norm first.
double pair_distance(const Vec& a, const Vec& b, bool normalize = false);

/// For each of `n` items, `k` partners j != i drawn uniformly.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n, std::uint64_t seed,
                                                              std::size_t k = 1);

}  // namespace sten
