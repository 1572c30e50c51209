// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "sten/networks.hpp"
#include "sten/objectives.hpp"
#include "sten/series.hpp"

namespace sten {

struct TrainConfig {
  std::size_t window_length = 100;  // L
  std::size_t train_stride = 10;    // R
  SubSeqLayout layout;              // l = r = m = 10
  std::size_t d_model = 256;
  double alpha = 1.0;
  double lr = 1e-5;
  std::size_t epochs = 5;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> eta_seed;  // derived from `seed` when absent
  TrainMode mode = TrainMode::full;
  bool normalize_embeddings = false;
  bool separate_towers = false;
  std::size_t k_refs = 1;

  /// Throws ConfigError on violated invariants (l + (m-1) r == L, etc.).
  void validate() const;

  [[nodiscard]] NetworkShape shape(std::size_t input_dim) const;
  [[nodiscard]] std::uint64_t phi_seed() const;
  [[nodiscard]] std::uint64_t resolved_eta_seed() const;
};

struct TrainedModel {
  TrainConfig config;
  std::size_t input_dim = 0;
  PhiParams phi;
  EtaParams eta;
  NormStats norm;
  std::vector<LossBreakdown> trace;  // mean loss per epoch

  [[nodiscard]] NetworkShape shape() const { return config.shape(input_dim); }
};

/// Per-epoch callback: (epoch index from 0, mean loss, permutation drawn for
/// training window 0 in that epoch).
using EpochObserver = std::function<void(std::size_t, const LossBreakdown&, const std::vector<std::size_t>&)>;

/// Seed of the sub-sequence permutation for (epoch, window).
std::uint64_t permutation_seed(const TrainConfig& cfg, std::size_t epoch, std::size_t window);

/// Joint self-supervised training. Labels in `series` are ignored.
TrainedModel train(const MultivariateSeries& series, const TrainConfig& cfg, const EpochObserver& observer = {});

/// Writes `epoch,otn,dsn,total` lines (with a header).
void write_loss_log(const std::filesystem::path& path, const std::vector<LossBreakdown>& trace);

}  // namespace sten
