// SPDX-License-Identifier: Apache-2.0
//
// Inference-time anomaly scores.
//
// Each test window is split into its m sub-sequences in true order. The
// temporal score of sub-sequence i is |Y_hat_i - Y_i|_1 divided by the
// window's order loss; the spatial score of a window is its mean squared
// distance-distillation residual against reference windows and is shared by
// all its sub-sequences. Per-timestamp scores average every covering slot.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sten/networks.hpp"
#include "sten/series.hpp"
#include "sten/training.hpp"

namespace sten {

enum class RefSource { test, train };

struct ScoreConfig {
  double beta = 1.0;
  std::size_t stride = 10;  // R_test
  double delta = 0.6;       // percent: anomalies lie above the (100 - delta)th percentile
  double eps = 1e-8;
  std::size_t k_refs = 1;
  std::uint64_t seed = 0;
  bool per_subseq_denominator = false;
  RefSource ref_source = RefSource::test;

  void validate() const;
};

/// Temporal scores of one window (m values).
std::vector<double> score_otn(const OrderPrediction& pred, double eps = 1e-8, bool per_subseq_denominator = false);

/// Mean of (d_phi - d_eta)^2 over the references; throws DataError when empty.
double score_dsn(std::span<const std::pair<double, double>> ref_distances);

/// Window-level convenience: references are (phi, eta) embedding pairs.
double score_dsn(const Vec& phi_emb, const Vec& eta_emb, std::span<const std::pair<Vec, Vec>> refs,
                 bool normalize = false);

std::vector<double> combine(std::span<const double> otn_scores, double dsn_score, double beta);

/// One scored sub-sequence slot: covers timestamps [start, start + length).
struct SlotScore {
  std::size_t start = 1;
  std::size_t length = 0;
  double score = 0.0;
  double otn = 0.0;
  double dsn = 0.0;
};

struct ScoreSeries {
  std::vector<double> score;
  std::vector<double> otn;
  std::vector<double> dsn;
  std::vector<std::size_t> coverage;

  [[nodiscard]] std::size_t size() const { return score.size(); }
};

/// Mean over covering slots; throws std::logic_error on an uncovered timestamp.
ScoreSeries aggregate_timestamps(std::span<const SlotScore> slots, std::size_t n);

/// Linear-interpolation percentile (q in [0, 100]).
double percentile(std::span<const double> values, double q);

/// 1 where score > the (100 - delta)th percentile.
std::vector<std::uint8_t> threshold_percentile(std::span<const double> scores, double delta);

/// Full scoring pass over a raw (un-normalised) test series. `train_refs` is
/// required when cfg.ref_source == RefSource::train.
ScoreSeries score_series(const TrainedModel& model, const MultivariateSeries& test, const ScoreConfig& cfg,
                         const MultivariateSeries* train_refs = nullptr);

/// `timestamp,score,score_otn,score_dsn[,label]`, one row per timestamp.
void write_scores_csv(std::ostream& out, const ScoreSeries& scores,
                      const std::optional<std::vector<std::uint8_t>>& labels);
void save_scores_csv(const std::filesystem::path& path, const ScoreSeries& scores,
                     const std::optional<std::vector<std::uint8_t>>& labels);

struct LoadedScores {
  ScoreSeries scores;
  std::optional<std::vector<std::uint8_t>> labels;
};
LoadedScores load_scores_csv(const std::filesystem::path& path);

}  // namespace sten
