// SPDX-License-Identifier: Apache-2.0
//
// Anomaly-detection evaluation: point adjustment, threshold-free curve
// metrics, best F1, affiliation precision/recall and range-AUC / VUS.
//
// Conventions used throughout: timestamps and event bounds are 1-based and
// inclusive; a point is predicted anomalous when score >= threshold; a metric
// whose denominator is empty is returned as std::nullopt.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sten {

struct Event {
  std::size_t start = 1;
  std::size_t end = 1;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Disjoint, sorted, inclusive intervals.
using EventSet = std::vector<Event>;

/// Maximal runs of non-zero entries.
EventSet events_from_binary(std::span<const std::uint8_t> labels);

/// Throws std::invalid_argument unless sorted, disjoint and within [1, n].
void check_events(const EventSet& events, std::size_t n);

/// Every score inside a truth segment becomes the segment maximum.
std::vector<double> point_adjust(std::span<const double> scores, const EventSet& truth);

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Average precision: sum_k (R_k - R_{k-1}) P_k over descending distinct thresholds.
std::optional<double> pr_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct F1Result {
  double f1 = 0.0;
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Best F1 over thresholds at each distinct score; ties go to the lower threshold.
std::optional<F1Result> best_f1(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct AffiliationResult {
  std::optional<double> precision;
  double recall = 0.0;
  std::optional<double> f1;
};

/// Discrete affiliation metrics over the timeline 1..n. Each timestamp belongs
/// to the zone of its nearest truth event (ties to the earlier event).
AffiliationResult affiliation(const EventSet& pred, const EventSet& truth, std::size_t n);

/// Buffer-smoothed labels: 1 inside an event, sqrt(1 - d/w) at distance d < w,
/// 0 beyond.
std::vector<double> range_labels(const EventSet& truth, std::size_t n, double width);

struct CurveAreas {
  std::optional<double> roc;
  std::optional<double> pr;
};

/// ROC (trapezoidal) and PR (step) areas for real-valued positive weights.
CurveAreas weighted_curve_areas(std::span<const double> scores, std::span<const double> positive_weight);

CurveAreas range_auc(std::span<const double> scores, const EventSet& truth, double width);

/// Mean of range_auc over widths 0, step, 2 step, ..., <= max_width.
CurveAreas vus(std::span<const double> scores, const EventSet& truth, double max_width, double step = 1.0);

struct MetricReport {
  std::optional<double> auc_roc;
  std::optional<double> auc_pr;
  std::optional<F1Result> best_f1;
  std::optional<double> aff_precision;
  std::optional<double> aff_recall;
  std::optional<double> aff_f1;
  std::optional<double> r_auc_roc;
  std::optional<double> r_auc_pr;
  std::optional<double> vus_roc;
  std::optional<double> vus_pr;
};

struct MetricSelection {
  bool roc = true;
  bool pr = true;
  bool f1 = true;
  bool aff = true;
  bool range = true;
  bool vus = true;
};

struct EvalConfig {
  bool point_adjust = true;  // applies to auc_roc, auc_pr and best_f1
  double delta = 0.6;        // affiliation threshold percentage
  double range_width = 10.0;
  double vus_max_width = 10.0;
  double vus_step = 1.0;
  MetricSelection metrics;
};

MetricReport evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels, const EvalConfig& cfg);

}  // namespace sten
