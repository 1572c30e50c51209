// SPDX-License-Identifier: Apache-2.0
#include "sten/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sten/errors.hpp"
#include "sten/scoring.hpp"

namespace sten {

EventSet events_from_binary(std::span<const std::uint8_t> labels) {
  EventSet out;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] == 0) {
      continue;
    }
    if (!out.empty() && out.back().end == t) {
      out.back().end = t + 1;
    } else {
      out.push_back(Event{t + 1, t + 1});
    }
  }
  return out;
}

void check_events(const EventSet& events, std::size_t n) {
  std::size_t last_end = 0;
  for (const Event& e : events) {
    if (e.start < 1 || e.start > e.end || e.end > n) {
      throw std::invalid_argument("event outside the timeline or with start > end");
    }
    if (e.start <= last_end) {
      throw std::invalid_argument("events overlap or are unsorted");
    }
    last_end = e.end;
  }
}

std::vector<double> point_adjust(std::span<const double> scores, const EventSet& truth) {
  check_events(truth, scores.size());
  std::vector<double> out(scores.begin(), scores.end());
  for (const Event& e : truth) {
    const auto first = out.begin() + static_cast<std::ptrdiff_t>(e.start - 1);
    const auto last = out.begin() + static_cast<std::ptrdiff_t>(e.end);
    const double hi = *std::max_element(first, last);
    std::fill(first, last, hi);
  }
  return out;
}

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DataError("scores and labels differ in length (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

std::vector<double> to_weights(std::span<const std::uint8_t> labels) {
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    w[i] = labels[i] != 0 ? 1.0 : 0.0;
  }
  return w;
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

CurveAreas weighted_curve_areas(std::span<const double> scores, std::span<const double> positive_weight) {
  check_lengths(scores.size(), positive_weight.size());
  double pos = 0.0;
  double neg = 0.0;
  for (double w : positive_weight) {
    pos += w;
    neg += 1.0 - w;
  }
  const auto idx = descending_order(scores);
  double tp = 0.0;
  double fp = 0.0;
  double roc = 0.0;
  double pr = 0.0;
  std::size_t k = 0;
  while (k < idx.size()) {
    const double thr = scores[idx[k]];
    const double tp_prev = tp;
    const double fp_prev = fp;
    while (k < idx.size() && scores[idx[k]] == thr) {
      tp += positive_weight[idx[k]];
      fp += 1.0 - positive_weight[idx[k]];
      ++k;
    }
    roc += (fp - fp_prev) * (tp + tp_prev) / 2.0;
    if (pos > 0.0) {
      pr += (tp - tp_prev) / pos * (tp / (tp + fp));
    }
  }
  CurveAreas out;
  if (pos > 0.0 && neg > 0.0) {
    out.roc = roc / (pos * neg);
  }
  if (pos > 0.0) {
    out.pr = pr;
  }
  return out;
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size());
  return weighted_curve_areas(scores, to_weights(labels)).roc;
}

std::optional<double> pr_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size());
  return weighted_curve_areas(scores, to_weights(labels)).pr;
}

std::optional<F1Result> best_f1(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size());
  const auto pos = static_cast<double>(std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; }));
  if (pos == 0.0) {
    return std::nullopt;
  }
  const auto idx = descending_order(scores);
  double tp = 0.0;
  double fp = 0.0;
  std::optional<F1Result> best;
  std::size_t k = 0;
  while (k < idx.size()) {
    const double thr = scores[idx[k]];
    while (k < idx.size() && scores[idx[k]] == thr) {
      (labels[idx[k]] != 0 ? tp : fp) += 1.0;
      ++k;
    }
    const double f1 = 2.0 * tp / (2.0 * tp + fp + (pos - tp));
    if (!best || f1 >= best->f1) {
      best = F1Result{f1, thr, tp / (tp + fp), tp / pos};
    }
  }
  return best;
}

AffiliationResult affiliation(const EventSet& pred, const EventSet& truth, std::size_t n) {
  if (truth.empty()) {
    throw DataError("affiliation needs at least one ground-truth event");
  }
  check_events(truth, n);
  check_events(pred, n);
  const std::size_t k = truth.size();

  // Zone j spans [zone_lo[j], zone_hi[j]].
  std::vector<std::size_t> zone_lo(k);
  std::vector<std::size_t> zone_hi(k);
  zone_lo[0] = 1;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    // x joins zone j while x - e_j <= s_{j+1} - x.
    const std::size_t split = (truth[j].end + truth[j + 1].start) / 2;
    zone_hi[j] = split;
    zone_lo[j + 1] = split + 1;
  }
  zone_hi[k - 1] = n;

  std::vector<std::vector<std::size_t>> zone_pred(k);
  {
    std::size_t j = 0;
    for (const Event& e : pred) {
      for (std::size_t t = e.start; t <= e.end; ++t) {
        while (t > zone_hi[j]) {
          ++j;
        }
        zone_pred[j].push_back(t);
      }
    }
  }

  double precision_sum = 0.0;
  std::size_t precision_zones = 0;
  double recall_sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t lo = zone_lo[j];
    const std::size_t hi = zone_hi[j];
    const std::size_t s = truth[j].start;
    const std::size_t e = truth[j].end;
    const auto zone_size = static_cast<double>(hi - lo + 1);
    const auto& pj = zone_pred[j];
    if (pj.empty()) {
      continue;
    }

    // Points of the zone at distance >= d from the event, in closed form.
    auto count_at_least = [&](std::size_t d) -> double {
      if (d == 0) {
        return zone_size;
      }
      const std::size_t left = s >= lo + d ? s - d - lo + 1 : 0;
      const std::size_t right = hi >= e + d ? hi - (e + d) + 1 : 0;
      return static_cast<double>(left + right);
    };
    double zone_precision = 0.0;
    for (std::size_t t : pj) {
      const std::size_t d = t < s ? s - t : (t > e ? t - e : 0);
      zone_precision += count_at_least(d) / zone_size;
    }
    precision_sum += zone_precision / static_cast<double>(pj.size());
    ++precision_zones;

    // Distance of every zone point to the nearest prediction of the zone.
    std::vector<std::size_t> dist(hi - lo + 1);
    std::size_t p = 0;
    for (std::size_t x = lo; x <= hi; ++x) {
      while (p + 1 < pj.size() && pj[p + 1] <= x) {
        ++p;
      }
      std::size_t d = pj[p] > x ? pj[p] - x : x - pj[p];
      if (p + 1 < pj.size()) {
        d = std::min(d, pj[p + 1] - x);
      }
      dist[x - lo] = d;
    }
    std::vector<std::size_t> sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    double zone_recall = 0.0;
    for (std::size_t y = s; y <= e; ++y) {
      const std::size_t dy = dist[y - lo];
      const auto at_least = static_cast<double>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), dy));
      zone_recall += at_least / zone_size;
    }
    recall_sum += zone_recall / static_cast<double>(e - s + 1);
  }

  AffiliationResult out;
  out.recall = recall_sum / static_cast<double>(k);
  if (precision_zones > 0) {
    out.precision = precision_sum / static_cast<double>(precision_zones);
    const double pr = *out.precision;
    out.f1 = pr + out.recall > 0.0 ? 2.0 * pr * out.recall / (pr + out.recall) : 0.0;
  }
  return out;
}

std::vector<double> range_labels(const EventSet& truth, std::size_t n, double width) {
  check_events(truth, n);
  if (width < 0.0) {
    throw ConfigError("range width must be >= 0");
  }
  constexpr auto kFar = static_cast<std::size_t>(-1);
  std::vector<std::size_t> dist(n, kFar);
  for (const Event& ev : truth) {
    for (std::size_t t = ev.start; t <= ev.end; ++t) {
      dist[t - 1] = 0;
    }
  }
  for (std::size_t t = 1; t < n; ++t) {
    if (dist[t - 1] != kFar) {
      dist[t] = std::min(dist[t], dist[t - 1] + 1);
    }
  }
  for (std::size_t t = n; t-- > 1;) {
    if (dist[t] != kFar) {
      dist[t - 1] = std::min(dist[t - 1], dist[t] + 1);
    }
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (dist[t] == 0) {
      out[t] = 1.0;
    } else if (dist[t] != kFar && width > 0.0) {
      out[t] = std::sqrt(std::max(0.0, 1.0 - static_cast<double>(dist[t]) / width));
    }
  }
  return out;
}

CurveAreas range_auc(std::span<const double> scores, const EventSet& truth, double width) {
  return weighted_curve_areas(scores, range_labels(truth, scores.size(), width));
}

CurveAreas vus(std::span<const double> scores, const EventSet& truth, double max_width, double step) {
  if (max_width < 0.0) {
    throw ConfigError("vus max width must be >= 0");
  }
  if (max_width > 0.0 && !(step > 0.0)) {
    throw ConfigError("vus grid step must be > 0");
  }
  double roc = 0.0;
  double pr = 0.0;
  bool roc_ok = true;
  bool pr_ok = true;
  std::size_t count = 0;
  for (std::size_t i = 0;; ++i) {
    const double w = static_cast<double>(i) * step;
    if (w > max_width + 1e-12 || (i > 0 && max_width == 0.0)) {
      break;
    }
    const CurveAreas a = range_auc(scores, truth, w);
    roc_ok = roc_ok && a.roc.has_value();
    pr_ok = pr_ok && a.pr.has_value();
    roc += a.roc.value_or(0.0);
    pr += a.pr.value_or(0.0);
    ++count;
  }
  CurveAreas out;
  if (roc_ok) {
    out.roc = roc / static_cast<double>(count);
  }
  if (pr_ok) {
    out.pr = pr / static_cast<double>(count);
  }
  return out;
}

MetricReport evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels, const EvalConfig& cfg) {
  check_lengths(scores.size(), labels.size());
  const EventSet truth = events_from_binary(labels);
  const std::vector<double> adjusted =
      cfg.point_adjust ? point_adjust(scores, truth) : std::vector<double>(scores.begin(), scores.end());
  MetricReport r;
  if (cfg.metrics.roc) {
    r.auc_roc = roc_auc(adjusted, labels);
  }
  if (cfg.metrics.pr) {
    r.auc_pr = pr_auc(adjusted, labels);
  }
  if (cfg.metrics.f1) {
    r.best_f1 = best_f1(adjusted, labels);
  }
  if (cfg.metrics.aff && !truth.empty()) {
    const auto predicted = events_from_binary(threshold_percentile(scores, cfg.delta));
    const AffiliationResult a = affiliation(predicted, truth, scores.size());
    r.aff_precision = a.precision;
    r.aff_recall = a.recall;
    r.aff_f1 = a.f1;
  }
  if (cfg.metrics.range) {
    const CurveAreas a = range_auc(scores, truth, cfg.range_width);
    r.r_auc_roc = a.roc;
    r.r_auc_pr = a.pr;
  }
  if (cfg.metrics.vus) {
    const CurveAreas a = vus(scores, truth, cfg.vus_max_width, cfg.vus_step);
    r.vus_roc = a.roc;
    r.vus_pr = a.pr;
  }
  return r;
}

}  // namespace sten
