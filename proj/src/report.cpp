// SPDX-License-Identifier: Apache-2.0
#include "sten/report.hpp"

namespace sten {

namespace {

// Metrics that are unselected or undefined on this input are left out.
void put(nlohmann::json& doc, bool selected, const std::string& key, const std::optional<double>& v) {
  if (selected && v) {
    doc[key] = *v;
  }
}

}  // namespace

void add_metrics(nlohmann::json& doc, const MetricReport& r, const MetricSelection& sel,
                 const std::string& adjustable_prefix) {
  put(doc, sel.roc, adjustable_prefix + "auc_roc", r.auc_roc);
  put(doc, sel.pr, adjustable_prefix + "auc_pr", r.auc_pr);
  if (sel.f1 && r.best_f1) {
    doc[adjustable_prefix + "f1"] = r.best_f1->f1;
    doc[adjustable_prefix + "f1_threshold"] = r.best_f1->threshold;
    doc[adjustable_prefix + "f1_precision"] = r.best_f1->precision;
    doc[adjustable_prefix + "f1_recall"] = r.best_f1->recall;
  }
  put(doc, sel.aff, "aff_precision", r.aff_precision);
  put(doc, sel.aff, "aff_recall", r.aff_recall);
  put(doc, sel.aff, "aff_f1", r.aff_f1);
  put(doc, sel.range, "r_auc_roc", r.r_auc_roc);
  put(doc, sel.range, "r_auc_pr", r.r_auc_pr);
  put(doc, sel.vus, "vus_roc", r.vus_roc);
  put(doc, sel.vus, "vus_pr", r.vus_pr);
}

nlohmann::json metrics_document(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                const EvalConfig& cfg, PointAdjustMode mode) {
  nlohmann::json doc = nlohmann::json::object();
  EvalConfig c = cfg;
  c.point_adjust = mode != PointAdjustMode::off;
  add_metrics(doc, evaluate(scores, labels, c), c.metrics, c.point_adjust ? "pa_" : "");
  if (mode == PointAdjustMode::both) {
    c.point_adjust = false;
    c.metrics.aff = c.metrics.range = c.metrics.vus = false;
    add_metrics(doc, evaluate(scores, labels, c), c.metrics, "");
  }
  doc["n"] = scores.size();
  doc["delta"] = cfg.delta;
  doc["point_adjust"] = to_string(mode);
  doc["range_width"] = cfg.range_width;
  doc["vus_max_width"] = cfg.vus_max_width;
  doc["vus_step"] = cfg.vus_step;
  return doc;
}

}  // namespace sten
