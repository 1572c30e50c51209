// SPDX-License-Identifier: Apache-2.0
//
// Flat JSON metrics document.
//
// Point-adjusted values of auc_roc, auc_pr and best_f1 carry a `pa_` prefix;
// unadjusted ones are unprefixed. Affiliation, range-AUC and VUS are always
// computed on raw scores. Undefined metrics are left out.
#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "sten/config.hpp"
#include "sten/metrics.hpp"

namespace sten {

/// Adds the selected, defined fields of `r` to `doc`, prefixing the point-adjustable ones.
void add_metrics(nlohmann::json& doc, const MetricReport& r, const MetricSelection& sel,
                 const std::string& adjustable_prefix);

nlohmann::json metrics_document(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                const EvalConfig& cfg, PointAdjustMode mode);

}  // namespace sten
