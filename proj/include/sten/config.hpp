// SPDX-License-Identifier: Apache-2.0
//
// Flat `key = value` run configuration shared by every command.
//
// Values are applied in order, so loading a file and then applying flag
// overrides gives flag > file > default. Unknown keys and malformed values
// raise ConfigError. Derived quantities (window length, sub-sequence stride,
// range widths) are resolved by finalize().
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sten/metrics.hpp"
#include "sten/scoring.hpp"
#include "sten/synth.hpp"
#include "sten/training.hpp"

namespace sten {

enum class PointAdjustMode { on, off, both };

struct RunConfig {
  std::uint64_t seed = 0;
  SynthConfig synth;
  TrainConfig train;
  ScoreConfig score;
  EvalConfig eval;
  PointAdjustMode point_adjust = PointAdjustMode::on;

  // Unset means "derive": r = l, L = l + (m - 1) r, widths = l.
  std::optional<std::size_t> window;
  std::optional<std::size_t> sub_stride;
  std::optional<double> range_width;
  std::optional<double> vus_max_width;

  /// Throws ConfigError for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);

  /// Parses `key = value` lines; `#` starts a comment.
  void apply(std::istream& in, const std::string& source = "config");
  void apply_file(const std::filesystem::path& path);

  /// Resolves derived values, propagates the master seed and validates.
  void finalize();

  /// One `key = value` line per schema key, in schema order.
  [[nodiscard]] std::string echo() const;
};

/// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

/// Training configuration as `key=value` lines (round-trips through
/// train_config_from_text()).
std::string train_config_to_text(const TrainConfig& cfg);
TrainConfig train_config_from_text(std::string_view text);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

PointAdjustMode point_adjust_from_string(std::string_view s);
std::string to_string(PointAdjustMode m);

/// "all" or a comma list of roc, pr, f1, aff, range, vus.
MetricSelection metric_selection_from_string(std::string_view s);

}  // namespace sten
