// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sten/matrix.hpp"

namespace sten {

/// N x D observations (row t = timestamp t+1) with optional 0/1 labels.
struct MultivariateSeries {
  Mat values;
  std::optional<std::vector<std::uint8_t>> labels;
  std::vector<std::string> dim_names;

  [[nodiscard]] std::size_t length() const { return static_cast<std::size_t>(values.rows()); }
  [[nodiscard]] std::size_t dims() const { return static_cast<std::size_t>(values.cols()); }

  /// Throws DataError on empty data, non-finite values or label length
  /// mismatch.
  void validate() const;
};

struct CsvOptions {
  bool has_header = true;
  /// Header name of the label column ("label" by default). Without a header
  /// use "last" or a zero-based column index.
  std::optional<std::string> label_column = "label";
};

MultivariateSeries read_csv(std::istream& in, const CsvOptions& opts = {});
MultivariateSeries load_csv(const std::filesystem::path& path, const CsvOptions& opts = {});

/// Writes a header (dim names or x0..x{D-1}), values with round-trip
/// precision and a trailing `label` column when labels are present.
void write_csv(std::ostream& out, const MultivariateSeries& series);
void save_csv(const std::filesystem::path& path, const MultivariateSeries& series);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population std, floored at kStdFloor

  static constexpr double kStdFloor = 1e-8;
};

NormStats zscore_fit(const MultivariateSeries& train);
MultivariateSeries zscore_apply(const MultivariateSeries& series, const NormStats& stats);

}  // namespace sten
