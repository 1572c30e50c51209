// SPDX-License-Identifier: Apache-2.0
#include "sten/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "sten/errors.hpp"

namespace sten {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    out.push_back(trim(line.substr(begin, comma == std::string_view::npos ? line.npos : comma - begin)));
    if (comma == std::string_view::npos) {
      break;
    }
    begin = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') {
    s.remove_prefix(1);
  }
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && !s.empty();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

}  // namespace

void MultivariateSeries::validate() const {
  if (values.rows() < 1 || values.cols() < 1) {
    throw DataError("series must have at least one row and one column");
  }
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    if (!values.row(t).allFinite()) {
      throw DataError("non-finite value in row " + std::to_string(t + 1));
    }
  }
  if (labels && labels->size() != length()) {
    throw DataError("label count " + std::to_string(labels->size()) + " != series length " +
                    std::to_string(length()));
  }
  if (!dim_names.empty() && dim_names.size() != dims()) {
    throw DataError("dimension name count does not match column count");
  }
}

MultivariateSeries read_csv(std::istream& in, const CsvOptions& opts) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::optional<std::size_t> label_idx;
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> labels;
  std::size_t width = 0;
  bool saw_header = !opts.has_header;

  auto resolve_label_without_header = [&](std::size_t ncols) {
    if (opts.has_header || !opts.label_column) {
      return;
    }
    if (*opts.label_column == "last") {
      label_idx = ncols - 1;
      return;
    }
    std::size_t idx = 0;
    const auto& s = *opts.label_column;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), idx);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size()) {
      if (idx >= ncols) {
        throw DataError("label column index " + s + " out of range");
      }
      label_idx = idx;
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto fields = split_fields(line);
    if (!saw_header) {
      saw_header = true;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        header.emplace_back(fields[i]);
        if (opts.label_column && fields[i] == *opts.label_column) {
          label_idx = i;
        }
      }
      width = fields.size();
      continue;
    }
    if (width == 0) {
      width = fields.size();
      resolve_label_without_header(width);
    }
    if (fields.size() != width) {
      throw DataError("row " + std::to_string(rows.size() + 1) + " (line " + std::to_string(line_no) +
                      "): expected " + std::to_string(width) + " fields, got " +
                      std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(width);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      double v = 0.0;
      if (!parse_double(fields[i], v)) {
        throw DataError("row " + std::to_string(rows.size() + 1) + " (line " + std::to_string(line_no) +
                        "): cannot parse '" + std::string(fields[i]) + "'");
      }
      if (label_idx && i == *label_idx) {
        if (v != 0.0 && v != 1.0) {
          throw DataError("row " + std::to_string(rows.size() + 1) + ": label must be 0 or 1");
        }
        labels.push_back(v == 1.0 ? 1 : 0);
        continue;
      }
      if (!std::isfinite(v)) {
        throw DataError("row " + std::to_string(rows.size() + 1) + " (line " + std::to_string(line_no) +
                        "): non-finite value '" + std::string(fields[i]) + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw DataError("csv contains no data rows");
  }
  const std::size_t dims = rows[0].size();
  if (dims == 0) {
    throw DataError("csv contains no value columns");
  }
  MultivariateSeries s;
  s.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dims));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t j = 0; j < dims; ++j) {
      s.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    }
  }
  if (label_idx) {
    s.labels = std::move(labels);
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!label_idx || i != *label_idx) {
      s.dim_names.push_back(header[i]);
    }
  }
  s.validate();
  return s;
}

MultivariateSeries load_csv(const std::filesystem::path& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  return read_csv(in, opts);
}

void write_csv(std::ostream& out, const MultivariateSeries& series) {
  for (std::size_t j = 0; j < series.dims(); ++j) {
    if (j > 0) {
      out << ',';
    }
    out << (series.dim_names.empty() ? "x" + std::to_string(j) : series.dim_names[j]);
  }
  if (series.labels) {
    out << ",label";
  }
  out << '\n';
  for (std::size_t t = 0; t < series.length(); ++t) {
    for (std::size_t j = 0; j < series.dims(); ++j) {
      if (j > 0) {
        out << ',';
      }
      out << format_double(series.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
    }
    if (series.labels) {
      out << ',' << static_cast<int>((*series.labels)[t]);
    }
    out << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const MultivariateSeries& series) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  write_csv(out, series);
  if (!out) {
    throw DataError("write failed for " + path.string());
  }
}

NormStats zscore_fit(const MultivariateSeries& train) {
  if (train.length() < 2) {
    throw DataError("zscore_fit needs at least two rows");
  }
  NormStats stats;
  const double n = static_cast<double>(train.length());
  for (Eigen::Index j = 0; j < train.values.cols(); ++j) {
    const double mean = train.values.col(j).sum() / n;
    const double var = (train.values.col(j).array() - mean).square().sum() / n;
    stats.mean.push_back(mean);
    stats.stddev.push_back(std::max(std::sqrt(var), NormStats::kStdFloor));
  }
  return stats;
}

MultivariateSeries zscore_apply(const MultivariateSeries& series, const NormStats& stats) {
  if (stats.mean.size() != series.dims() || stats.stddev.size() != series.dims()) {
    throw DataError("normalization stats have " + std::to_string(stats.mean.size()) +
                    " dims, series has " + std::to_string(series.dims()));
  }
  MultivariateSeries out = series;
  for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    const double sd = std::max(stats.stddev[k], NormStats::kStdFloor);
    out.values.col(j) = (out.values.col(j).array() - stats.mean[k]) / sd;
  }
  return out;
}

}  // namespace sten
