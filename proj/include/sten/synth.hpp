// SPDX-License-Identifier: Apache-2.0
//
// Synthetic multivariate benchmark: per-dimension sums of sinusoids plus
// Gaussian noise, with labeled anomaly segments injected into the test split.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sten/series.hpp"

namespace sten {

enum class AnomalyType { spike, level_shift, frequency_shift };

std::string to_string(AnomalyType t);
AnomalyType anomaly_type_from_string(const std::string& s);

struct SynthConfig {
  std::size_t n_train = 20000;
  std::size_t n_test = 10000;
  std::size_t dims = 5;
  std::size_t components = 2;  // sinusoids per dimension
  double period_min = 25.0;
  double period_max = 100.0;
  double noise_sigma = 0.1;
  std::vector<AnomalyType> anomaly_types{AnomalyType::spike, AnomalyType::level_shift,
                                         AnomalyType::frequency_shift};
  double anomaly_rate = 0.05;
  std::size_t segment_min = 20;
  std::size_t segment_max = 80;
  double spike_amplitude = 8.0;  // multiples of noise_sigma
  double level_shift = 1.0;      // absolute offset
  double frequency_factor = 3.0;
  std::uint64_t seed = 0;
};

struct AnomalySegment {
  std::size_t start = 1;  // inclusive, 1-based test timestamp
  std::size_t end = 1;    // inclusive
  AnomalyType type = AnomalyType::spike;
  std::vector<std::size_t> dims;
};

struct SynthData {
  MultivariateSeries train;
  MultivariateSeries test;
  Mat test_clean;  // test values without injected anomalies (noise included)
  std::vector<AnomalySegment> segments;
};

/// Throws ConfigError when the anomaly rate cannot be met with the segment
/// length range.
SynthData synth_generate(const SynthConfig& cfg);

}  // namespace sten
