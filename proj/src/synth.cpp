// SPDX-License-Identifier: Apache-2.0
#include "sten/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sten/errors.hpp"
#include "sten/rng.hpp"

namespace sten {

std::string to_string(AnomalyType t) {
  switch (t) {
    case AnomalyType::spike:
      return "spike";
    case AnomalyType::level_shift:
      return "level_shift";
    case AnomalyType::frequency_shift:
      return "frequency_shift";
  }
  return "unknown";
}

AnomalyType anomaly_type_from_string(const std::string& s) {
  if (s == "spike") {
    return AnomalyType::spike;
  }
  if (s == "level_shift") {
    return AnomalyType::level_shift;
  }
  if (s == "frequency_shift") {
    return AnomalyType::frequency_shift;
  }
  throw ConfigError("unknown anomaly type '" + s + "'");
}

namespace {

struct Component {
  double amplitude;
  double period;
  double phase;
};

std::vector<std::vector<Component>> draw_components(const SynthConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> period(cfg.period_min, cfg.period_max);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::vector<std::vector<Component>> out(cfg.dims);
  for (auto& dim : out) {
    for (std::size_t k = 0; k < cfg.components; ++k) {
      dim.push_back(Component{amp(rng), period(rng), phase(rng)});
    }
  }
  return out;
}

double base_value(const std::vector<Component>& comps, double t, double freq_scale) {
  double v = 0.0;
  for (const Component& c : comps) {
    v += c.amplitude * std::sin(2.0 * std::numbers::pi * freq_scale * t / c.period + c.phase);
  }
  return v;
}

std::vector<std::size_t> draw_lengths(const SynthConfig& cfg, std::mt19937_64& rng) {
  const auto target = static_cast<std::size_t>(std::llround(cfg.anomaly_rate * static_cast<double>(cfg.n_test)));
  std::vector<std::size_t> lengths;
  if (target == 0) {
    return lengths;
  }
  if (target < cfg.segment_min) {
    throw ConfigError("anomaly rate yields " + std::to_string(target) +
                      " anomalous points, fewer than the minimum segment length");
  }
  std::uniform_int_distribution<std::size_t> len(cfg.segment_min, cfg.segment_max);
  std::size_t total = 0;
  while (total < target) {
    std::size_t l = std::min(len(rng), target - total);
    l = std::max(l, cfg.segment_min);
    lengths.push_back(l);
    total += l;
  }
  if (total + lengths.size() - 1 > cfg.n_test) {
    throw ConfigError("anomaly segments do not fit into the test split");
  }
  return lengths;
}

}  // namespace

SynthData synth_generate(const SynthConfig& cfg) {
  if (cfg.dims == 0 || cfg.n_train < 2 || cfg.n_test < 1 || cfg.components == 0) {
    throw ConfigError("synth: dims, components >= 1, n_train >= 2 and n_test >= 1 required");
  }
  if (cfg.anomaly_rate < 0.0 || cfg.anomaly_rate >= 1.0) {
    throw ConfigError("synth: anomaly_rate must be in [0, 1)");
  }
  if (cfg.segment_min == 0 || cfg.segment_min > cfg.segment_max) {
    throw ConfigError("synth: need 1 <= segment_min <= segment_max");
  }
  if (cfg.anomaly_rate > 0.0 && cfg.anomaly_types.empty()) {
    throw ConfigError("synth: no anomaly types given");
  }
  if (!(cfg.period_min > 0.0) || cfg.period_min > cfg.period_max || cfg.noise_sigma < 0.0) {
    throw ConfigError("synth: invalid period range or noise level");
  }

  std::mt19937_64 signal_rng(derive_seed(cfg.seed, "synth.signal"));
  std::mt19937_64 noise_rng(derive_seed(cfg.seed, "synth.noise"));
  std::mt19937_64 anomaly_rng(derive_seed(cfg.seed, "synth.anomaly"));
  const auto comps = draw_components(cfg, signal_rng);
  std::normal_distribution<double> noise(0.0, 1.0);

  const auto rows = [&](std::size_t n, std::size_t t0) {
    Mat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cfg.dims));
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < cfg.dims; ++j) {
        m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
            base_value(comps[j], static_cast<double>(t0 + t), 1.0) + cfg.noise_sigma * noise(noise_rng);
      }
    }
    return m;
  };

  SynthData out;
  out.train.values = rows(cfg.n_train, 0);
  out.train.labels = std::vector<std::uint8_t>(cfg.n_train, 0);
  out.test_clean = rows(cfg.n_test, cfg.n_train);
  out.test.values = out.test_clean;
  out.test.labels = std::vector<std::uint8_t>(cfg.n_test, 0);

  // Segment placement: lengths first, then the free timestamps are split into
  // k+1 gaps with every interior gap >= 1.
  const auto lengths = draw_lengths(cfg, anomaly_rng);
  if (!lengths.empty()) {
    std::size_t used = 0;
    for (std::size_t l : lengths) {
      used += l;
    }
    const std::size_t k = lengths.size();
    const std::size_t spare = cfg.n_test - used - (k - 1);
    std::uniform_int_distribution<std::size_t> cut(0, spare);
    std::vector<std::size_t> cuts(k);
    for (auto& c : cuts) {
      c = cut(anomaly_rng);
    }
    std::sort(cuts.begin(), cuts.end());
    std::uniform_int_distribution<std::size_t> pick_type(0, cfg.anomaly_types.size() - 1);
    std::bernoulli_distribution coin(0.5);
    std::size_t cursor = 1;  // next free timestamp
    std::size_t prev_cut = 0;
    for (std::size_t i = 0; i < k; ++i) {
      cursor += (cuts[i] - prev_cut) + (i > 0 ? 1 : 0);
      prev_cut = cuts[i];
      AnomalySegment seg;
      seg.start = cursor;
      seg.end = cursor + lengths[i] - 1;
      seg.type = cfg.anomaly_types[pick_type(anomaly_rng)];
      for (std::size_t j = 0; j < cfg.dims; ++j) {
        if (coin(anomaly_rng)) {
          seg.dims.push_back(j);
        }
      }
      if (seg.dims.empty()) {
        seg.dims.push_back(std::uniform_int_distribution<std::size_t>(0, cfg.dims - 1)(anomaly_rng));
      }
      out.segments.push_back(seg);
      cursor = seg.end + 1;
    }
  }

  for (const AnomalySegment& seg : out.segments) {
    const double sign = std::bernoulli_distribution(0.5)(anomaly_rng) ? 1.0 : -1.0;
    for (std::size_t t = seg.start; t <= seg.end; ++t) {
      const auto row = static_cast<Eigen::Index>(t - 1);
      (*out.test.labels)[t - 1] = 1;
      for (std::size_t j : seg.dims) {
        const auto col = static_cast<Eigen::Index>(j);
        double& v = out.test.values(row, col);
        switch (seg.type) {
          case AnomalyType::spike: {
            const double s = std::bernoulli_distribution(0.5)(anomaly_rng) ? 1.0 : -1.0;
            v += s * cfg.spike_amplitude * cfg.noise_sigma;
            break;
          }
          case AnomalyType::level_shift:
            v += sign * cfg.level_shift;
            break;
          case AnomalyType::frequency_shift: {
            const double tt = static_cast<double>(cfg.n_train + t - 1);
            v += base_value(comps[j], tt, cfg.frequency_factor) - base_value(comps[j], tt, 1.0);
            break;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace sten
