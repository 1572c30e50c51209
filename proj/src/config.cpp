// SPDX-License-Identifier: Apache-2.0
#include "sten/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <type_traits>

#include "sten/errors.hpp"

namespace sten {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "' (expected " +
                    std::string(expected) + ")");
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view v) { return static_cast<std::size_t>(parse_u64(key, v)); }

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    bad_value(key, v, "a finite number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") {
    return true;
  }
  if (v == "false" || v == "0" || v == "off" || v == "no") {
    return false;
  }
  bad_value(key, v, "true/false");
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(trim(v.substr(0, comma)));
    if (comma == std::string_view::npos) {
      break;
    }
    v.remove_prefix(comma + 1);
  }
  return out;
}

std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
std::string fmt_opt(const std::optional<T>& v) {
  if (!v) {
    return "auto";
  }
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(*v);
  } else {
    return std::to_string(*v);
  }
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define STEN_SIZE(k, field)                                                                            \
  Key {                                                                                                \
    k, [](RunConfig& c, std::string_view key, std::string_view v) { c.field = parse_size(key, v); }, \
        [](const RunConfig& c) { return fmt(c.field); }                                                \
  }
#define STEN_DOUBLE(k, field)                                                                            \
  Key {                                                                                                  \
    k, [](RunConfig& c, std::string_view key, std::string_view v) { c.field = parse_double(key, v); }, \
        [](const RunConfig& c) { return format_double(c.field); }                                        \
  }
#define STEN_BOOL(k, field)                                                                            \
  Key {                                                                                                \
    k, [](RunConfig& c, std::string_view key, std::string_view v) { c.field = parse_bool(key, v); }, \
        [](const RunConfig& c) { return fmt(c.field); }                                                \
  }

std::optional<std::size_t> parse_auto_size(std::string_view key, std::string_view v) {
  if (v == "auto") {
    return std::nullopt;
  }
  return parse_size(key, v);
}

std::optional<double> parse_auto_double(std::string_view key, std::string_view v) {
  if (v == "auto") {
    return std::nullopt;
  }
  return parse_double(key, v);
}

std::string metrics_text(const MetricSelection& m) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (on) {
      out += out.empty() ? "" : ",";
      out += name;
    }
  };
  add(m.roc, "roc");
  add(m.pr, "pr");
  add(m.f1, "f1");
  add(m.aff, "aff");
  add(m.range, "range");
  add(m.vus, "vus");
  return out;
}

const std::vector<Key>& schema() {
  static const std::vector<Key> keys = {
      Key{"seed", [](RunConfig& c, std::string_view k, std::string_view v) { c.seed = parse_u64(k, v); },
          [](const RunConfig& c) { return std::to_string(c.seed); }},
      // synthetic data
      STEN_SIZE("n_train", synth.n_train),
      STEN_SIZE("n_test", synth.n_test),
      STEN_SIZE("dims", synth.dims),
      STEN_SIZE("components", synth.components),
      STEN_DOUBLE("period_min", synth.period_min),
      STEN_DOUBLE("period_max", synth.period_max),
      STEN_DOUBLE("noise_sigma", synth.noise_sigma),
      Key{"anomaly_types",
          [](RunConfig& c, std::string_view k, std::string_view v) {
            std::vector<AnomalyType> types;
            for (std::string_view item : split_list(v)) {
              try {
                types.push_back(anomaly_type_from_string(std::string(item)));
              } catch (const std::exception&) {
                bad_value(k, v, "a comma list of spike, level_shift, frequency_shift");
              }
            }
            c.synth.anomaly_types = std::move(types);
          },
          [](const RunConfig& c) {
            std::string out;
            for (AnomalyType t : c.synth.anomaly_types) {
              out += (out.empty() ? "" : ",") + to_string(t);
            }
            return out;
          }},
      STEN_DOUBLE("anomaly_rate", synth.anomaly_rate),
      STEN_SIZE("segment_min", synth.segment_min),
      STEN_SIZE("segment_max", synth.segment_max),
      STEN_DOUBLE("spike_amplitude", synth.spike_amplitude),
      STEN_DOUBLE("level_shift", synth.level_shift),
      STEN_DOUBLE("frequency_factor", synth.frequency_factor),
      // training
      Key{"window", [](RunConfig& c, std::string_view k, std::string_view v) { c.window = parse_auto_size(k, v); },
          [](const RunConfig& c) { return fmt_opt(c.window); }},
      STEN_SIZE("train_stride", train.train_stride),
      STEN_SIZE("sub_length", train.layout.length),
      Key{"sub_stride",
          [](RunConfig& c, std::string_view k, std::string_view v) { c.sub_stride = parse_auto_size(k, v); },
          [](const RunConfig& c) { return fmt_opt(c.sub_stride); }},
      STEN_SIZE("sub_count", train.layout.count),
      STEN_SIZE("d_model", train.d_model),
      STEN_DOUBLE("alpha", train.alpha),
      STEN_DOUBLE("lr", train.lr),
      STEN_SIZE("epochs", train.epochs),
      STEN_SIZE("batch_size", train.batch_size),
      Key{"eta_seed",
          [](RunConfig& c, std::string_view k, std::string_view v) {
            if (v == "auto") {
              c.train.eta_seed.reset();
            } else {
              c.train.eta_seed = parse_u64(k, v);
            }
          },
          [](const RunConfig& c) { return fmt_opt(c.train.eta_seed); }},
      Key{"mode",
          [](RunConfig& c, std::string_view k, std::string_view v) {
            try {
              c.train.mode = train_mode_from_string(std::string(v));
            } catch (const std::exception&) {
              bad_value(k, v, "full, otn_only, dsn_only or dsn_plus_ep");
            }
          },
          [](const RunConfig& c) { return to_string(c.train.mode); }},
      STEN_BOOL("normalize_embeddings", train.normalize_embeddings),
      STEN_BOOL("separate_towers", train.separate_towers),
      STEN_SIZE("k_refs", train.k_refs),
      // scoring
      STEN_DOUBLE("beta", score.beta),
      STEN_SIZE("test_stride", score.stride),
      STEN_DOUBLE("delta", score.delta),
      STEN_DOUBLE("eps", score.eps),
      STEN_SIZE("score_k_refs", score.k_refs),
      STEN_BOOL("per_subseq_denominator", score.per_subseq_denominator),
      Key{"ref_source",
          [](RunConfig& c, std::string_view k, std::string_view v) {
            if (v == "test") {
              c.score.ref_source = RefSource::test;
            } else if (v == "train") {
              c.score.ref_source = RefSource::train;
            } else {
              bad_value(k, v, "test or train");
            }
          },
          [](const RunConfig& c) { return std::string(c.score.ref_source == RefSource::test ? "test" : "train"); }},
      // evaluation
      Key{"point_adjust",
          [](RunConfig& c, std::string_view, std::string_view v) { c.point_adjust = point_adjust_from_string(v); },
          [](const RunConfig& c) { return to_string(c.point_adjust); }},
      Key{"range_width",
          [](RunConfig& c, std::string_view k, std::string_view v) { c.range_width = parse_auto_double(k, v); },
          [](const RunConfig& c) { return fmt_opt(c.range_width); }},
      Key{"vus_max_width",
          [](RunConfig& c, std::string_view k, std::string_view v) { c.vus_max_width = parse_auto_double(k, v); },
          [](const RunConfig& c) { return fmt_opt(c.vus_max_width); }},
      STEN_DOUBLE("vus_step", eval.vus_step),
      Key{"metrics",
          [](RunConfig& c, std::string_view, std::string_view v) { c.eval.metrics = metric_selection_from_string(v); },
          [](const RunConfig& c) { return metrics_text(c.eval.metrics); }},
  };
  return keys;
}

#undef STEN_SIZE
#undef STEN_DOUBLE
#undef STEN_BOOL

constexpr const char* kTrainKeys[] = {"seed",     "window",     "train_stride", "sub_length", "sub_stride",
                                      "sub_count", "d_model",   "alpha",        "lr",         "epochs",
                                      "batch_size", "eta_seed", "mode",         "normalize_embeddings",
                                      "separate_towers", "k_refs"};

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, ptr};
}

PointAdjustMode point_adjust_from_string(std::string_view s) {
  if (s == "on") {
    return PointAdjustMode::on;
  }
  if (s == "off") {
    return PointAdjustMode::off;
  }
  if (s == "both") {
    return PointAdjustMode::both;
  }
  bad_value("point_adjust", s, "on, off or both");
}

std::string to_string(PointAdjustMode m) {
  switch (m) {
    case PointAdjustMode::on:
      return "on";
    case PointAdjustMode::off:
      return "off";
    case PointAdjustMode::both:
      return "both";
  }
  return "on";
}

MetricSelection metric_selection_from_string(std::string_view s) {
  if (trim(s) == "all") {
    return MetricSelection{};
  }
  MetricSelection m{false, false, false, false, false, false};
  for (std::string_view item : split_list(s)) {
    if (item == "roc") {
      m.roc = true;
    } else if (item == "pr") {
      m.pr = true;
    } else if (item == "f1") {
      m.f1 = true;
    } else if (item == "aff") {
      m.aff = true;
    } else if (item == "range") {
      m.range = true;
    } else if (item == "vus") {
      m.vus = true;
    } else {
      bad_value("metrics", s, "all or a comma list of roc, pr, f1, aff, range, vus");
    }
  }
  return m;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const Key& k : schema()) {
      out.push_back(k.name);
    }
    return out;
  }();
  return names;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const Key& k : schema()) {
    if (k.name == key) {
      k.set(*this, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::apply(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) {
      v = v.substr(0, hash);
    }
    v = trim(v);
    if (v.empty()) {
      continue;
    }
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      set(v.substr(0, eq), v.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file " + path.string());
  }
  apply(in, path.string());
}

void RunConfig::finalize() {
  SubSeqLayout& lay = train.layout;
  if (lay.length == 0 || lay.count == 0) {
    throw ConfigError("sub_length and sub_count must be >= 1");
  }
  lay.stride = sub_stride.value_or(lay.length);
  train.window_length = window.value_or(lay.length + (lay.count - 1) * lay.stride);
  train.seed = seed;
  score.seed = seed;
  synth.seed = seed;
  eval.delta = score.delta;
  eval.point_adjust = point_adjust != PointAdjustMode::off;
  eval.range_width = range_width.value_or(static_cast<double>(lay.length));
  eval.vus_max_width = vus_max_width.value_or(static_cast<double>(lay.length));
  if (eval.range_width < 0.0 || eval.vus_max_width < 0.0) {
    throw ConfigError("range_width and vus_max_width must be >= 0");
  }
  if (!(eval.vus_step > 0.0)) {
    throw ConfigError("vus_step must be > 0");
  }
  train.validate();
  score.validate();
}

std::string RunConfig::echo() const {
  std::string out;
  for (const Key& k : schema()) {
    out += k.name + " = " + k.get(*this) + "\n";
  }
  return out;
}

std::string train_config_to_text(const TrainConfig& cfg) {
  RunConfig rc;
  rc.seed = cfg.seed;
  rc.train = cfg;
  rc.window = cfg.window_length;
  rc.sub_stride = cfg.layout.stride;
  std::string out;
  for (const char* name : kTrainKeys) {
    for (const Key& k : schema()) {
      if (k.name == name) {
        out += k.name + "=" + k.get(rc) + "\n";
      }
    }
  }
  return out;
}

TrainConfig train_config_from_text(std::string_view text) {
  RunConfig rc;
  std::istringstream in{std::string(text)};
  rc.apply(in, "train config");
  rc.finalize();
  return rc.train;
}

}  // namespace sten
