// SPDX-License-Identifier: Apache-2.0
//
// sten synth|train|score|eval|sweep
//
// Exit codes: 0 ok, 1 usage/config error, 2 data error, 3 numeric failure.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sten/checkpoint.hpp"
#include "sten/config.hpp"
#include "sten/errors.hpp"
#include "sten/report.hpp"
#include "sten/scoring.hpp"
#include "sten/series.hpp"
#include "sten/synth.hpp"
#include "sten/training.hpp"

namespace fs = std::filesystem;
using namespace sten;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::size_t> epochs;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> delta;
  std::optional<std::size_t> d_model;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::string> point_adjust;
  std::optional<std::string> metrics;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value config file");
  cmd->add_option("--set", c.sets, "override a config key (key=value), repeatable");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--mode", c.mode, "full | otn_only | dsn_only | dsn_plus_ep");
  cmd->add_option("--epochs", c.epochs, "training epochs");
  cmd->add_option("--alpha", c.alpha, "distance-loss weight");
  cmd->add_option("--beta", c.beta, "spatial score weight");
  cmd->add_option("--delta", c.delta, "affiliation threshold percentage");
  cmd->add_option("--d-model", c.d_model, "GRU hidden size");
  cmd->add_option("--lr", c.lr, "Adam learning rate");
  cmd->add_option("--batch-size", c.batch_size, "windows per batch");
}

template <class T>
std::string as_text(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_floating_point_v<T>) {
    return format_double(v);
  } else {
    return std::to_string(v);
  }
}

RunConfig build_config(const Common& c) {
  RunConfig rc;
  if (!c.config.empty()) {
    rc.apply_file(c.config);
  }
  for (const std::string& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    }
    rc.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto flag = [&](const char* key, const auto& v) {
    if (v) {
      rc.set(key, as_text(*v));
    }
  };
  flag("seed", c.seed);
  flag("mode", c.mode);
  flag("epochs", c.epochs);
  flag("alpha", c.alpha);
  flag("beta", c.beta);
  flag("delta", c.delta);
  flag("d_model", c.d_model);
  flag("lr", c.lr);
  flag("batch_size", c.batch_size);
  flag("point_adjust", c.point_adjust);
  flag("metrics", c.metrics);
  rc.finalize();
  return rc;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    throw DataError("cannot write " + path.string());
  }
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
}

int cmd_synth(const RunConfig& rc, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  }
  const SynthData d = synth_generate(rc.synth);
  save_csv(out_dir / "train.csv", d.train);
  save_csv(out_dir / "test.csv", d.test);
  std::ostringstream seg;
  seg << "start,end,type,dims\n";
  for (const AnomalySegment& s : d.segments) {
    seg << s.start << ',' << s.end << ',' << to_string(s.type) << ',';
    for (std::size_t i = 0; i < s.dims.size(); ++i) {
      seg << (i ? ";" : "") << s.dims[i];
    }
    seg << '\n';
  }
  write_text(out_dir / "segments.csv", seg.str());
  write_text(out_dir / "synth.cfg", rc.echo());
  std::cout << "wrote " << d.train.length() << " train and " << d.test.length() << " test rows, "
            << d.segments.size() << " anomaly segments to " << out_dir.string() << "\n";
  return 0;
}

TrainedModel run_train(const RunConfig& rc, const MultivariateSeries& train_series, bool verbose) {
  return train(train_series, rc.train, [&](std::size_t epoch, const LossBreakdown& l, const auto&) {
    if (verbose) {
      std::cerr << "epoch " << epoch + 1 << " otn " << l.otn + l.ep << " dsn " << l.dsn << " total " << l.total
                << "\n";
    }
  });
}

int cmd_train(const RunConfig& rc, const fs::path& train_csv, const fs::path& out, std::string log, bool quiet) {
  const MultivariateSeries series = load_csv(train_csv);
  const TrainedModel model = run_train(rc, series, !quiet);
  ensure_parent(out);
  save_checkpoint(out, model);
  write_loss_log(log.empty() ? fs::path(out.string() + ".loss.csv") : fs::path(log), model.trace);
  std::cout << "checkpoint " << out.string() << " (" << file_hash(out) << ")\n";
  return 0;
}

ScoreSeries run_score(const RunConfig& rc, const TrainedModel& model, const MultivariateSeries& test,
                      const std::string& train_csv) {
  std::optional<MultivariateSeries> refs;
  if (rc.score.ref_source == RefSource::train) {
    if (train_csv.empty()) {
      throw ConfigError("ref_source = train needs --train");
    }
    refs = load_csv(train_csv);
  }
  return score_series(model, test, rc.score, refs ? &*refs : nullptr);
}

int cmd_score(const RunConfig& rc, const fs::path& model_path, const fs::path& test_csv, const fs::path& out,
              const std::string& train_csv) {
  const TrainedModel model = load_checkpoint(model_path);
  const MultivariateSeries test = load_csv(test_csv);
  const ScoreSeries s = run_score(rc, model, test, train_csv);
  ensure_parent(out);
  save_scores_csv(out, s, test.labels);
  std::cout << "scored " << s.size() << " timestamps -> " << out.string() << "\n";
  return 0;
}

std::vector<std::uint8_t> labels_for(const LoadedScores& sc, const std::string& labels_from) {
  if (!labels_from.empty()) {
    const MultivariateSeries src = load_csv(labels_from);
    if (!src.labels) {
      throw DataError(labels_from + " has no label column");
    }
    return *src.labels;
  }
  if (!sc.labels) {
    throw DataError("scores file has no label column; pass --labels-from");
  }
  return *sc.labels;
}

int cmd_eval(const RunConfig& rc, const fs::path& scores_csv, const std::string& labels_from, const std::string& out) {
  const LoadedScores sc = load_scores_csv(scores_csv);
  const std::vector<std::uint8_t> labels = labels_for(sc, labels_from);
  if (labels.size() != sc.scores.size()) {
    throw DataError("scores have " + std::to_string(sc.scores.size()) + " rows but labels have " +
                    std::to_string(labels.size()));
  }
  const auto doc = metrics_document(sc.scores.score, labels, rc.eval, rc.point_adjust);
  const std::string text = doc.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    ensure_parent(out);
    write_text(out, text);
  }
  return 0;
}

std::vector<std::string> split_values(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  if (out.empty()) {
    throw ConfigError("--values needs at least one value");
  }
  return out;
}

std::string cell(const nlohmann::json& doc, const char* key) {
  return doc.contains(key) && doc[key].is_number() ? format_double(doc[key].get<double>()) : "";
}

int cmd_sweep(const Common& common, const std::string& param, const std::string& values, const fs::path& train_csv,
              const fs::path& test_csv, const fs::path& out, const fs::path& work_dir) {
  if (param != "alpha" && param != "beta" && param != "l" && param != "delta") {
    throw ConfigError("--param must be one of alpha, beta, l, delta");
  }
  const auto vals = split_values(values);
  const bool retrain_per_value = param == "alpha" || param == "l";
  const MultivariateSeries train_series = load_csv(train_csv);
  const MultivariateSeries test = load_csv(test_csv);
  if (!test.labels) {
    throw DataError(test_csv.string() + " has no label column");
  }
  std::error_code ec;
  fs::create_directories(work_dir, ec);

  // Validate every value before any work is done.
  std::vector<RunConfig> configs;
  for (const std::string& v : vals) {
    Common c = common;
    try {
      if (param == "l") {
        const RunConfig base = build_config(common);
        const std::size_t l = std::stoul(v);
        c.sets.push_back("sub_length=" + v);
        c.sets.push_back("sub_stride=" + v);
        c.sets.push_back("window=" + std::to_string(l * base.train.layout.count));
      } else {
        c.sets.push_back(param + "=" + v);
      }
      configs.push_back(build_config(c));
    } catch (const std::logic_error&) {
      throw ConfigError("invalid sweep value '" + v + "'");
    }
  }

  std::ostringstream csv;
  csv << "param,value,auc_pr,f1,auc_roc,aff_f1,r_auc_roc,r_auc_pr,vus_roc,vus_pr,trained,model_hash\n";
  std::optional<TrainedModel> model;
  fs::path model_path;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const RunConfig& rc = configs[i];
    bool trained = false;
    if (!model || retrain_per_value) {
      model = run_train(rc, train_series, false);
      model_path = work_dir / (retrain_per_value ? "model_" + param + "_" + vals[i] + ".ckpt" : "model.ckpt");
      save_checkpoint(model_path, *model);
      trained = true;
    }
    const ScoreSeries s = run_score(rc, *model, test, train_csv.string());
    const auto doc = metrics_document(s.score, *test.labels, rc.eval, rc.point_adjust);
    const std::string pre = rc.point_adjust == PointAdjustMode::off ? "" : "pa_";
    csv << param << ',' << vals[i] << ',' << cell(doc, (pre + "auc_pr").c_str()) << ','
        << cell(doc, (pre + "f1").c_str()) << ',' << cell(doc, (pre + "auc_roc").c_str()) << ','
        << cell(doc, "aff_f1") << ',' << cell(doc, "r_auc_roc") << ',' << cell(doc, "r_auc_pr") << ','
        << cell(doc, "vus_roc") << ',' << cell(doc, "vus_pr") << ',' << (trained ? 1 : 0) << ','
        << file_hash(model_path) << '\n';
    std::cerr << param << "=" << vals[i] << " done\n";
  }
  ensure_parent(out);
  write_text(out, csv.str());
  std::cout << "wrote " << vals.size() << " sweep rows to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial-temporal normality learning for multivariate time-series anomaly detection"};
  app.require_subcommand(1);

  Common c_synth, c_train, c_score, c_eval, c_sweep;

  std::string out_dir;
  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic dataset");
  add_common(synth, c_synth);
  synth->add_option("--out-dir", out_dir, "output directory")->required();

  std::string train_csv, train_out, train_log;
  bool quiet = false;
  auto* trn = app.add_subcommand("train", "train a model on an unlabeled CSV");
  add_common(trn, c_train);
  trn->add_option("--train", train_csv, "training CSV")->required();
  trn->add_option("--out", train_out, "checkpoint path")->required();
  trn->add_option("--log", train_log, "epoch loss CSV (default <out>.loss.csv)");
  trn->add_flag("--quiet", quiet, "no per-epoch output");

  std::string model_path, test_csv, score_out, score_train;
  auto* score = app.add_subcommand("score", "score a test CSV with a checkpoint");
  add_common(score, c_score);
  score->add_option("--model", model_path, "checkpoint")->required();
  score->add_option("--test", test_csv, "test CSV")->required();
  score->add_option("--out", score_out, "scores CSV")->required();
  score->add_option("--train", score_train, "training CSV (for ref_source = train)");

  std::string scores_csv, labels_from, eval_out;
  auto* eval = app.add_subcommand("eval", "compute metrics for a scores CSV");
  add_common(eval, c_eval);
  eval->add_option("--scores", scores_csv, "scores CSV")->required();
  eval->add_option("--labels-from", labels_from, "CSV providing the label column");
  eval->add_option("--metrics", c_eval.metrics, "all | comma list of roc,pr,f1,aff,range,vus");
  eval->add_option("--point-adjust", c_eval.point_adjust, "on | off | both");
  eval->add_option("--out", eval_out, "metrics JSON (default stdout)");

  std::string sw_param, sw_values, sw_train, sw_test, sw_out, sw_work = "sweep_work";
  auto* sweep = app.add_subcommand("sweep", "hyperparameter sensitivity sweep");
  add_common(sweep, c_sweep);
  sweep->add_option("--param", sw_param, "alpha | beta | l | delta")->required();
  sweep->add_option("--values", sw_values, "comma-separated values")->required();
  sweep->add_option("--train", sw_train, "training CSV")->required();
  sweep->add_option("--test", sw_test, "labeled test CSV")->required();
  sweep->add_option("--out", sw_out, "sweep CSV")->required();
  sweep->add_option("--work-dir", sw_work, "directory for checkpoints");
  sweep->add_option("--point-adjust", c_sweep.point_adjust, "on | off");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      return cmd_synth(build_config(c_synth), out_dir);
    }
    if (*trn) {
      return cmd_train(build_config(c_train), train_csv, train_out, train_log, quiet);
    }
    if (*score) {
      return cmd_score(build_config(c_score), model_path, test_csv, score_out, score_train);
    }
    if (*eval) {
      return cmd_eval(build_config(c_eval), scores_csv, labels_from, eval_out);
    }
    if (*sweep) {
      return cmd_sweep(c_sweep, sw_param, sw_values, sw_train, sw_test, sw_out, sw_work);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
