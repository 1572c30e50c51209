// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
//
//   sten_acceptance [--work-dir DIR] [--only 1,4,6] [--seed N]
//
// Criteria 2, 3, 7, 8 and 9 share one seeded synthetic dataset and reuse the
// models they train, so the whole run trains eight models.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "../support/toy.hpp"
#include "sten/checkpoint.hpp"
#include "sten/config.hpp"
#include "sten/metrics.hpp"
#include "sten/objectives.hpp"
#include "sten/report.hpp"
#include "sten/scoring.hpp"
#include "sten/series.hpp"
#include "sten/synth.hpp"
#include "sten/training.hpp"

namespace fs = std::filesystem;
using namespace sten;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Shared synthetic experiment

RunConfig base_config(std::uint64_t seed) {
  RunConfig rc;
  rc.seed = seed;
  rc.set("d_model", "64");
  rc.finalize();
  return rc;
}

struct RunArtifacts {
  fs::path dir;
  TrainedModel model;
  MultivariateSeries train_series;
  MultivariateSeries test_series;
  ScoreSeries scores;
  nlohmann::json metrics;
};

/// synth -> train -> score -> eval with every hand-off going through files.
RunArtifacts run_pipeline(const RunConfig& rc, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const SynthData d = synth_generate(rc.synth);
  save_csv(dir / "train.csv", d.train);
  save_csv(dir / "test.csv", d.test);

  RunArtifacts a;
  a.dir = dir;
  a.train_series = load_csv(dir / "train.csv");
  a.test_series = load_csv(dir / "test.csv");
  save_checkpoint(dir / "model.ckpt", train(a.train_series, rc.train));
  a.model = load_checkpoint(dir / "model.ckpt");
  save_scores_csv(dir / "scores.csv", score_series(a.model, a.test_series, rc.score), a.test_series.labels);
  const LoadedScores back = load_scores_csv(dir / "scores.csv");
  a.scores = back.scores;
  a.metrics = metrics_document(a.scores.score, *back.labels, rc.eval, PointAdjustMode::both);
  std::ofstream(dir / "metrics.json") << a.metrics.dump(2) << "\n";
  return a;
}

struct Experiment {
  RunConfig rc;
  fs::path work;
  std::optional<RunArtifacts> main;
  std::map<std::string, TrainedModel> extra;

  const RunArtifacts& primary() {
    if (!main) {
      main = run_pipeline(rc, work / "run_a");
    }
    return *main;
  }

  const TrainedModel& model(const std::string& key, const std::function<void(TrainConfig&)>& tweak) {
    auto it = extra.find(key);
    if (it == extra.end()) {
      TrainConfig t = rc.train;
      tweak(t);
      it = extra.emplace(key, train(primary().train_series, t)).first;
    }
    return it->second;
  }

  const std::vector<std::uint8_t>& labels() { return *primary().test_series.labels; }

  double pa_auc_pr(const TrainedModel& m, double beta = 1.0) {
    ScoreConfig sc = rc.score;
    sc.beta = beta;
    const ScoreSeries s = score_series(m, primary().test_series, sc);
    const auto truth = events_from_binary(labels());
    return pr_auc(point_adjust(s.score, truth), labels()).value_or(0.0);
  }
};

// ---------------------------------------------------------------------------
// Criteria

Verdict gradients() {
  double worst = 0.0;
  std::size_t coords = 0;
  std::string worst_case;
  int cases = 0;
  for (auto mode : {TrainMode::full, TrainMode::otn_only, TrainMode::dsn_only, TrainMode::dsn_plus_ep}) {
    for (bool normalize : {false, true}) {
      for (bool separate : {false, true}) {
        for (std::uint64_t seed : {1ULL, 2ULL}) {
          const auto p = toy::make_problem(mode, seed, 2, normalize, separate, 0.7);
          const auto g = toy::check(p, 1e-5);
          coords += g.coords;
          ++cases;
          if (g.max_rel > worst) {
            worst = g.max_rel;
            worst_case = to_string(mode) + (normalize ? "+norm" : "") + (separate ? "+sep" : "");
          }
        }
      }
    }
  }
  return {worst <= 1e-4, "max rel err " + sci(worst) + " over " + std::to_string(coords) + " coords in " +
                             std::to_string(cases) + " configs (worst " + worst_case + "), h=1e-5"};
}

Verdict detection(Experiment& ex) {
  const auto& m = ex.primary().metrics;
  const double roc = m["pa_auc_roc"].get<double>();
  const double pr = m["pa_auc_pr"].get<double>();
  return {roc >= 0.90 && pr >= 0.70, "PA AUC-ROC " + fmt(roc) + " (need >= 0.90), PA AUC-PR " + fmt(pr) +
                                         " (need >= 0.70); unadjusted ROC " + fmt(m["auc_roc"].get<double>()) +
                                         " PR " + fmt(m["auc_pr"].get<double>())};
}

Verdict ablation(Experiment& ex) {
  const double full = ex.primary().metrics["pa_auc_pr"].get<double>();
  const double otn = ex.pa_auc_pr(ex.model("otn_only", [](TrainConfig& t) { t.mode = TrainMode::otn_only; }));
  const double dsn = ex.pa_auc_pr(ex.model("dsn_only", [](TrainConfig& t) { t.mode = TrainMode::dsn_only; }));
  const bool a = full >= std::max(otn, dsn) - 0.02;
  const bool b = otn > dsn;
  return {a && b, "PA AUC-PR full " + fmt(full) + ", otn_only " + fmt(otn) + ", dsn_only " + fmt(dsn) +
                      "; full >= max - 0.02: " + (a ? "yes" : "no") + ", otn_only > dsn_only: " + (b ? "yes" : "no")};
}

Verdict metric_oracles() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int instances = 0;
  bool exact = true;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  while (instances < 150) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(20, 500)(rng);
    const auto y = oracle::random_runs(n, rng);
    const auto pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(n)) {
      continue;
    }
    ++instances;
    const auto s = oracle::random_scores(y, rng);
    const std::vector<double> w(y.begin(), y.end());
    const auto truth = events_from_binary(y);

    track(*roc_auc(s, y), oracle::roc_pairwise(s, y));
    track(*pr_auc(s, y), oracle::ap_enum(s, w));
    const auto f = best_f1(s, y);
    const auto fo = oracle::best_f1_enum(s, y);
    track(f->f1, fo.f1);
    exact = exact && f->threshold == fo.threshold;
    exact = exact && point_adjust(s, truth) == oracle::point_adjust_scan(s, y);

    const double width = static_cast<double>(instances % 12);
    const auto lw = oracle::range_labels_dense(truth, n, width);
    const CurveAreas r = range_auc(s, truth, width);
    if (r.roc) {
      track(*r.roc, oracle::roc_enum(s, lw));
    }
    track(*r.pr, oracle::ap_enum(s, lw));

    const auto pred = events_from_binary(threshold_percentile(s, 2.0 + static_cast<double>(instances % 15)));
    const auto aff = affiliation(pred, truth, n);
    const auto affo = oracle::affiliation_enum(pred, truth, n);
    exact = exact && aff.precision.has_value() == affo.precision.has_value();
    if (aff.precision && affo.precision) {
      track(*aff.precision, *affo.precision);
    }
    track(aff.recall, affo.recall);
  }
  return {worst <= 1e-9 && exact, "max |diff| " + sci(worst) + " over " + std::to_string(instances) +
                                      " instances (n <= 500); thresholds and adjusted scores identical: " +
                                      (exact ? "yes" : "no")};
}

Verdict reductions(Experiment& ex) {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(20, 500)(rng);
    const auto y = oracle::random_runs(n, rng);
    if (std::count(y.begin(), y.end(), 1) == 0) {
      continue;
    }
    const auto s = oracle::random_scores(y, rng);
    const auto truth = events_from_binary(y);
    const CurveAreas r0 = range_auc(s, truth, 0.0);
    const CurveAreas v0 = vus(s, truth, 0.0);
    worst = std::max({worst, std::abs(*r0.roc - *roc_auc(s, y)), std::abs(*r0.pr - *pr_auc(s, y)),
                      std::abs(*v0.roc - *roc_auc(s, y)), std::abs(*v0.pr - *pr_auc(s, y))});
  }

  ScoreConfig sc = ex.rc.score;
  sc.beta = 0.0;
  const ScoreSeries s0 = score_series(ex.primary().model, ex.primary().test_series, sc);
  const bool beta_exact = s0.score == s0.otn;

  const TrainedModel& otn = ex.model("otn_only", [](TrainConfig& t) { t.mode = TrainMode::otn_only; });
  const TrainedModel& a0 = ex.model("alpha0", [](TrainConfig& t) { t.alpha = 0.0; });
  bool alpha_exact = true;
  PhiParams::visit([&](const std::string&, const Matrix& x, const Matrix& y) { alpha_exact = alpha_exact && x == y; },
                   otn.phi, a0.phi);
  for (std::size_t e = 0; e < otn.trace.size(); ++e) {
    alpha_exact = alpha_exact && otn.trace[e].otn == a0.trace[e].otn;
  }
  const bool pass = worst <= 1e-9 && beta_exact && alpha_exact;
  return {pass, "w=0 and W_max=0 max |diff| " + sci(worst) + "; beta=0 scores == OTN scores bitwise: " +
                    (beta_exact ? "yes" : "no") + "; alpha=0 phi == otn_only phi bitwise: " +
                    (alpha_exact ? "yes" : "no")};
}

Verdict loss_values() {
  const std::vector<double> p{1.0, 0.0};
  const std::vector<double> q{0.5, 0.5};
  const double js = js_divergence(p, q);
  const bool a = std::abs(js - 0.431523) <= 1e-6;

  bool zero = true;
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> e(1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> r(2 + static_cast<std::size_t>(i % 8));
    double sum = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      r[k] = (k + static_cast<std::size_t>(i)) % 3 == 0 ? 0.0 : e(rng);
      sum += r[k];
    }
    if (sum == 0.0) {
      r[0] = sum = 1.0;
    }
    for (double& v : r) {
      v /= sum;
    }
    zero = zero && js_divergence(r, r) == 0.0;
  }
  zero = zero && js_divergence(p, p) == 0.0;

  std::uniform_real_distribution<double> u(-30.0, 30.0);
  double worst = 0.0;
  const double bound = 2.0 * std::log(2.0);
  for (int i = 0; i < 10000; ++i) {
    const auto m = static_cast<Eigen::Index>(2 + i % 11);
    Mat logits(m, m);
    for (Eigen::Index k = 0; k < logits.size(); ++k) {
      logits.data()[k] = u(rng) * (i % 2 ? 1.0 : 0.1);
    }
    OrderPrediction op;
    op.probs = softmax_columns(logits).transpose();
    op.labels = Mat::Identity(m, m);
    worst = std::max(worst, otn_loss(op));
  }
  const bool c = worst <= bound;
  return {a && zero && c, "JS([1,0],[.5,.5]) = " + fmt(js, 7) + "; JS(P,P) == 0 on 1001 inputs: " +
                              (zero ? "yes" : "no") + "; max OTN loss over 1e4 inputs " + fmt(worst, 9) +
                              " vs 2 ln 2 = " + fmt(bound, 9)};
}

Verdict determinism(Experiment& ex) {
  const RunArtifacts& a = ex.primary();
  const RunArtifacts b = run_pipeline(ex.rc, ex.work / "run_b");
  bool same = true;
  std::string which;
  for (const char* f : {"train.csv", "test.csv", "model.ckpt", "scores.csv", "metrics.json"}) {
    const bool eq = read_bytes(a.dir / f) == read_bytes(b.dir / f);
    same = same && eq;
    which += std::string(which.empty() ? "" : ", ") + f + (eq ? " =" : " DIFFERS");
  }
  return {same, which + "; checkpoint " + file_hash(a.dir / "model.ckpt")};
}

Verdict frozen_eta(Experiment& ex) {
  const RunArtifacts& a = ex.primary();
  const std::uint32_t before = init_eta(a.model.shape(), ex.rc.train.resolved_eta_seed()).checksum();
  const std::uint32_t after = a.model.eta.checksum();
  const std::uint64_t other_seed = ex.rc.train.resolved_eta_seed() + 1000;
  const TrainedModel& other = ex.model("eta_seed", [&](TrainConfig& t) { t.eta_seed = other_seed; });
  const ScoreSeries s2 = score_series(other, a.test_series, ex.rc.score);
  std::size_t changed = 0;
  for (std::size_t t = 0; t < s2.size(); ++t) {
    changed += s2.dsn[t] != a.scores.dsn[t] ? 1 : 0;
  }
  const bool pass = before == after && changed > 0 && other.eta.checksum() != after;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08x", after);
  return {pass, std::string("eta checksum before/after training ") + buf + (before == after ? " (unchanged)" : " (CHANGED)") +
                    "; another eta seed changes " + std::to_string(changed) + "/" + std::to_string(s2.size()) +
                    " DSN scores"};
}

Verdict sensitivity(Experiment& ex) {
  std::vector<double> by_alpha;
  for (double alpha : {0.5, 1.0, 2.0}) {
    if (alpha == 1.0) {
      by_alpha.push_back(ex.primary().metrics["pa_auc_pr"].get<double>());
      continue;
    }
    const TrainedModel& m = ex.model("alpha" + fmt(alpha, 1), [&](TrainConfig& t) { t.alpha = alpha; });
    by_alpha.push_back(ex.pa_auc_pr(m));
  }
  std::vector<double> by_beta;
  for (double beta : {0.5, 1.0, 2.0}) {
    by_beta.push_back(ex.pa_auc_pr(ex.primary().model, beta));
  }
  auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
  };
  const double sa = spread(by_alpha);
  const double sb = spread(by_beta);
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (double x : v) {
      s += (s.empty() ? "" : "/") + fmt(x, 3);
    }
    return s;
  };
  return {sa <= 0.10 && sb <= 0.10, "PA AUC-PR alpha 0.5/1/2: " + list(by_alpha) + " (spread " + fmt(sa, 3) +
                                        "), beta 0.5/1/2: " + list(by_beta) + " (spread " + fmt(sb, 3) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "sten_acceptance";
  std::set<int> only;
  std::uint64_t seed = 1;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work-dir" && i + 1 < argc) {
      work = argv[++i];
    } else if (arg == "--seed" && i + 1 < argc) {
      seed = std::stoull(argv[++i]);
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) {
        only.insert(std::stoi(item));
      }
    } else {
      std::cerr << "usage: sten_acceptance [--work-dir DIR] [--only 1,2,...] [--seed N]\n";
      return 1;
    }
  }

  Experiment ex{base_config(seed), work, std::nullopt, {}};
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient check", gradients},
      {"synthetic detection", [&] { return detection(ex); }},
      {"ablation ordering", [&] { return ablation(ex); }},
      {"metric oracles", metric_oracles},
      {"reduction identities", [&] { return reductions(ex); }},
      {"loss values", loss_values},
      {"determinism", [&] { return determinism(ex); }},
      {"frozen eta", [&] { return frozen_eta(ex); }},
      {"sensitivity", [&] { return sensitivity(ex); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && only.count(id) == 0) {
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += v.pass ? 0 : 1;
    std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << v.detail << " [" << fmt(secs, 1) << " s]" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
