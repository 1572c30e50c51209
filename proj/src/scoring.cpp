// SPDX-License-Identifier: Apache-2.0
#include "sten/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "sten/errors.hpp"
#include "sten/graph.hpp"
#include "sten/objectives.hpp"
#include "sten/params.hpp"
#include "sten/rng.hpp"
#include "sten/windowing.hpp"

namespace sten {

void ScoreConfig::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ConfigError("beta must be finite and >= 0");
  }
  if (!(delta > 0.0 && delta < 100.0)) {
    throw ConfigError("delta must lie in (0, 100)");
  }
  if (stride == 0) {
    throw ConfigError("score_stride must be >= 1");
  }
  if (k_refs == 0) {
    throw ConfigError("k_refs must be >= 1");
  }
  if (!(eps >= 0.0)) {
    throw ConfigError("score_eps must be >= 0");
  }
}

std::vector<double> score_otn(const OrderPrediction& pred, double eps, bool per_subseq_denominator) {
  const Eigen::Index m = pred.probs.rows();
  std::vector<double> numer(static_cast<std::size_t>(m));
  std::vector<double> js(static_cast<std::size_t>(m));
  double mean_js = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    numer[k] = (pred.probs.row(i) - pred.labels.row(i)).cwiseAbs().sum();
    const Vec p = pred.probs.row(i).transpose();
    const Vec q = pred.labels.row(i).transpose();
    js[k] = js_divergence(std::span<const double>(p.data(), static_cast<std::size_t>(m)),
                          std::span<const double>(q.data(), static_cast<std::size_t>(m)));
    mean_js += js[k];
  }
  mean_js /= static_cast<double>(m);
  std::vector<double> out(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = numer[i] / ((per_subseq_denominator ? js[i] : mean_js) + eps);
  }
  return out;
}

double score_dsn(std::span<const std::pair<double, double>> ref_distances) {
  if (ref_distances.empty()) {
    throw DataError("score_dsn: no reference windows");
  }
  return dsn_loss(ref_distances);
}

double score_dsn(const Vec& phi_emb, const Vec& eta_emb, std::span<const std::pair<Vec, Vec>> refs, bool normalize) {
  std::vector<std::pair<double, double>> d;
  d.reserve(refs.size());
  for (const auto& [phi_ref, eta_ref] : refs) {
    d.emplace_back(pair_distance(phi_emb, phi_ref, normalize), pair_distance(eta_emb, eta_ref, normalize));
  }
  return score_dsn(d);
}

std::vector<double> combine(std::span<const double> otn_scores, double dsn_score, double beta) {
  if (beta < 0.0) {
    throw ConfigError("beta must be >= 0");
  }
  std::vector<double> out(otn_scores.begin(), otn_scores.end());
  for (double& v : out) {
    v += beta * dsn_score;
  }
  return out;
}

ScoreSeries aggregate_timestamps(std::span<const SlotScore> slots, std::size_t n) {
  ScoreSeries out;
  out.score.assign(n, 0.0);
  out.otn.assign(n, 0.0);
  out.dsn.assign(n, 0.0);
  out.coverage.assign(n, 0);
  for (const SlotScore& s : slots) {
    if (s.start < 1 || s.start + s.length - 1 > n) {
      throw std::logic_error("slot outside the timeline");
    }
    for (std::size_t t = s.start - 1; t < s.start - 1 + s.length; ++t) {
      out.score[t] += s.score;
      out.otn[t] += s.otn;
      out.dsn[t] += s.dsn;
      out.coverage[t] += 1;
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (out.coverage[t] == 0) {
      throw std::logic_error("timestamp " + std::to_string(t + 1) + " is not covered by any sub-sequence");
    }
    const auto c = static_cast<double>(out.coverage[t]);
    out.score[t] /= c;
    out.otn[t] /= c;
    out.dsn[t] /= c;
  }
  return out;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) {
    throw std::invalid_argument("percentile of an empty set");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<std::uint8_t> threshold_percentile(std::span<const double> scores, double delta) {
  if (!(delta > 0.0 && delta < 100.0)) {
    throw ConfigError("delta must lie in (0, 100)");
  }
  const double cut = percentile(scores, 100.0 - delta);
  std::vector<std::uint8_t> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = scores[i] > cut ? 1 : 0;
  }
  return out;
}

namespace {

struct WindowScores {
  std::vector<std::vector<double>> temporal;  // per window, m values
  Mat phi_emb;
  Mat eta_emb;
};

/// Temporal scores from the order head, sub-sequences in true order.
std::vector<std::vector<double>> order_scores(const PhiWeights& phi, const NetworkShape& shape,
                                              const std::vector<const Mat*>& chunk, const ScoreConfig& cfg) {
  const std::size_t m = shape.layout.count;
  std::vector<std::size_t> identity(m);
  for (std::size_t i = 0; i < m; ++i) {
    identity[i] = i;
  }
  const std::size_t l = shape.layout.length;
  const std::size_t r = shape.layout.stride;
  std::vector<Mat> xs(l, Mat(static_cast<Eigen::Index>(shape.input_dim), static_cast<Eigen::Index>(chunk.size() * m)));
  for (std::size_t b = 0; b < chunk.size(); ++b) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t t = 0; t < l; ++t) {
        xs[t].col(static_cast<Eigen::Index>(b * m + i)) = chunk[b]->row(static_cast<Eigen::Index>(i * r + t)).transpose();
      }
    }
  }
  const Mat h = gru_forward(phi.gru, xs);
  Mat logits = phi.head_w * h;
  logits.colwise() += phi.head_b.col(0);
  const Mat probs = softmax_columns(logits);
  std::vector<std::vector<double>> out;
  out.reserve(chunk.size());
  for (std::size_t b = 0; b < chunk.size(); ++b) {
    OrderPrediction pred;
    pred.probs = probs.middleCols(static_cast<Eigen::Index>(b * m), static_cast<Eigen::Index>(m)).transpose();
    pred.labels = Mat::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    out.push_back(score_otn(pred, cfg.eps, cfg.per_subseq_denominator));
  }
  return out;
}

/// Temporal scores of the EP ablation: mean next-step squared error over the
/// timestamps of each sub-sequence.
std::vector<std::vector<double>> ep_scores(const PhiWeights& phi, const NetworkShape& shape, const std::vector<Mat>& xs,
                                           const GruTape& tape, std::size_t count) {
  const std::size_t win_len = xs.size();
  const auto dims = static_cast<double>(shape.input_dim);
  Mat err_sq = Mat::Zero(static_cast<Eigen::Index>(win_len), static_cast<Eigen::Index>(count));
  for (std::size_t t = 1; t < win_len; ++t) {
    Mat pred = phi.ep_w * tape.h[t];
    pred.colwise() += phi.ep_b.col(0);
    err_sq.row(static_cast<Eigen::Index>(t)) = (pred - xs[t]).colwise().squaredNorm() / dims;
  }
  std::vector<std::vector<double>> out(count, std::vector<double>(shape.layout.count));
  for (std::size_t b = 0; b < count; ++b) {
    for (std::size_t i = 0; i < shape.layout.count; ++i) {
      const std::size_t begin = std::max<std::size_t>(i * shape.layout.stride, 1);
      const std::size_t end = i * shape.layout.stride + shape.layout.length;
      double s = 0.0;
      for (std::size_t t = begin; t < end; ++t) {
        s += err_sq(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b));
      }
      out[b][i] = end > begin ? s / static_cast<double>(end - begin) : 0.0;
    }
  }
  return out;
}

WindowScores window_pass(const PhiWeights& phi, const GruWeights& eta, const NetworkShape& shape,
                         const std::vector<Window>& windows, const ScoreConfig& cfg, bool temporal) {
  WindowScores ws;
  const bool distance = uses_distance_branch(shape.mode);
  const auto d = static_cast<Eigen::Index>(shape.d_model);
  if (distance) {
    ws.phi_emb.resize(d, static_cast<Eigen::Index>(windows.size()));
    ws.eta_emb.resize(d, static_cast<Eigen::Index>(windows.size()));
  }
  constexpr std::size_t kChunk = 256;
  for (std::size_t i = 0; i < windows.size(); i += kChunk) {
    std::vector<const Mat*> chunk;
    for (std::size_t k = i; k < std::min(windows.size(), i + kChunk); ++k) {
      chunk.push_back(&windows[k].data);
    }
    const auto cols = static_cast<Eigen::Index>(chunk.size());
    if (temporal && uses_order_branch(shape.mode)) {
      for (auto& s : order_scores(phi, shape, chunk, cfg)) {
        ws.temporal.push_back(std::move(s));
      }
    }
    if (distance) {
      const auto xs = stack_steps(chunk);
      GruTape tape;
      const bool ep = temporal && uses_ep_head(shape.mode);
      Mat h = gru_forward(phi.sequence_gru(), xs, ep ? &tape : nullptr);
      ws.phi_emb.middleCols(static_cast<Eigen::Index>(i), cols) = shape.normalize_embeddings ? normalize_columns(h) : h;
      ws.eta_emb.middleCols(static_cast<Eigen::Index>(i), cols) = embed_batch(eta, chunk, shape.normalize_embeddings);
      if (ep) {
        for (auto& s : ep_scores(phi, shape, xs, tape, chunk.size())) {
          ws.temporal.push_back(std::move(s));
        }
      }
    }
  }
  return ws;
}

}  // namespace

ScoreSeries score_series(const TrainedModel& model, const MultivariateSeries& test, const ScoreConfig& cfg,
                         const MultivariateSeries* train_refs) {
  cfg.validate();
  test.validate();
  if (test.dims() != model.input_dim) {
    throw DataError("test series has " + std::to_string(test.dims()) + " dimensions, model expects " +
                    std::to_string(model.input_dim));
  }
  const NetworkShape shape = model.shape();
  const std::size_t win_len = shape.window_length();
  const MultivariateSeries normed = zscore_apply(test, model.norm);
  const auto windows = make_windows(normed, win_len, cfg.stride, TailPolicy::cover);
  const auto phi = to_working<PhiWeights>(model.phi);
  const auto eta = to_working<GruWeights>(model.eta.gru);

  WindowScores ws = window_pass(phi, eta, shape, windows, cfg, true);
  const std::size_t n_win = windows.size();
  const std::size_t m = shape.layout.count;

  std::vector<double> dsn(n_win, 0.0);
  if (uses_distance_branch(shape.mode)) {
    const std::uint64_t ref_seed = derive_seed(cfg.seed, "score.refs");
    if (cfg.ref_source == RefSource::test) {
      const auto pairs = sample_pairs(n_win, ref_seed, cfg.k_refs);
      for (std::size_t w = 0; w < n_win; ++w) {
        std::vector<std::pair<double, double>> d;
        for (std::size_t k = 0; k < cfg.k_refs; ++k) {
          const auto j = static_cast<Eigen::Index>(pairs[w * cfg.k_refs + k].second);
          const auto i = static_cast<Eigen::Index>(w);
          d.emplace_back(ws.phi_emb.col(i).dot(ws.phi_emb.col(j)), ws.eta_emb.col(i).dot(ws.eta_emb.col(j)));
        }
        dsn[w] = score_dsn(d);
      }
    } else {
      if (train_refs == nullptr) {
        throw ConfigError("ref_source=train requires the training series");
      }
      const MultivariateSeries train_normed = zscore_apply(*train_refs, model.norm);
      const auto train_windows =
          make_windows(train_normed, win_len, model.config.train_stride, TailPolicy::drop);
      const WindowScores ref = window_pass(phi, eta, shape, train_windows, cfg, false);
      std::mt19937_64 rng(ref_seed);
      std::uniform_int_distribution<std::size_t> pick(0, train_windows.size() - 1);
      for (std::size_t w = 0; w < n_win; ++w) {
        std::vector<std::pair<double, double>> d;
        for (std::size_t k = 0; k < cfg.k_refs; ++k) {
          const auto j = static_cast<Eigen::Index>(pick(rng));
          const auto i = static_cast<Eigen::Index>(w);
          d.emplace_back(ws.phi_emb.col(i).dot(ref.phi_emb.col(j)), ws.eta_emb.col(i).dot(ref.eta_emb.col(j)));
        }
        dsn[w] = score_dsn(d);
      }
    }
  }

  std::vector<SlotScore> slots;
  slots.reserve(n_win * m);
  for (std::size_t w = 0; w < n_win; ++w) {
    const std::vector<double> temporal = ws.temporal.empty() ? std::vector<double>(m, 0.0) : ws.temporal[w];
    std::vector<double> total;
    switch (shape.mode) {
      case TrainMode::otn_only:
        total = temporal;
        break;
      case TrainMode::dsn_only:
        total.assign(m, dsn[w]);
        break;
      case TrainMode::full:
      case TrainMode::dsn_plus_ep:
        total = combine(temporal, dsn[w], cfg.beta);
        break;
    }
    for (std::size_t i = 0; i < m; ++i) {
      slots.push_back(SlotScore{windows[w].start + i * shape.layout.stride, shape.layout.length, total[i], temporal[i],
                                dsn[w]});
    }
  }
  ScoreSeries out = aggregate_timestamps(slots, test.length());
  for (double v : out.score) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite anomaly score");
    }
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

}  // namespace

void write_scores_csv(std::ostream& out, const ScoreSeries& scores,
                      const std::optional<std::vector<std::uint8_t>>& labels) {
  if (labels && labels->size() != scores.size()) {
    throw DataError("label count does not match score count");
  }
  out << "timestamp,score,score_otn,score_dsn" << (labels ? ",label" : "") << '\n';
  for (std::size_t t = 0; t < scores.size(); ++t) {
    out << (t + 1) << ',' << fmt(scores.score[t]) << ',' << fmt(scores.otn[t]) << ',' << fmt(scores.dsn[t]);
    if (labels) {
      out << ',' << static_cast<int>((*labels)[t]);
    }
    out << '\n';
  }
}

void save_scores_csv(const std::filesystem::path& path, const ScoreSeries& scores,
                     const std::optional<std::vector<std::uint8_t>>& labels) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  write_scores_csv(out, scores, labels);
}

LoadedScores load_scores_csv(const std::filesystem::path& path) {
  CsvOptions opts;
  opts.label_column = "label";
  const MultivariateSeries raw = load_csv(path, opts);
  auto col = [&](const std::string& name) -> Eigen::Index {
    for (std::size_t i = 0; i < raw.dim_names.size(); ++i) {
      if (raw.dim_names[i] == name) {
        return static_cast<Eigen::Index>(i);
      }
    }
    throw DataError(path.string() + ": missing column '" + name + "'");
  };
  const Eigen::Index ts = col("timestamp");
  const Eigen::Index sc = col("score");
  const Eigen::Index so = col("score_otn");
  const Eigen::Index sd = col("score_dsn");
  LoadedScores out;
  const std::size_t n = raw.length();
  out.scores.score.resize(n);
  out.scores.otn.resize(n);
  out.scores.dsn.resize(n);
  out.scores.coverage.assign(n, 1);
  for (std::size_t t = 0; t < n; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    if (raw.values(row, ts) != static_cast<double>(t + 1)) {
      throw DataError(path.string() + ": timestamps must be 1..N in order (row " + std::to_string(t + 1) + ")");
    }
    out.scores.score[t] = raw.values(row, sc);
    out.scores.otn[t] = raw.values(row, so);
    out.scores.dsn[t] = raw.values(row, sd);
  }
  out.labels = raw.labels;
  return out;
}

}  // namespace sten
