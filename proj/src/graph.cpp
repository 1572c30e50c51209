// SPDX-License-Identifier: Apache-2.0
#include "sten/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "sten/errors.hpp"
#include "sten/params.hpp"

namespace sten {

std::uint64_t fingerprint(const PhiWeights& phi) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  PhiWeights::visit(
      [&](const std::string&, const Mat& m) {
        h ^= static_cast<std::uint64_t>(m.rows()) * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(m.cols());
        h *= 0x100000001B3ULL;
        for (Eigen::Index i = 0; i < m.size(); ++i) {
          h ^= std::bit_cast<std::uint64_t>(m.data()[i]);
          h *= 0x100000001B3ULL;
        }
      },
      phi);
  return h;
}

std::vector<Mat> stack_steps(std::span<const Mat* const> windows) {
  if (windows.empty()) {
    return {};
  }
  const Eigen::Index steps = windows[0]->rows();
  const Eigen::Index dims = windows[0]->cols();
  std::vector<Mat> xs(static_cast<std::size_t>(steps), Mat(dims, static_cast<Eigen::Index>(windows.size())));
  for (std::size_t b = 0; b < windows.size(); ++b) {
    const Mat& w = *windows[b];
    if (w.rows() != steps || w.cols() != dims) {
      throw std::invalid_argument("batch windows differ in shape");
    }
    for (Eigen::Index t = 0; t < steps; ++t) {
      xs[static_cast<std::size_t>(t)].col(static_cast<Eigen::Index>(b)) = w.row(t).transpose();
    }
  }
  return xs;
}

Mat embed_batch(const GruWeights& gru, std::span<const Mat* const> windows, bool normalize) {
  const auto xs = stack_steps(windows);
  Mat e = gru_forward(gru, xs);
  return normalize ? normalize_columns(e) : e;
}

LossBreakdown forward_loss(const PhiWeights& phi, const NetworkShape& shape, double alpha, const BatchInput& batch,
                           GradTape* tape) {
  const std::size_t count = batch.windows.size();
  if (count == 0) {
    throw std::invalid_argument("forward_loss: empty batch");
  }
  const std::size_t win_len = shape.window_length();
  for (const Mat* w : batch.windows) {
    if (w->rows() != static_cast<Eigen::Index>(win_len) || w->cols() != static_cast<Eigen::Index>(shape.input_dim)) {
      throw std::invalid_argument("forward_loss: window shape does not match the network");
    }
  }
  if (alpha < 0.0) {
    throw ConfigError("alpha must be >= 0");
  }
  GradTape local;
  GradTape& tp = tape != nullptr ? *tape : local;
  tp = GradTape{};
  tp.shape = shape;
  tp.alpha = alpha;
  tp.batch = count;
  if (tape != nullptr) {
    tp.fingerprint = fingerprint(phi);
  }

  LossBreakdown out;
  out.alpha = alpha;

  if (uses_order_branch(shape.mode)) {
    const std::size_t m = shape.layout.count;
    const std::size_t l = shape.layout.length;
    const std::size_t r = shape.layout.stride;
    if (batch.permutations.size() != count) {
      throw std::invalid_argument("forward_loss: one permutation per window required");
    }
    const auto cols = static_cast<Eigen::Index>(count * m);
    tp.otn_inputs.assign(l, Mat(static_cast<Eigen::Index>(shape.input_dim), cols));
    tp.labels.resize(count * m);
    for (std::size_t b = 0; b < count; ++b) {
      const auto& perm = batch.permutations[b];
      if (perm.size() != m) {
        throw std::invalid_argument("forward_loss: permutation length differs from m");
      }
      for (std::size_t slot = 0; slot < m; ++slot) {
        const std::size_t col = b * m + slot;
        const std::size_t pos = perm[slot];
        tp.labels[col] = pos;
        for (std::size_t t = 0; t < l; ++t) {
          tp.otn_inputs[t].col(static_cast<Eigen::Index>(col)) =
              batch.windows[b]->row(static_cast<Eigen::Index>(pos * r + t)).transpose();
        }
      }
    }
    tp.otn_hidden = gru_forward(phi.gru, tp.otn_inputs, tape != nullptr ? &tp.otn_gru : nullptr);
    Mat logits = phi.head_w * tp.otn_hidden;
    logits.colwise() += phi.head_b.col(0);
    tp.probs = softmax_columns(logits);
    double total = 0.0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      total += js_one_hot(std::span<const double>(tp.probs.col(c).data(), m), tp.labels[static_cast<std::size_t>(c)]);
    }
    out.otn = total / static_cast<double>(cols);
  }

  if (uses_distance_branch(shape.mode)) {
    if (batch.pairs.empty()) {
      throw DataError("forward_loss: distance branch needs at least one pair");
    }
    if (batch.eta_embeddings.cols() != static_cast<Eigen::Index>(count) ||
        batch.eta_embeddings.rows() != static_cast<Eigen::Index>(shape.d_model)) {
      throw std::invalid_argument("forward_loss: projector embeddings have the wrong shape");
    }
    tp.seq_inputs = stack_steps(batch.windows);
    const bool need_states = tape != nullptr || uses_ep_head(shape.mode);
    tp.seq_hidden = gru_forward(phi.sequence_gru(), tp.seq_inputs, need_states ? &tp.seq_gru : nullptr);
    tp.embeddings = shape.normalize_embeddings ? normalize_columns(tp.seq_hidden) : tp.seq_hidden;
    tp.pairs = batch.pairs;
    tp.residuals.reserve(tp.pairs.size());
    double total = 0.0;
    for (const auto& [i, j] : tp.pairs) {
      if (i >= count || j >= count) {
        throw std::invalid_argument("forward_loss: pair index out of range");
      }
      const auto ci = static_cast<Eigen::Index>(i);
      const auto cj = static_cast<Eigen::Index>(j);
      const double res = tp.embeddings.col(ci).dot(tp.embeddings.col(cj)) -
                         batch.eta_embeddings.col(ci).dot(batch.eta_embeddings.col(cj));
      tp.residuals.push_back(res);
      total += res * res;
    }
    out.dsn = total / static_cast<double>(tp.pairs.size());

    if (uses_ep_head(shape.mode)) {
      double sq = 0.0;
      tp.ep_errors.reserve(win_len - 1);
      for (std::size_t t = 0; t + 1 < win_len; ++t) {
        Mat err = phi.ep_w * tp.seq_gru.h[t + 1];
        err.colwise() += phi.ep_b.col(0);
        err -= tp.seq_inputs[t + 1];
        sq += err.squaredNorm();
        tp.ep_errors.push_back(std::move(err));
      }
      out.ep = sq / static_cast<double>((win_len - 1) * shape.input_dim * count);
    }
  }

  out.total = out.otn + out.ep + alpha * out.dsn;
  if (!std::isfinite(out.total)) {
    throw NumericError("non-finite training loss (otn=" + std::to_string(out.otn) + ", dsn=" +
                       std::to_string(out.dsn) + ", ep=" + std::to_string(out.ep) + ")");
  }
  return out;
}

PhiWeights backward(const GradTape& tape, const PhiWeights& phi, double loss_grad) {
  if (fingerprint(phi) != tape.fingerprint) {
    throw std::logic_error("backward: parameters changed since the tape was recorded");
  }
  const NetworkShape& shape = tape.shape;
  auto grads = zeros_like<PhiWeights>(phi);

  if (uses_order_branch(shape.mode)) {
    const Eigen::Index m = tape.probs.rows();
    const Eigen::Index cols = tape.probs.cols();
    const double scale = loss_grad / static_cast<double>(cols);
    Mat dlogits(m, cols);
    Vec dp(m);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto label = static_cast<Eigen::Index>(tape.labels[static_cast<std::size_t>(c)]);
      const double pc = tape.probs(label, c);
      dp.setConstant(std::log(2.0) * scale);
      dp(label) = std::log(std::max(pc, kProbFloor) / (0.5 * (pc + 1.0))) * scale;
      const double inner = tape.probs.col(c).dot(dp);
      dlogits.col(c) = tape.probs.col(c).cwiseProduct((dp.array() - inner).matrix());
    }
    grads.head_w.noalias() += dlogits * tape.otn_hidden.transpose();
    grads.head_b += dlogits.rowwise().sum();
    const Mat dh = phi.head_w.transpose() * dlogits;
    gru_backward(phi.gru, tape.otn_inputs, tape.otn_gru, dh, {}, grads.gru);
  }

  if (uses_distance_branch(shape.mode)) {
    const Eigen::Index batch = tape.embeddings.cols();
    Mat de = Mat::Zero(tape.embeddings.rows(), batch);
    const double coef = loss_grad * tape.alpha * 2.0 / static_cast<double>(tape.pairs.size());
    for (std::size_t p = 0; p < tape.pairs.size(); ++p) {
      const auto i = static_cast<Eigen::Index>(tape.pairs[p].first);
      const auto j = static_cast<Eigen::Index>(tape.pairs[p].second);
      const double g = coef * tape.residuals[p];
      de.col(i) += g * tape.embeddings.col(j);
      de.col(j) += g * tape.embeddings.col(i);
    }
    Mat dh = de;
    if (shape.normalize_embeddings) {
      for (Eigen::Index c = 0; c < batch; ++c) {
        const double norm = std::max(tape.seq_hidden.col(c).norm(), 1e-12);
        const double proj = tape.embeddings.col(c).dot(de.col(c));
        dh.col(c) = (de.col(c) - proj * tape.embeddings.col(c)) / norm;
      }
    }
    std::vector<Mat> dh_steps;
    if (uses_ep_head(shape.mode)) {
      const std::size_t win_len = tape.seq_inputs.size();
      const double ep_scale = loss_grad * 2.0 /
                              static_cast<double>((win_len - 1) * shape.input_dim * tape.batch);
      dh_steps.assign(win_len, Mat::Zero(tape.seq_hidden.rows(), batch));
      for (std::size_t t = 0; t + 1 < win_len; ++t) {
        const Mat dpred = ep_scale * tape.ep_errors[t];
        grads.ep_w.noalias() += dpred * tape.seq_gru.h[t + 1].transpose();
        grads.ep_b += dpred.rowwise().sum();
        dh_steps[t].noalias() = phi.ep_w.transpose() * dpred;
      }
    }
    GruWeights& dest = phi.has_separate_towers() ? grads.seq_gru : grads.gru;
    gru_backward(phi.sequence_gru(), tape.seq_inputs, tape.seq_gru, dh, dh_steps, dest);
  }
  return grads;
}

}  // namespace sten
