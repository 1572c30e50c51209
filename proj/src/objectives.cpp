// SPDX-License-Identifier: Apache-2.0
#include "sten/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sten/errors.hpp"

namespace sten {

namespace {

void check_distribution(std::span<const double> p, const char* name) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("js_divergence: ") + name + " has a negative or non-finite entry");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw std::invalid_argument(std::string("js_divergence: ") + name + " does not sum to 1");
  }
}

}  // namespace

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) {
    throw std::invalid_argument("js_divergence: distributions differ in length");
  }
  check_distribution(p, "P");
  check_distribution(q, "Q");
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    // Both sides of each ratio are floored so a vanishing entry cannot
    // contribute more than its exact term.
    const double mid = std::max(0.5 * (p[i] + q[i]), kProbFloor);
    if (p[i] > 0.0) {
      out += p[i] * std::log(std::max(p[i], kProbFloor) / mid);
    }
    if (q[i] > 0.0) {
      out += q[i] * std::log(std::max(q[i], kProbFloor) / mid);
    }
  }
  return out;
}

double js_one_hot(std::span<const double> p, std::size_t label) {
  // For i != label, M_i = P_i / 2 so each term is P_i ln 2.
  const double pc = p[label];
  const double mid = 0.5 * (pc + 1.0);
  double out = (1.0 - pc) * std::log(2.0);
  if (pc > 0.0) {
    out += pc * std::log(std::max(pc, kProbFloor) / mid);
  }
  out += std::log(1.0 / mid);
  return out;
}

double otn_loss(const OrderPrediction& pred) {
  const Eigen::Index m = pred.probs.rows();
  if (m == 0) {
    throw std::invalid_argument("otn_loss: empty prediction");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec p = pred.probs.row(i).transpose();
    const Vec q = pred.labels.row(i).transpose();
    total += js_divergence(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                           std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
  }
  return total / static_cast<double>(m);
}

double dsn_loss(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) {
    throw DataError("dsn_loss: no pairs");
  }
  double total = 0.0;
  for (const auto& [d_phi, d_eta] : pairs) {
    const double diff = d_phi - d_eta;
    total += diff * diff;
  }
  return total / static_cast<double>(pairs.size());
}

LossBreakdown sten_loss(double otn, double dsn, double alpha) {
  if (alpha < 0.0) {
    throw ConfigError("alpha must be >= 0");
  }
  return LossBreakdown{otn, dsn, 0.0, otn + alpha * dsn, alpha};
}

double ep_loss(const Window& w, const PhiWeights& phi) {
  if (w.length < 2) {
    throw std::invalid_argument("ep_loss: window needs at least two steps");
  }
  if (phi.ep_w.size() == 0) {
    throw std::invalid_argument("ep_loss: model has no next-step head");
  }
  const GruWeights& gru = phi.sequence_gru();
  Vec h = Vec::Zero(gru.w_z.rows());
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < w.length; ++t) {
    h = gru_step(w.data.row(static_cast<Eigen::Index>(t)).transpose(), h, gru);
    const Vec pred = phi.ep_w * h + phi.ep_b.col(0);
    total += (pred - w.data.row(static_cast<Eigen::Index>(t + 1)).transpose()).squaredNorm();
  }
  return total / static_cast<double>((w.length - 1) * static_cast<std::size_t>(w.data.cols()));
}

}  // namespace sten
