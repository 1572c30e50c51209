// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "sten/matrix.hpp"
#include "sten/networks.hpp"
#include "sten/windowing.hpp"

namespace sten {

/// Probabilities below this are floored inside logarithms.
inline constexpr double kProbFloor = 1e-12;

/// sum P log(P/M) + sum Q log(Q/M), M = (P+Q)/2, natural log, 0 log 0 = 0.
/// This is twice the conventional Jensen-Shannon divergence; bounded by 2 ln 2.
/// Throws std::invalid_argument unless P and Q are distributions of equal
/// length (entries >= 0, sums within 1e-6 of 1).
double js_divergence(std::span<const double> p, std::span<const double> q);

/// Divergence of `p` against the one-hot distribution at `label`, using the
/// same floored logarithm as training.
double js_one_hot(std::span<const double> p, std::size_t label);

/// Mean over the m rows of js_divergence(probs_i, labels_i).
double otn_loss(const OrderPrediction& pred);

/// (1/n) sum (d_phi - d_eta)^2 over (d_phi, d_eta) pairs.
double dsn_loss(std::span<const std::pair<double, double>> pairs);

struct LossBreakdown {
  double otn = 0.0;
  double dsn = 0.0;
  double ep = 0.0;  // next-step prediction term, EP ablation only
  double total = 0.0;
  double alpha = 1.0;
};

/// total = otn + alpha * dsn.
LossBreakdown sten_loss(double otn, double dsn, double alpha);

/// Mean squared one-step-ahead error of the next-step head applied to the
/// window encoder state: averaged over t = 1..L-1 and all D dimensions.
double ep_loss(const Window& w, const PhiWeights& phi);

}  // namespace sten
