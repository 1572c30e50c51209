// SPDX-License-Identifier: Apache-2.0
//
// Tiny models and batches for gradient checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sten/graph.hpp"
#include "sten/networks.hpp"
#include "sten/optim.hpp"
#include "sten/params.hpp"
#include "sten/windowing.hpp"

namespace toy {

struct Problem {
  sten::NetworkShape shape;
  sten::PhiWeights phi;
  std::vector<sten::Mat> windows;
  sten::BatchInput batch;
  double alpha = 1.0;
};

/// D=3, d_model=8, m=4, l=5, L=20, batch=2 unless overridden.
inline Problem make_problem(sten::TrainMode mode, std::uint64_t seed, std::size_t batch = 2, bool normalize = false,
                            bool separate = false, double alpha = 1.0) {
  Problem p;
  p.alpha = alpha;
  p.shape.input_dim = 3;
  p.shape.d_model = 8;
  p.shape.layout = sten::SubSeqLayout{5, 5, 4};
  p.shape.mode = mode;
  p.shape.normalize_embeddings = normalize;
  p.shape.separate_towers = separate;
  // Larger-than-default weights so every gate is exercised away from zero.
  auto phi = sten::init_phi(p.shape, seed);
  sten::PhiParams::visit(
      [](const std::string&, sten::Matrix& m) {
        for (float& v : m.data()) {
          v *= 2.0F;
        }
      },
      phi);
  p.phi = sten::to_working<sten::PhiWeights>(phi);

  std::mt19937_64 rng(seed + 17);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t L = p.shape.window_length();
  for (std::size_t b = 0; b < batch; ++b) {
    sten::Mat w(static_cast<Eigen::Index>(L), 3);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = g(rng);
    }
    p.windows.push_back(w);
  }
  for (const auto& w : p.windows) {
    p.batch.windows.push_back(&w);
  }
  for (std::size_t b = 0; b < batch; ++b) {
    p.batch.permutations.push_back(sten::random_permutation(p.shape.layout.count, seed * 31 + b));
  }
  if (sten::uses_distance_branch(mode)) {
    p.batch.pairs = sten::sample_pairs(batch, seed + 5, 1);
    const auto eta = sten::init_eta(p.shape, seed + 99);
    p.batch.eta_embeddings =
        sten::embed_batch(sten::to_working<sten::GruWeights>(eta.gru), p.batch.windows, normalize);
  }
  return p;
}

struct GradCheck {
  double max_rel = 0.0;
  std::size_t coords = 0;
};

/// Relative error |a - n| / max(|a|, |n|, floor) over every parameter.
inline GradCheck check(const Problem& p, double h = 1e-5, double floor = 1e-6) {
  sten::GradTape tape;
  sten::forward_loss(p.phi, p.shape, p.alpha, p.batch, &tape);
  const sten::PhiWeights grads = sten::backward(tape, p.phi);
  const std::vector<double> analytic = sten::flatten(grads);
  const std::vector<double> x0 = sten::flatten(p.phi);
  auto f = [&](std::span<const double> x) {
    sten::PhiWeights w = p.phi;
    sten::unflatten(x, w);
    return sten::forward_loss(w, p.shape, p.alpha, p.batch).total;
  };
  const std::vector<double> numeric = sten::finite_diff_grad(f, x0, h);
  GradCheck out;
  out.coords = x0.size();
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    out.max_rel = std::max(out.max_rel, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return out;
}

}  // namespace toy
