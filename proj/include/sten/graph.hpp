// SPDX-License-Identifier: Apache-2.0
//
// Batched evaluation of the joint training loss and its exact gradient.
//
// The order branch runs every (window, slot) sub-sequence through the shared
// GRU in one batch and scores the order head against the slot's true
// position. The distance branch encodes each window once and distils the
// projector's pairwise dot products. The EP ablation adds a next-step head on
// the window encoder's hidden states.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sten/gru.hpp"
#include "sten/networks.hpp"
#include "sten/objectives.hpp"

namespace sten {

struct BatchInput {
  std::vector<const Mat*> windows;                      // each L x D
  std::vector<std::vector<std::size_t>> permutations;   // per window: slot -> true position
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // window index pairs
  Mat eta_embeddings;                                   // d_model x B
};

/// Forward intermediates of one loss evaluation.
struct GradTape {
  std::uint64_t fingerprint = 0;
  NetworkShape shape;
  double alpha = 1.0;
  std::size_t batch = 0;

  std::vector<Mat> otn_inputs;
  GruTape otn_gru;
  Mat otn_hidden;
  Mat probs;
  std::vector<std::size_t> labels;

  std::vector<Mat> seq_inputs;
  GruTape seq_gru;
  Mat seq_hidden;
  Mat embeddings;  // after optional normalisation
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> residuals;  // d_phi - d_eta per pair

  std::vector<Mat> ep_errors;  // prediction - target, D x B per step
};

/// Hash of every parameter value; used to reject stale tapes.
std::uint64_t fingerprint(const PhiWeights& phi);

/// Per-step input matrices (D x B) for a batch of equally long windows.
std::vector<Mat> stack_steps(std::span<const Mat* const> windows);

/// Projector embeddings of a batch of windows (d_model x B).
Mat embed_batch(const GruWeights& gru, std::span<const Mat* const> windows, bool normalize);

LossBreakdown forward_loss(const PhiWeights& phi, const NetworkShape& shape, double alpha, const BatchInput& batch,
                           GradTape* tape = nullptr);

/// Reverse pass over `tape`; throws std::logic_error if `phi` no longer
/// matches the parameters the tape was recorded with.
PhiWeights backward(const GradTape& tape, const PhiWeights& phi, double loss_grad = 1.0);

}  // namespace sten
