// SPDX-License-Identifier: Apache-2.0
#include "sten/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "sten/errors.hpp"
#include "sten/graph.hpp"
#include "sten/optim.hpp"
#include "sten/params.hpp"
#include "sten/rng.hpp"
#include "sten/windowing.hpp"

namespace sten {

void TrainConfig::validate() const {
  layout.check(window_length);
  if (train_stride == 0) {
    throw ConfigError("train_stride must be >= 1");
  }
  if (d_model == 0) {
    throw ConfigError("d_model must be >= 1");
  }
  if (epochs == 0) {
    throw ConfigError("epochs must be >= 1");
  }
  if (batch_size == 0) {
    throw ConfigError("batch_size must be >= 1");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ConfigError("lr must be finite and >= 0");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("alpha must be finite and >= 0");
  }
  if (k_refs == 0) {
    throw ConfigError("k_refs must be >= 1");
  }
  if (mode == TrainMode::dsn_plus_ep && window_length < 2) {
    throw ConfigError("dsn_plus_ep needs windows of at least two steps");
  }
}

NetworkShape TrainConfig::shape(std::size_t input_dim) const {
  return NetworkShape{input_dim, d_model, layout, mode, separate_towers, normalize_embeddings};
}

std::uint64_t TrainConfig::phi_seed() const { return derive_seed(seed, "init.phi"); }

std::uint64_t TrainConfig::resolved_eta_seed() const {
  return eta_seed ? derive_seed(*eta_seed, "init.eta") : derive_seed(seed, "init.eta");
}

std::uint64_t permutation_seed(const TrainConfig& cfg, std::size_t epoch, std::size_t window) {
  return derive_seed(derive_seed(cfg.seed, "train.shuffle"), epoch, window);
}

namespace {

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed) {
  std::vector<std::size_t> order = random_permutation(n, seed);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  }
  // A trailing single window cannot form a pair; fold it into the previous batch.
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

}  // namespace

TrainedModel train(const MultivariateSeries& series, const TrainConfig& cfg, const EpochObserver& observer) {
  cfg.validate();
  series.validate();

  TrainedModel model;
  model.config = cfg;
  model.input_dim = series.dims();
  model.norm = zscore_fit(series);
  const MultivariateSeries normed = zscore_apply(series, model.norm);
  const auto windows = make_windows(normed, cfg.window_length, cfg.train_stride, TailPolicy::drop);
  const NetworkShape shape = model.shape();
  if (uses_distance_branch(cfg.mode) && windows.size() < 2) {
    throw DataError("training needs at least two windows for distance pairs, got " + std::to_string(windows.size()));
  }

  model.phi = init_phi(shape, cfg.phi_seed());
  model.eta = init_eta(shape, cfg.resolved_eta_seed());

  // The projector is frozen, so its window embeddings are computed once.
  Mat eta_all;
  if (uses_distance_branch(cfg.mode)) {
    const auto eta_w = to_working<GruWeights>(model.eta.gru);
    eta_all.resize(static_cast<Eigen::Index>(cfg.d_model), static_cast<Eigen::Index>(windows.size()));
    constexpr std::size_t kChunk = 512;
    for (std::size_t i = 0; i < windows.size(); i += kChunk) {
      std::vector<const Mat*> chunk;
      for (std::size_t k = i; k < std::min(windows.size(), i + kChunk); ++k) {
        chunk.push_back(&windows[k].data);
      }
      eta_all.middleCols(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(chunk.size())) =
          embed_batch(eta_w, chunk, cfg.normalize_embeddings);
    }
  }

  const AdamConfig adam_cfg{cfg.lr};
  AdamState adam;
  const std::uint64_t batch_seed = derive_seed(cfg.seed, "train.batches");
  const std::uint64_t pair_seed = derive_seed(cfg.seed, "train.pairs");

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = make_batches(windows.size(), cfg.batch_size, derive_seed(batch_seed, epoch, 0));
    LossBreakdown sum;
    std::vector<std::size_t> first_perm;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& idx = batches[bi];
      BatchInput batch;
      for (std::size_t w : idx) {
        batch.windows.push_back(&windows[w].data);
        auto perm = random_permutation(cfg.layout.count, permutation_seed(cfg, epoch, w));
        if (w == 0) {
          first_perm = perm;
        }
        batch.permutations.push_back(std::move(perm));
      }
      if (uses_distance_branch(cfg.mode)) {
        if (idx.size() < 2) {
          throw DataError("batch with a single window cannot form distance pairs");
        }
        batch.pairs = sample_pairs(idx.size(), derive_seed(pair_seed, epoch, bi), cfg.k_refs);
        batch.eta_embeddings.resize(static_cast<Eigen::Index>(cfg.d_model), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t b = 0; b < idx.size(); ++b) {
          batch.eta_embeddings.col(static_cast<Eigen::Index>(b)) = eta_all.col(static_cast<Eigen::Index>(idx[b]));
        }
      }

      const auto phi_w = to_working<PhiWeights>(model.phi);
      GradTape tape;
      const LossBreakdown loss = forward_loss(phi_w, shape, cfg.alpha, batch, &tape);
      const PhiWeights grads = backward(tape, phi_w);
      std::vector<double> flat = flatten(model.phi);
      const std::vector<double> flat_grads = flatten(grads);
      adam_update(flat, flat_grads, adam, adam_cfg);
      unflatten(flat, model.phi);

      sum.otn += loss.otn;
      sum.dsn += loss.dsn;
      sum.ep += loss.ep;
      sum.total += loss.total;
    }
    const auto nb = static_cast<double>(batches.size());
    LossBreakdown mean{sum.otn / nb, sum.dsn / nb, sum.ep / nb, sum.total / nb, cfg.alpha};
    model.trace.push_back(mean);
    if (observer) {
      observer(epoch, mean, first_perm);
    }
  }
  return model;
}

void write_loss_log(const std::filesystem::path& path, const std::vector<LossBreakdown>& trace) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out.precision(17);
  out << "epoch,otn,dsn,total\n";
  for (std::size_t e = 0; e < trace.size(); ++e) {
    const LossBreakdown& l = trace[e];
    out << (e + 1) << ',' << l.otn + l.ep << ',' << l.dsn << ',' << l.total << '\n';
  }
}

}  // namespace sten
