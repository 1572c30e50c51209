// SPDX-License-Identifier: Apache-2.0
#include "sten/networks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>

#include <zlib.h>

#include "sten/errors.hpp"
#include "sten/params.hpp"

namespace sten {

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::full:
      return "full";
    case TrainMode::otn_only:
      return "otn_only";
    case TrainMode::dsn_only:
      return "dsn_only";
    case TrainMode::dsn_plus_ep:
      return "dsn_plus_ep";
  }
  return "unknown";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "full") {
    return TrainMode::full;
  }
  if (s == "otn_only") {
    return TrainMode::otn_only;
  }
  if (s == "dsn_only") {
    return TrainMode::dsn_only;
  }
  if (s == "dsn_plus_ep") {
    return TrainMode::dsn_plus_ep;
  }
  throw ConfigError("unknown mode '" + s + "' (expected full|otn_only|dsn_only|dsn_plus_ep)");
}

std::uint32_t EtaParams::checksum() const {
  uLong crc = crc32(0L, Z_NULL, 0);
  GruParams::visit(
      [&](const std::string&, const Matrix& m) {
        for (float v : m.data()) {
          const auto bits = std::bit_cast<std::uint32_t>(v);
          const unsigned char bytes[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8U),
                                          static_cast<unsigned char>(bits >> 16U),
                                          static_cast<unsigned char>(bits >> 24U)};
          crc = crc32(crc, bytes, 4);
        }
      },
      gru);
  return static_cast<std::uint32_t>(crc);
}

PhiParams init_phi(const NetworkShape& shape, std::uint64_t seed) {
  if (shape.input_dim == 0 || shape.d_model == 0) {
    throw ConfigError("input_dim and d_model must be >= 1");
  }
  PhiParams phi;
  phi.gru = make_gru_params(shape.input_dim, shape.d_model);
  if (shape.separate_towers) {
    phi.seq_gru = make_gru_params(shape.input_dim, shape.d_model);
  }
  phi.head_w = Matrix(shape.layout.count, shape.d_model);
  phi.head_b = Matrix(shape.layout.count, 1);
  if (uses_ep_head(shape.mode)) {
    phi.ep_w = Matrix(shape.input_dim, shape.d_model);
    phi.ep_b = Matrix(shape.input_dim, 1);
  }
  std::mt19937_64 rng(seed);
  init_uniform(phi, 1.0 / std::sqrt(static_cast<double>(shape.d_model)), rng);
  return phi;
}

EtaParams init_eta(const NetworkShape& shape, std::uint64_t seed) {
  EtaParams eta;
  eta.gru = make_gru_params(shape.input_dim, shape.d_model);
  std::mt19937_64 rng(seed);
  init_uniform(eta.gru, 1.0 / std::sqrt(static_cast<double>(shape.d_model)), rng);
  return eta;
}

Vec encode_subseq(const PhiWeights& phi, const SubSeq& s) {
  if (s.data.rows() != static_cast<Eigen::Index>(s.length)) {
    throw std::invalid_argument("encode_subseq: row count does not match sub-sequence length");
  }
  if (s.data.cols() != phi.gru.w_z.cols()) {
    throw std::invalid_argument("encode_subseq: input dimension mismatch");
  }
  return gru_encode(s.data, phi.gru);
}

OrderPrediction order_probs(const PhiWeights& phi, const ShuffledCollection& collection) {
  const auto m = static_cast<Eigen::Index>(collection.subseqs.size());
  if (m != phi.head_w.rows()) {
    throw std::invalid_argument("order_probs: collection size does not match the order head");
  }
  OrderPrediction out;
  out.probs.resize(m, m);
  for (Eigen::Index slot = 0; slot < m; ++slot) {
    const Vec h = encode_subseq(phi, collection.subseqs[static_cast<std::size_t>(slot)]);
    const Vec logits = phi.head_w * h + phi.head_b.col(0);
    out.probs.row(slot) = softmax_columns(logits).transpose();
  }
  out.labels = collection.one_hot();
  return out;
}

Vec embed_sequence(const GruWeights& gru, const Window& w) {
  if (w.data.rows() != static_cast<Eigen::Index>(w.length)) {
    throw std::invalid_argument("embed_sequence: row count does not match window length");
  }
  if (w.data.cols() != gru.w_z.cols()) {
    throw std::invalid_argument("embed_sequence: input dimension mismatch");
  }
  return gru_encode(w.data, gru);
}

Vec embed_sequence(const PhiWeights& phi, const Window& w) { return embed_sequence(phi.sequence_gru(), w); }

Mat normalize_columns(const Mat& e) {
  Mat out = e;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    out.col(c) /= std::max(out.col(c).norm(), 1e-12);
  }
  return out;
}

double pair_distance(const Vec& a, const Vec& b, bool normalize) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("pair_distance: dimension mismatch");
  }
  const double d = a.dot(b);
  if (!normalize) {
    return d;
  }
  return d / (std::max(a.norm(), 1e-12) * std::max(b.norm(), 1e-12));
}

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n, std::uint64_t seed, std::size_t k) {
  if (n < 2) {
    throw DataError("pair sampling needs at least two sequences");
  }
  if (k == 0) {
    throw ConfigError("k_refs must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 2);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < k; ++r) {
      std::size_t j = pick(rng);
      if (j >= i) {
        ++j;
      }
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

}  // namespace sten
