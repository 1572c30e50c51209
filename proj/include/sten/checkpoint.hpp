// SPDX-License-Identifier: Apache-2.0
//
// Binary model checkpoint.
//
// Layout (all integers little-endian):
//   "STENCKPT"  u32 version
//   u32 n, n bytes    training config as key=value lines (plus input_dim)
//   u32 D, D f64 mean, D f64 stddev
//   u32 blocks, then per block: u32 name_len, name, u32 rows, u32 cols,
//                               rows*cols f32 in row-major order
//   u32 epochs, then per epoch 4 f64: otn, dsn, ep, total
//   u32 crc32 of every preceding byte
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sten/training.hpp"

namespace sten {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const TrainedModel& model);

/// Throws DataError on a bad magic, version, checksum or block layout.
TrainedModel deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& path);

/// 64-bit FNV-1a of a file's bytes as 16 hex digits, for telling checkpoints apart.
std::string file_hash(const std::filesystem::path& path);

}  // namespace sten
