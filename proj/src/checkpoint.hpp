// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "model.hpp"

namespace nacf {

// Layout (all integers little-endian):
//   "NACFCKPT"  u32 version  u32 meta_len  meta (compact JSON)
//   u32 block_count
//   per block: u16 name_len  name  u32 rows  u32 cols  u64 offset
//   payload: float32 little-endian, each block row-major at `offset`
//            bytes from the payload start.
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  nlohmann::json meta;  // always carries "model" (ModelConfig) and "stage"
};

void SaveCheckpoint(const std::filesystem::path& path, const Model& model, nlohmann::json meta);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Rounds every block through float32, i.e. the values a save/load cycle yields.
void RoundToCheckpointPrecision(Model& model);

// SHA-256 over the raw bytes of a block (rows, cols, then column-major doubles).
std::string BlockSha256(const Eigen::MatrixXd& block);

}  // namespace nacf
