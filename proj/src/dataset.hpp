// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "room.hpp"

namespace nacf {

struct GridSpec {
  int emitters_x = 10;
  int emitters_y = 10;
  double margin = 0.2;
  std::vector<Vec2> receivers;  // empty -> DefaultReceivers(room)
  std::vector<int> orientations{0, 90, 180, 270};
};

struct DatasetConfig {
  RoomSpec room = DefaultRoom();
  GridSpec grid;
  int num_points = 4;
  int rays_per_scan = 32;
  double test_fraction = 0.1;
  double z_height = 1.5;
};

enum class Split { kTrain, kTest };

struct Entry {
  int index = 0;
  Query query;
  std::string file;
  Split split = Split::kTrain;
  std::vector<BoundaryContext> contexts;
};

struct Dataset {
  std::filesystem::path dir;
  DatasetConfig config;
  uint64_t seed = 0;
  std::vector<Entry> entries;

  std::vector<int> Indices(Split split) const;
  Rir LoadRir(const Entry& entry) const;
};

std::vector<Vec2> DefaultReceivers(const RoomSpec& room);

// Emitter grid x receivers x orientations, in that nesting order.
std::vector<Query> EnumerateQueries(const DatasetConfig& config);

// Seeded shuffle of [0, n); the first round(n * test_fraction) go to test.
std::vector<Split> AssignSplits(size_t n, double test_fraction, uint64_t seed);

// Writes rir_{index}.wav, contexts.json and manifest.json under `out_dir`.
void GenerateDataset(const DatasetConfig& config, const std::filesystem::path& out_dir,
                     uint64_t seed, int threads);

Dataset LoadDataset(const std::filesystem::path& dir);

// JSON codecs. Missing keys keep their defaults when reading.
nlohmann::json RoomToJson(const RoomSpec& room);
RoomSpec RoomFromJson(const nlohmann::json& j);
nlohmann::json DatasetConfigToJson(const DatasetConfig& config);
DatasetConfig DatasetConfigFromJson(const nlohmann::json& j);
nlohmann::json ContextToJson(const BoundaryContext& ctx);
BoundaryContext ContextFromJson(const nlohmann::json& j);

nlohmann::json ReadJsonFile(const std::filesystem::path& path);
// Writes `j.dump(2)` plus a trailing newline.
void WriteJsonFile(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace nacf
