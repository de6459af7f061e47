// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "dataset.hpp"
#include "test_util.hpp"
#include "trainer.hpp"

namespace nacf::testing {

// 2 x 2 emitters, one receiver, four orientations: 16 short responses.
inline DatasetConfig TinyDatasetConfig() {
  DatasetConfig c;
  c.room.rir_length = 1024;
  c.room.max_image_order = 3;
  c.grid.emitters_x = 2;
  c.grid.emitters_y = 2;
  c.grid.receivers = {Vec2(2.5, 2.0)};
  c.num_points = 2;
  c.rays_per_scan = 4;
  c.test_fraction = 0.25;
  return c;
}

// Generated once per process.
inline const Dataset& TinyDataset() {
  static const Dataset ds = [] {
    const auto dir = TempDir("tiny_dataset");
    GenerateDataset(TinyDatasetConfig(), dir, 3, 1);
    return LoadDataset(dir);
  }();
  return ds;
}

inline TrainConfig TinyTrainConfig() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 32;
  c.lr = 1e-3;
  c.model = {4, 6, 5, 3};
  c.threads = 1;
  return c;
}

}  // namespace nacf::testing
