// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "dsp.hpp"
#include "metrics.hpp"
#include "model.hpp"

namespace nacf {

// STFT used for the exported decay curves.
inline constexpr StftParams kPlotDecayStft{600, 150, 1024};

struct PlotBundle {
  int index = 0;
  int sample_rate = 0;
  Eigen::MatrixXd truth;      // T x 2
  Eigen::MatrixXd pred;       // T x 2
  Eigen::MatrixXd abs_error;  // T x 2
  // D x 2, 10 log10(E(d) / E(0)); NaN where E(0) is zero.
  Eigen::MatrixXd truth_decay_db;
  Eigen::MatrixXd pred_decay_db;
  std::vector<PairMetrics> metrics;  // one per channel
};

Eigen::MatrixXd DecayCurveDb(const Rir& rir, const StftParams& params);

PlotBundle MakePlotBundle(int index, const Rir& truth, const Rir& pred);

nlohmann::json PlotBundleToJson(const PlotBundle& bundle);

// Writes plot_{index}.json per dataset index; returns the written paths.
std::vector<std::filesystem::path> ExportPlots(const Model& model, const Dataset& dataset,
                                               const std::vector<int>& indices, bool refine,
                                               const std::filesystem::path& out_dir);

}  // namespace nacf
