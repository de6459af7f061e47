// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "model.hpp"

namespace nacf {

enum class Stage { kMain, kRefine };

struct Ablations {
  bool use_context = true;
  bool use_multiscale = true;
  bool use_temporal = true;
};

// Widths used when the config does not override them.
struct ModelSize {
  int latent = 32;
  int encoder_width = 64;
  int field_width = 32;
  int pe_frequencies = 10;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double lr = 5e-4;
  Stage stage = Stage::kMain;
  Ablations ablations;
  double train_fraction = 1.0;
  uint64_t seed = 0;

  ModelSize model;
  // Refine stage: start the conv stack at the exact identity (no noise).
  bool exact_identity_conv = false;
  int threads = 0;  // 0 -> hardware concurrency

  LossConfig Loss() const;
  void Validate() const;
};

nlohmann::json TrainConfigToJson(const TrainConfig& c);
TrainConfig TrainConfigFromJson(const nlohmann::json& j);

struct EpochRecord {
  int epoch = 0;
  int steps = 0;
  double loss = 0.0;
  std::vector<ScaleLoss> scales;
  double wall_time_sec = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  double first_batch_loss = 0.0;  // before the first update
  int total_steps = 0;
  std::optional<MetricsReport> test_metrics;
};

struct TrainResult {
  Model final_model;
  Model best_model;  // lowest epoch-mean training loss
  TrainLog log;
};

// Model dimensions implied by a dataset plus the configured widths.
ModelConfig ModelConfigFor(const Dataset& dataset, const TrainConfig& config);

// Prefix of one seeded shuffle of `train`, size round(fraction * |train|).
std::vector<int> SubsampleTraining(const std::vector<int>& train, double fraction, uint64_t seed);

// Training item with everything the loss graph needs preloaded.
struct TrainItem {
  int index = 0;
  int orientation = 0;
  std::array<Eigen::MatrixXd, kNumModalities> features;
  Eigen::MatrixXd truth;  // T x 2
  Eigen::MatrixXd cached_field;  // refine stage: frozen field output
};

std::vector<TrainItem> PrepareItems(const Dataset& dataset, const std::vector<int>& indices, const ModelConfig& config);

struct BatchResult {
  double loss = 0.0;  // mean over items
  std::vector<ScaleLoss> scales;
  std::vector<Eigen::MatrixXd> grads;  // per parameter block, mean over items
};

// Loss and gradients of the batch-mean loss. Refine batches use
// TrainItem::cached_field and only reach the conv blocks.
BatchResult BatchGradient(const Model& model, const std::vector<const TrainItem*>& batch, const LossConfig& loss,
                          Stage stage, int threads);

// Batch order of one epoch: a seeded shuffle of item positions.
std::vector<size_t> EpochOrder(size_t n, uint64_t seed, int epoch);

// Checkpoints (`best`, `final`) and the JSON-lines log go to `out_dir`
// unless it is empty.
TrainResult TrainStageMain(const Dataset& dataset, const TrainConfig& config, const std::filesystem::path& out_dir);
TrainResult TrainStageRefine(const Dataset& dataset, const TrainConfig& config, const Model& main_model,
                             const std::filesystem::path& out_dir);

// Renders every entry of `split` and scores it against the stored truth.
MetricsReport EvaluateModel(const Model& model, const Dataset& dataset, Split split, bool refine, int threads,
                            std::vector<RirPair>* pairs = nullptr);

struct FewShotPoint {
  double fraction = 0.0;
  uint64_t seed = 0;
  int train_items = 0;
  MetricsReport metrics;
};

std::vector<FewShotPoint> RunFewShot(const Dataset& dataset, const TrainConfig& config,
                                     const std::vector<double>& fractions, const std::vector<uint64_t>& seeds);

nlohmann::json EpochToJson(const EpochRecord& r);

}  // namespace nacf
