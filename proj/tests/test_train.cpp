// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <set>

#include "checkpoint.hpp"
#include "error.hpp"
#include "fixtures.hpp"

namespace nacf {
namespace {

using testing::TinyDataset;
using testing::TinyTrainConfig;

std::vector<std::string> Lines(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(f, line);) out.push_back(line);
  return out;
}

TEST(TrainConfig, JsonRoundTripAndValidation) {
  TrainConfig c = TinyTrainConfig();
  c.stage = Stage::kRefine;
  c.ablations.use_multiscale = false;
  c.train_fraction = 0.25;
  const auto back = TrainConfigFromJson(TrainConfigToJson(c));
  EXPECT_EQ(TrainConfigToJson(back), TrainConfigToJson(c));
  EXPECT_EQ(back.Loss().scales.size(), 1u);
  EXPECT_THROW(TrainConfigFromJson({{"stage", "warmup"}}), Error);
  TrainConfig bad = c;
  bad.lr = 0.0;
  EXPECT_THROW(bad.Validate(), Error);
  bad = c;
  bad.train_fraction = 1.5;
  EXPECT_THROW(bad.Validate(), Error);
}

TEST(Subsample, SizesNestingAndDeterminism) {
  std::vector<int> train(1440);
  std::iota(train.begin(), train.end(), 0);
  EXPECT_EQ(SubsampleTraining(train, 0.05, 0).size(), 72u);
  EXPECT_EQ(SubsampleTraining(train, 1.0, 0), train);
  std::vector<int> previous;
  for (const double f : {0.05, 0.1, 0.2, 0.4, 0.6}) {
    const auto s = SubsampleTraining(train, f, 3);
    EXPECT_EQ(s.size(), static_cast<size_t>(std::llround(f * 1440)));
    EXPECT_EQ(s, SubsampleTraining(train, f, 3));
    ASSERT_GE(s.size(), previous.size());
    EXPECT_TRUE(std::equal(previous.begin(), previous.end(), s.begin())) << f;
    EXPECT_EQ(std::set<int>(s.begin(), s.end()).size(), s.size());
    previous = s;
  }
  EXPECT_NE(SubsampleTraining(train, 0.05, 3), SubsampleTraining(train, 0.05, 4));
  EXPECT_THROW(SubsampleTraining({1, 2, 3}, 0.01, 0), Error);
}

TEST(EpochOrder, PermutationDependsOnEpoch) {
  const auto a = EpochOrder(50, 1, 1), b = EpochOrder(50, 1, 2);
  EXPECT_EQ(std::set<size_t>(a.begin(), a.end()).size(), 50u);
  EXPECT_NE(a, b);
  EXPECT_EQ(a, EpochOrder(50, 1, 1));
}

TEST(Train, StepsPerEpoch) {
  TrainConfig c = TinyTrainConfig();
  c.epochs = 1;
  EXPECT_EQ(TrainStageMain(TinyDataset(), c, "").log.total_steps, 1);  // 12 items, batch 32
  c.batch_size = 5;
  EXPECT_EQ(TrainStageMain(TinyDataset(), c, "").log.total_steps, 3);
}

TEST(Train, LossDecreases) {
  TrainConfig c = TinyTrainConfig();
  c.epochs = 15;
  c.batch_size = 4;
  const auto r = TrainStageMain(TinyDataset(), c, "");
  ASSERT_EQ(r.log.epochs.size(), 15u);
  EXPECT_LT(r.log.epochs.back().loss, r.log.epochs.front().loss);
  for (const auto& e : r.log.epochs) EXPECT_TRUE(std::isfinite(e.loss));
}

TEST(Train, DeterministicAcrossRunsAndThreadCounts) {
  TrainConfig c = TinyTrainConfig();
  c.batch_size = 6;
  const auto a = TrainStageMain(TinyDataset(), c, "");
  const auto b = TrainStageMain(TinyDataset(), c, "");
  c.threads = 3;
  const auto d = TrainStageMain(TinyDataset(), c, "");
  for (size_t i = 0; i < a.final_model.params.size(); ++i) {
    EXPECT_EQ(a.final_model.params.value(i), b.final_model.params.value(i));
    EXPECT_EQ(a.final_model.params.value(i), d.final_model.params.value(i));
  }
  EXPECT_EQ(a.log.epochs.back().loss, d.log.epochs.back().loss);
}

TEST(Train, MainStageLeavesConvUntouched) {
  const TrainConfig c = TinyTrainConfig();
  const auto r = TrainStageMain(TinyDataset(), c, "");
  Model init = InitModel(ModelConfigFor(TinyDataset(), c), c.seed);
  RoundToCheckpointPrecision(init);
  bool moved = false;
  for (size_t i = 0; i < init.params.size(); ++i) {
    if (init.IsConvBlock(i))
      EXPECT_EQ(BlockSha256(init.params.value(i)), BlockSha256(r.final_model.params.value(i))) << init.params.name(i);
    else
      moved |= init.params.value(i) != r.final_model.params.value(i);
  }
  EXPECT_TRUE(moved);
}

TEST(Train, RefineFreezesEverythingButConv) {
  const TrainConfig c = TinyTrainConfig();
  const auto main = TrainStageMain(TinyDataset(), c, "");
  TrainConfig rc = c;
  rc.stage = Stage::kRefine;
  const auto refined = TrainStageRefine(TinyDataset(), rc, main.final_model, "");
  bool conv_moved = false;
  for (size_t i = 0; i < main.final_model.params.size(); ++i) {
    const auto& before = main.final_model.params.value(i);
    const auto& after = refined.final_model.params.value(i);
    if (main.final_model.IsConvBlock(i))
      conv_moved |= before != after;
    else
      EXPECT_EQ(BlockSha256(before), BlockSha256(after)) << main.final_model.params.name(i);
  }
  EXPECT_TRUE(conv_moved);
}

TEST(Train, ExactIdentityRefineReproducesMainLoss) {
  const TrainConfig c = TinyTrainConfig();
  const auto main = TrainStageMain(TinyDataset(), c, "");
  TrainConfig rc = c;
  rc.stage = Stage::kRefine;
  rc.exact_identity_conv = true;
  const auto refined = TrainStageRefine(TinyDataset(), rc, main.final_model, "");
  const auto items = PrepareItems(TinyDataset(), TinyDataset().Indices(Split::kTrain), main.final_model.config);
  std::vector<const TrainItem*> batch;
  for (const size_t i : EpochOrder(items.size(), rc.seed, 1)) batch.push_back(&items[i]);
  const double main_loss = BatchGradient(main.final_model, batch, c.Loss(), Stage::kMain, 1).loss;
  EXPECT_LE(testing::RelativeError(refined.log.first_batch_loss, main_loss), 1e-6);
}

TEST(Train, WritesCheckpointsAndLog) {
  const auto dir = testing::TempDir("train_out");
  TrainConfig c = TinyTrainConfig();
  c.epochs = 3;
  TrainStageMain(TinyDataset(), c, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "best"));
  EXPECT_TRUE(std::filesystem::exists(dir / "final"));
  const auto lines = Lines(dir / "train_log.jsonl");
  ASSERT_EQ(lines.size(), 4u);  // three epochs plus final test metrics
  const auto first = nlohmann::json::parse(lines[0]);
  EXPECT_EQ(first.at("epoch"), 1);
  EXPECT_EQ(first.at("scales").size(), 3u);
  EXPECT_TRUE(nlohmann::json::parse(lines[3]).contains("final_test_metrics"));
  const auto ck = LoadCheckpoint(dir / "final");
  EXPECT_EQ(ck.meta.at("stage"), "main");
  EXPECT_EQ(ck.meta.at("epoch"), 3);

  TrainConfig rc = c;
  rc.stage = Stage::kRefine;
  TrainStageRefine(TinyDataset(), rc, ck.model, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "refine_final"));
  EXPECT_EQ(LoadCheckpoint(dir / "refine_best").meta.at("temporal_trained"), true);
}

TEST(Train, WrongStageIsRejected) {
  TrainConfig c = TinyTrainConfig();
  c.stage = Stage::kRefine;
  EXPECT_THROW(TrainStageMain(TinyDataset(), c, ""), Error);
}

TEST(Evaluate, ReportOverTestSplit) {
  const auto r = TrainStageMain(TinyDataset(), TinyTrainConfig(), "");
  std::vector<RirPair> pairs;
  const auto report = EvaluateModel(r.final_model, TinyDataset(), Split::kTest, false, 1, &pairs);
  EXPECT_EQ(pairs.size(), 4u);
  EXPECT_EQ(report.details.size(), 8u);
}

TEST(FewShot, TrainItemCounts) {
  TrainConfig c = TinyTrainConfig();
  c.epochs = 1;
  const auto points = RunFewShot(TinyDataset(), c, {0.5, 1.0}, {0, 1});
  ASSERT_EQ(points.size(), 4u);
  std::multiset<int> sizes;
  for (const auto& p : points) sizes.insert(p.train_items);
  EXPECT_EQ(sizes, (std::multiset<int>{6, 6, 12, 12}));
}

}  // namespace
}  // namespace nacf
