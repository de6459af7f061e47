// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "nacf/nacf.h"

namespace {

namespace fs = std::filesystem;

constexpr const char* kTinyData =
    R"({"room": {"rir_length": 1024, "max_image_order": 3},
        "grid": {"emitters_x": 2, "emitters_y": 2, "receivers": [[2.5, 2.0]]},
        "context": {"num_points": 2, "rays_per_scan": 4}, "test_fraction": 0.25})";
constexpr const char* kTinyTrain =
    R"({"epochs": 2, "batch_size": 8, "threads": 1,
        "model": {"latent": 4, "encoder_width": 6, "field_width": 5, "pe_frequencies": 3}})";

fs::path Scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nacf_capi_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

class CApi : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(Scratch("suite"));
    ASSERT_EQ(nacf_generate_dataset(kTinyData, (*root_ / "data").c_str(), 5, 1), NACF_OK) << nacf_last_error();
    ASSERT_EQ(nacf_dataset_open((*root_ / "data").c_str(), &dataset_), NACF_OK);
    ASSERT_EQ(nacf_train_main(dataset_, kTinyTrain, -1, (*root_ / "ck").c_str()), NACF_OK) << nacf_last_error();
  }
  static void TearDownTestSuite() {
    nacf_dataset_free(dataset_);
    fs::remove_all(*root_);
    delete root_;
  }
  static fs::path* root_;
  static nacf_dataset* dataset_;
};

fs::path* CApi::root_ = nullptr;
nacf_dataset* CApi::dataset_ = nullptr;

TEST_F(CApi, DatasetSizes) {
  size_t n = 0, train = 0, test = 0;
  EXPECT_EQ(nacf_dataset_size(dataset_, &n), NACF_OK);
  EXPECT_EQ(nacf_dataset_split_size(dataset_, NACF_SPLIT_TRAIN, &train), NACF_OK);
  EXPECT_EQ(nacf_dataset_split_size(dataset_, NACF_SPLIT_TEST, &test), NACF_OK);
  EXPECT_EQ(n, 16u);
  EXPECT_EQ(train, 12u);
  EXPECT_EQ(test, 4u);
}

TEST_F(CApi, RenderAndEvaluate) {
  nacf_model* model = nullptr;
  ASSERT_EQ(nacf_model_load((*root_ / "ck" / "best").c_str(), &model), NACF_OK);
  size_t len = 0;
  int rate = 0;
  EXPECT_EQ(nacf_model_rir_length(model, &len), NACF_OK);
  EXPECT_EQ(nacf_model_sample_rate(model, &rate), NACF_OK);
  EXPECT_EQ(len, 1024u);
  EXPECT_EQ(rate, 16000);
  std::vector<double> out(2 * len);
  EXPECT_EQ(nacf_render_entry(model, dataset_, 3, out.data(), out.size()), NACF_OK);
  for (const double x : out) ASSERT_TRUE(std::isfinite(x));
  EXPECT_EQ(nacf_render_entry(model, dataset_, 3, out.data(), out.size() - 1), NACF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nacf_render_entry(model, dataset_, 16, out.data(), out.size()), NACF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nacf_render_query(model, dataset_, 1.0, 1.0, 3.0, 2.0, 90.0, out.data(), out.size()), NACF_OK);
  EXPECT_EQ(nacf_render_query(model, dataset_, 1.0, 1.0, 3.0, 2.0, 45.0, out.data(), out.size()),
            NACF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nacf_render_query(model, dataset_, 9.0, 1.0, 3.0, 2.0, 0.0, out.data(), out.size()),
            NACF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nacf_write_wav((*root_ / "x.wav").c_str(), out.data(), len, rate), NACF_OK);
  EXPECT_EQ(fs::file_size(*root_ / "x.wav"), 44u + 8u * len);

  const auto report = *root_ / "report.json";
  ASSERT_EQ(nacf_evaluate(model, dataset_, NACF_SPLIT_TEST, 1, report.c_str()), NACF_OK) << nacf_last_error();
  std::ifstream f(report);
  const auto j = nlohmann::json::parse(f);
  EXPECT_TRUE(j.contains("t60_error_percent"));
  EXPECT_TRUE(j.contains("c50_error_db"));
  EXPECT_TRUE(j.contains("edt_error_sec"));

  const size_t indices[] = {0, 2};
  EXPECT_EQ(nacf_export_plots(model, dataset_, indices, 2, (*root_ / "plots").c_str()), NACF_OK);
  EXPECT_TRUE(fs::exists(*root_ / "plots" / "plot_2.json"));
  nacf_model_free(model);
}

TEST_F(CApi, RefineNeedsMainCheckpoint) {
  EXPECT_EQ(nacf_train_refine(dataset_, kTinyTrain, -1, (*root_ / "nope").c_str(), (*root_ / "r").c_str()),
            NACF_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(nacf_last_error()), "");
  ASSERT_EQ(nacf_train_refine(dataset_, kTinyTrain, -1, (*root_ / "ck" / "final").c_str(), (*root_ / "r").c_str()),
            NACF_OK)
      << nacf_last_error();
  EXPECT_TRUE(fs::exists(*root_ / "r" / "refine_final"));
  // A refine checkpoint is not a valid starting point for another refine.
  EXPECT_EQ(nacf_train_refine(dataset_, kTinyTrain, -1, (*root_ / "r" / "refine_final").c_str(),
                              (*root_ / "r2").c_str()),
            NACF_ERR_INVALID_ARGUMENT);
}

TEST_F(CApi, FewShotReport) {
  const double fractions[] = {0.5, 1.0};
  const uint64_t seeds[] = {0};
  const auto report = *root_ / "fewshot.json";
  const char* cfg = R"({"epochs": 1, "threads": 1, "model": {"latent": 4, "encoder_width": 6, "field_width": 5}})";
  ASSERT_EQ(nacf_fewshot(dataset_, cfg, fractions, 2, seeds, 1, report.c_str()), NACF_OK) << nacf_last_error();
  std::ifstream f(report);
  const auto j = nlohmann::json::parse(f);
  ASSERT_EQ(j.at("runs").size(), 2u);
  EXPECT_EQ(j.at("runs")[0].at("train_items"), 6);
}

TEST(CApiErrors, StatusMapping) {
  nacf_dataset* ds = nullptr;
  EXPECT_EQ(nacf_dataset_open("/nonexistent/nacf", &ds), NACF_ERR_IO);
  EXPECT_EQ(ds, nullptr);
  EXPECT_EQ(nacf_dataset_open(nullptr, &ds), NACF_ERR_INVALID_ARGUMENT);
  nacf_model* m = nullptr;
  EXPECT_EQ(nacf_model_load("/nonexistent/ckpt", &m), NACF_ERR_IO);
  const auto dir = Scratch("errors");
  EXPECT_EQ(nacf_generate_dataset("{not json", (dir / "d").c_str(), 1, 1), NACF_ERR_FORMAT);
  EXPECT_EQ(nacf_generate_dataset(R"({"test_fraction": 2.0})", (dir / "d").c_str(), 1, 1), NACF_ERR_INVALID_ARGUMENT);
  EXPECT_STREQ(nacf_status_name(NACF_ERR_NON_FINITE), "non-finite");
  EXPECT_NE(std::string(nacf_version()), "");
  fs::remove_all(dir);
}

}  // namespace
