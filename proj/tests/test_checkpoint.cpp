// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <fstream>

#include "checkpoint.hpp"
#include "error.hpp"
#include "test_util.hpp"

namespace nacf {
namespace {

ModelConfig SmallConfig() {
  ModelConfig c;
  c.num_points = 2;
  c.rays_per_scan = 4;
  c.latent = 3;
  c.encoder_width = 4;
  c.field_width = 5;
  c.pe_frequencies = 2;
  c.rir_length = 32;
  return c;
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

TEST(Checkpoint, RoundTripIsFloatRounding) {
  const auto dir = testing::TempDir("ckpt");
  Model m = InitModel(SmallConfig(), 1);
  SaveCheckpoint(dir / "m", m, {{"stage", "main"}, {"epoch", 3}});
  const Checkpoint ck = LoadCheckpoint(dir / "m");
  EXPECT_EQ(ck.meta.at("stage"), "main");
  EXPECT_EQ(ck.meta.at("epoch"), 3);
  EXPECT_EQ(ModelConfigToJson(ck.model.config), ModelConfigToJson(m.config));
  RoundToCheckpointPrecision(m);
  ASSERT_EQ(ck.model.params.size(), m.params.size());
  for (size_t i = 0; i < m.params.size(); ++i) {
    EXPECT_EQ(ck.model.params.name(i), m.params.name(i));
    EXPECT_EQ(ck.model.params.value(i), m.params.value(i));
  }
  EXPECT_EQ(ck.model.head_w, m.head_w);
  EXPECT_EQ(ck.model.conv_w, m.conv_w);
}

TEST(Checkpoint, SaveIsDeterministic) {
  const auto dir = testing::TempDir("ckpt_det");
  const Model m = InitModel(SmallConfig(), 2);
  SaveCheckpoint(dir / "a", m, {{"stage", "main"}});
  SaveCheckpoint(dir / "b", m, {{"stage", "main"}});
  std::ifstream a(dir / "a", std::ios::binary), b(dir / "b", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(sa.substr(0, 8), "NACFCKPT");
}

TEST(Checkpoint, Errors) {
  const auto dir = testing::TempDir("ckpt_err");
  EXPECT_EQ(CodeOf([&] { LoadCheckpoint(dir / "missing"); }), ErrorCode::kIo);
  std::ofstream(dir / "junk") << "definitely not a checkpoint";
  EXPECT_EQ(CodeOf([&] { LoadCheckpoint(dir / "junk"); }), ErrorCode::kFormat);
  // Truncate a valid file.
  SaveCheckpoint(dir / "ok", InitModel(SmallConfig(), 3), {{"stage", "main"}});
  const auto size = std::filesystem::file_size(dir / "ok");
  std::filesystem::resize_file(dir / "ok", size - 16);
  EXPECT_EQ(CodeOf([&] { LoadCheckpoint(dir / "ok"); }), ErrorCode::kFormat);
}

TEST(Checkpoint, BlockHash) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(2, 3);
  const std::string h = BlockSha256(a);
  EXPECT_EQ(h.size(), 64u);
  EXPECT_EQ(h, BlockSha256(a));
  a(1, 2) = std::nextafter(1.0, 2.0);
  EXPECT_NE(h, BlockSha256(a));
  EXPECT_NE(BlockSha256(Eigen::MatrixXd::Ones(3, 2)), BlockSha256(Eigen::MatrixXd::Ones(2, 3)));
}

}  // namespace
}  // namespace nacf
