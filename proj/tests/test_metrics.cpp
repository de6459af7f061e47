// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>

#include "error.hpp"
#include "metrics.hpp"
#include "oracles.hpp"

namespace nacf {
namespace {

constexpr int kFs = 16000;

std::vector<double> ExponentialEnvelope(double t60, int length) {
  std::vector<double> h(static_cast<size_t>(length));
  const double k = 3.0 * std::log(10.0) / (t60 * kFs);  // amplitude falls 60 dB (energy) in t60
  for (int n = 0; n < length; ++n) h[static_cast<size_t>(n)] = std::exp(-k * n);
  return h;
}

Rir Stereo(const std::vector<double>& left, const std::vector<double>& right) {
  Rir r;
  r.sample_rate = kFs;
  r.samples.resize(static_cast<Eigen::Index>(left.size()), 2);
  for (size_t i = 0; i < left.size(); ++i) {
    r.samples(static_cast<Eigen::Index>(i), 0) = left[i];
    r.samples(static_cast<Eigen::Index>(i), 1) = right[i];
  }
  return r;
}

TEST(Metrics, ExponentialDecayT60AndEdt) {
  const auto h = ExponentialEnvelope(0.3, kFs);
  EXPECT_NEAR(T60(h, kFs), 0.3, 0.015);
  EXPECT_NEAR(Edt(h, kFs), 0.3, 0.015);
}

TEST(Metrics, DecayingNoiseT60AndEdt) {
  Rng rng(1);
  for (const double t60 : {0.2, 0.3, 0.6}) {
    const auto h = oracle::DecayingNoise(rng, t60, kFs, 2 * kFs);
    EXPECT_NEAR(T60(h, kFs), t60, 0.05 * t60);
    EXPECT_NEAR(Edt(h, kFs), t60, 0.05 * t60);
  }
}

TEST(Metrics, C50MatchesDirectSums) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = oracle::DecayingNoise(rng, rng.Uniform(0.1, 0.8), kFs, 8000);
    EXPECT_NEAR(C50(h, kFs), oracle::C50BySums(h, kFs), 1e-9);
  }
}

TEST(Metrics, SchroederStartsAtZeroDbAndDecreases) {
  Rng rng(3);
  const auto db = SchroederDb(oracle::DecayingNoise(rng, 0.4, kFs, 4000));
  EXPECT_EQ(db[0], 0.0);
  for (size_t i = 1; i < db.size(); ++i) ASSERT_LE(db[i], db[i - 1]);
}

TEST(Metrics, InvariantToPositiveScaling) {
  Rng rng(4);
  const auto h = oracle::DecayingNoise(rng, 0.35, kFs, kFs);
  for (const double a : {0.5, 3.0, 1e-3, 1e4}) {
    std::vector<double> s(h);
    for (double& x : s) x *= a;
    EXPECT_NEAR(T60(s, kFs), T60(h, kFs), 1e-9);
    EXPECT_NEAR(Edt(s, kFs), Edt(h, kFs), 1e-9);
    EXPECT_NEAR(C50(s, kFs), C50(h, kFs), 1e-9);
  }
}

TEST(Metrics, DegenerateInputsAreReported) {
  const std::vector<double> zeros(4000, 0.0);
  auto code = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return static_cast<ErrorCode>(0);
  };
  EXPECT_EQ(code([&] { T60(zeros, kFs); }), ErrorCode::kInsufficientDecay);
  EXPECT_EQ(code([&] { Edt(zeros, kFs); }), ErrorCode::kInsufficientDecay);
  std::vector<double> early_only(4000, 0.0);
  early_only[10] = 1.0;
  EXPECT_EQ(code([&] { C50(early_only, kFs); }), ErrorCode::kDegenerate);
  std::vector<double> late_only(4000, 0.0);
  late_only[3000] = 1.0;
  EXPECT_EQ(code([&] { C50(late_only, kFs); }), ErrorCode::kDegenerate);
  // A constant signal never decays by 35 dB before its tail.
  EXPECT_EQ(code([&] { T60(std::vector<double>(100, 1.0), kFs); }), ErrorCode::kInsufficientDecay);
}

TEST(Evaluate, MeanOverPairsAndChannels) {
  // Truth T60 0.3 everywhere; predictions off by 2% and 4%.
  const auto truth = ExponentialEnvelope(0.3, kFs);
  const double t_truth = T60(truth, kFs);
  std::vector<RirPair> pairs;
  for (const double rel : {1.02, 1.04}) {
    // Solve for the envelope whose measured T60 is rel * t_truth: the
    // measurement scales linearly with the decay time for a pure exponential.
    const auto pred = ExponentialEnvelope(0.3 * rel, kFs);
    pairs.push_back({Stereo(truth, truth), Stereo(pred, pred)});
    EXPECT_NEAR(T60(pred, kFs) / t_truth, rel, 1e-3);
  }
  const auto report = Evaluate(pairs);
  EXPECT_NEAR(report.t60_error_percent, 3.0, 0.1);
  EXPECT_EQ(report.details.size(), 4u);
  EXPECT_EQ(report.t60_excluded, 0);
}

TEST(Evaluate, ExcludesDegeneratePairsPerMetric) {
  Rng rng(5);
  const auto good = oracle::DecayingNoise(rng, 0.3, kFs, kFs);
  const std::vector<double> silent(static_cast<size_t>(kFs), 0.0);
  const auto report = Evaluate({{Stereo(good, good), Stereo(good, silent)}});
  EXPECT_EQ(report.t60_excluded, 1);
  EXPECT_EQ(report.c50_excluded, 1);
  EXPECT_EQ(report.edt_excluded, 1);
  EXPECT_NEAR(report.t60_error_percent, 0.0, 1e-12);
  const auto json = ReportToJson(report);
  EXPECT_TRUE(json.contains("t60_error_percent"));
  EXPECT_TRUE(json.contains("c50_error_db"));
  EXPECT_TRUE(json.contains("edt_error_sec"));
}

TEST(Evaluate, EmptyIsRejected) { EXPECT_THROW(Evaluate({}), Error); }

}  // namespace
}  // namespace nacf
