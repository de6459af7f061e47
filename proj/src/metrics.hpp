// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "dsp.hpp"

namespace nacf {

// Schroeder backward-integrated energy in dB relative to its first value.
std::vector<double> SchroederDb(std::span<const double> h);

// Least-squares line on the [-5, -35] dB span of the Schroeder curve,
// extrapolated to 60 dB. Seconds.
double T60(std::span<const double> h, int sample_rate);

// 10 log10(early / late) around the 50 ms boundary. dB.
double C50(std::span<const double> h, int sample_rate);

// Six times the time for the Schroeder curve to reach -10 dB. Seconds.
double Edt(std::span<const double> h, int sample_rate);

struct PairMetrics {
  int pair = 0;
  int channel = 0;
  double t60_truth = 0.0, t60_pred = 0.0;
  double c50_truth = 0.0, c50_pred = 0.0;
  double edt_truth = 0.0, edt_pred = 0.0;
  bool t60_ok = false, c50_ok = false, edt_ok = false;
};

struct MetricsReport {
  double t60_error_percent = 0.0;
  double c50_error_db = 0.0;
  double edt_error_sec = 0.0;
  int t60_excluded = 0, c50_excluded = 0, edt_excluded = 0;
  std::vector<PairMetrics> details;
};

struct RirPair {
  Rir truth;
  Rir pred;
};

// Mean absolute errors over pairs and channels; a (pair, channel) whose
// metric is degenerate on either side is excluded from that metric only.
MetricsReport Evaluate(const std::vector<RirPair>& pairs);

nlohmann::json ReportToJson(const MetricsReport& report);

}  // namespace nacf
