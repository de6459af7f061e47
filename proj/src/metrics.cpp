// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "metrics.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"

namespace nacf {

std::vector<double> SchroederDb(std::span<const double> h) {
  Require(!h.empty(), "decay curve needs a non-empty signal");
  std::vector<double> energy(h.size());
  double acc = 0.0;
  for (size_t i = h.size(); i-- > 0;) {
    acc += h[i] * h[i];
    energy[i] = acc;
  }
  if (!(acc > 0.0)) Fail(ErrorCode::kInsufficientDecay, "silent signal has no decay curve");
  const double total = acc;
  for (double& e : energy) e = e > 0.0 ? 10.0 * std::log10(e / total) : -std::numeric_limits<double>::infinity();
  return energy;
}

double T60(std::span<const double> h, int sample_rate) {
  Require(sample_rate > 0, "sample rate must be positive");
  const auto db = SchroederDb(h);
  size_t begin = db.size(), end = db.size();
  for (size_t i = 0; i < db.size(); ++i) {
    if (begin == db.size() && db[i] <= -5.0) begin = i;
    if (db[i] < -35.0) {
      end = i;
      break;
    }
  }
  if (end == db.size() || begin >= end || end - begin < 2)
    Fail(ErrorCode::kInsufficientDecay, "decay curve never spans -5 to -35 dB");
  // Fit in sample units; centred abscissa keeps the normal equations stable.
  const double n = static_cast<double>(end - begin);
  double mean_x = 0.0, mean_y = 0.0;
  for (size_t i = begin; i < end; ++i) {
    mean_x += static_cast<double>(i);
    mean_y += db[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = begin; i < end; ++i) {
    const double dx = static_cast<double>(i) - mean_x;
    sxy += dx * (db[i] - mean_y);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;  // dB per sample
  if (!(slope < 0.0)) Fail(ErrorCode::kInsufficientDecay, "decay curve has a non-negative slope");
  return -60.0 / slope / sample_rate;
}

double C50(std::span<const double> h, int sample_rate) {
  Require(sample_rate > 0, "sample rate must be positive");
  const auto boundary = static_cast<size_t>(std::lround(0.05 * sample_rate));
  Require(h.size() > boundary, "signal must be longer than 50 ms");
  double early = 0.0, late = 0.0;
  for (size_t i = 0; i < boundary; ++i) early += h[i] * h[i];
  for (size_t i = boundary; i < h.size(); ++i) late += h[i] * h[i];
  if (late == 0.0) Fail(ErrorCode::kDegenerate, "zero late energy: C50 is +infinity");
  if (early == 0.0) Fail(ErrorCode::kDegenerate, "zero early energy: C50 is -infinity");
  return 10.0 * std::log10(early / late);
}

double Edt(std::span<const double> h, int sample_rate) {
  Require(sample_rate > 0, "sample rate must be positive");
  const auto db = SchroederDb(h);
  for (size_t i = 1; i < db.size(); ++i) {
    if (db[i] <= -10.0) {
      // Linear interpolation of the -10 dB crossing between samples i-1 and i.
      double frac = 1.0;
      if (std::isfinite(db[i])) frac = (-10.0 - db[i - 1]) / (db[i] - db[i - 1]);
      const double crossing = static_cast<double>(i - 1) + frac;
      return 6.0 * crossing / sample_rate;
    }
  }
  Fail(ErrorCode::kInsufficientDecay, "decay curve never reaches -10 dB");
}

MetricsReport Evaluate(const std::vector<RirPair>& pairs) {
  Require(!pairs.empty(), "evaluation needs at least one pair");
  MetricsReport report;
  double t60_sum = 0.0, c50_sum = 0.0, edt_sum = 0.0;
  int t60_n = 0, c50_n = 0, edt_n = 0;
  auto attempt = [](auto fn, double& a, double& b) {
    try {
      fn(a, b);
      return true;
    } catch (const Error&) {
      return false;
    }
  };
  for (size_t p = 0; p < pairs.size(); ++p) {
    const auto& pair = pairs[p];
    Require(pair.truth.samples.cols() == 2 && pair.pred.samples.cols() == 2, "evaluation expects two-channel responses");
    for (int c = 0; c < 2; ++c) {
      const Eigen::VectorXd g = pair.truth.samples.col(c);
      const Eigen::VectorXd q = pair.pred.samples.col(c);
      const std::span<const double> gs(g.data(), static_cast<size_t>(g.size()));
      const std::span<const double> qs(q.data(), static_cast<size_t>(q.size()));
      PairMetrics m;
      m.pair = static_cast<int>(p);
      m.channel = c;
      m.t60_ok = attempt([&](double& a, double& b) { a = T60(gs, pair.truth.sample_rate); b = T60(qs, pair.pred.sample_rate); },
                         m.t60_truth, m.t60_pred);
      m.c50_ok = attempt([&](double& a, double& b) { a = C50(gs, pair.truth.sample_rate); b = C50(qs, pair.pred.sample_rate); },
                         m.c50_truth, m.c50_pred);
      m.edt_ok = attempt([&](double& a, double& b) { a = Edt(gs, pair.truth.sample_rate); b = Edt(qs, pair.pred.sample_rate); },
                         m.edt_truth, m.edt_pred);
      if (m.t60_ok) {
        t60_sum += 100.0 * std::abs(m.t60_pred - m.t60_truth) / m.t60_truth;
        ++t60_n;
      } else {
        ++report.t60_excluded;
      }
      if (m.c50_ok) {
        c50_sum += std::abs(m.c50_pred - m.c50_truth);
        ++c50_n;
      } else {
        ++report.c50_excluded;
      }
      if (m.edt_ok) {
        edt_sum += std::abs(m.edt_pred - m.edt_truth);
        ++edt_n;
      } else {
        ++report.edt_excluded;
      }
      report.details.push_back(m);
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.t60_error_percent = t60_n ? t60_sum / t60_n : nan;
  report.c50_error_db = c50_n ? c50_sum / c50_n : nan;
  report.edt_error_sec = edt_n ? edt_sum / edt_n : nan;
  return report;
}

nlohmann::json ReportToJson(const MetricsReport& report) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json details = json::array();
  for (const auto& m : report.details) {
    json d = {{"pair", m.pair}, {"channel", m.channel}};
    d["t60"] = m.t60_ok ? json{{"truth", m.t60_truth}, {"pred", m.t60_pred}} : json(nullptr);
    d["c50"] = m.c50_ok ? json{{"truth", m.c50_truth}, {"pred", m.c50_pred}} : json(nullptr);
    d["edt"] = m.edt_ok ? json{{"truth", m.edt_truth}, {"pred", m.edt_pred}} : json(nullptr);
    details.push_back(d);
  }
  return {{"t60_error_percent", num(report.t60_error_percent)},
          {"c50_error_db", num(report.c50_error_db)},
          {"edt_error_sec", num(report.edt_error_sec)},
          {"excluded", {{"t60", report.t60_excluded}, {"c50", report.c50_excluded}, {"edt", report.edt_excluded}}},
          {"pairs", details}};
}

}  // namespace nacf
