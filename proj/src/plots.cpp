// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "plots.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"
#include "losses.hpp"

namespace nacf {

using nlohmann::json;

namespace {

json Column(const Eigen::MatrixXd& m, Eigen::Index c) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double v = m(r, c);
    out.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  }
  return out;
}

json Channels(const Eigen::MatrixXd& m) { return {{"left", Column(m, 0)}, {"right", Column(m, 1)}}; }

json MetricValue(bool ok, double v) { return ok && std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

Eigen::MatrixXd DecayCurveDb(const Rir& rir, const StftParams& params) {
  const Eigen::MatrixXd e = EnergyDecayCurve(StftMagnitude(rir, params));
  Eigen::MatrixXd out(e.rows(), e.cols());
  for (Eigen::Index c = 0; c < e.cols(); ++c) {
    const double ref = e(0, c);
    for (Eigen::Index d = 0; d < e.rows(); ++d)
      out(d, c) = ref > 0.0 ? 10.0 * std::log10(e(d, c) / ref) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

PlotBundle MakePlotBundle(int index, const Rir& truth, const Rir& pred) {
  truth.Validate();
  pred.Validate();
  Require(truth.length() == pred.length() && truth.sample_rate == pred.sample_rate,
          "plot pair must share length and sample rate");
  PlotBundle b;
  b.index = index;
  b.sample_rate = truth.sample_rate;
  b.truth = truth.samples;
  b.pred = pred.samples;
  b.abs_error = (truth.samples - pred.samples).cwiseAbs();
  b.truth_decay_db = DecayCurveDb(truth, kPlotDecayStft);
  b.pred_decay_db = DecayCurveDb(pred, kPlotDecayStft);
  b.metrics = Evaluate({RirPair{truth, pred}}).details;
  return b;
}

json PlotBundleToJson(const PlotBundle& b) {
  json metrics = json::array();
  for (const auto& m : b.metrics) {
    metrics.push_back({{"channel", m.channel == 0 ? "left" : "right"},
                       {"t60_truth", MetricValue(m.t60_ok, m.t60_truth)},
                       {"t60_pred", MetricValue(m.t60_ok, m.t60_pred)},
                       {"c50_truth", MetricValue(m.c50_ok, m.c50_truth)},
                       {"c50_pred", MetricValue(m.c50_ok, m.c50_pred)},
                       {"edt_truth", MetricValue(m.edt_ok, m.edt_truth)},
                       {"edt_pred", MetricValue(m.edt_ok, m.edt_pred)}});
  }
  return {{"index", b.index},
          {"sample_rate", b.sample_rate},
          {"length", b.truth.rows()},
          {"truth", Channels(b.truth)},
          {"pred", Channels(b.pred)},
          {"abs_error", Channels(b.abs_error)},
          {"decay_stft",
           {{"window_size", kPlotDecayStft.window_size},
            {"hop_size", kPlotDecayStft.hop_size},
            {"fft_size", kPlotDecayStft.fft_size}}},
          {"truth_decay_db", Channels(b.truth_decay_db)},
          {"pred_decay_db", Channels(b.pred_decay_db)},
          {"metrics", metrics}};
}

std::vector<std::filesystem::path> ExportPlots(const Model& model, const Dataset& dataset,
                                               const std::vector<int>& indices, bool refine,
                                               const std::filesystem::path& out_dir) {
  Require(!indices.empty(), "plot export needs at least one index");
  for (int i : indices)
    Require(i >= 0 && static_cast<size_t>(i) < dataset.entries.size(),
            "plot index " + std::to_string(i) + " is out of range");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create directory " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (int i : indices) {
    const auto& entry = dataset.entries[static_cast<size_t>(i)];
    const Rir truth = dataset.LoadRir(entry);
    const Rir pred = RenderRir(model, entry.query, entry.contexts, refine);
    const auto path = out_dir / ("plot_" + std::to_string(i) + ".json");
    WriteJsonFile(path, PlotBundleToJson(MakePlotBundle(i, truth, pred)));
    written.push_back(path);
  }
  return written;
}

}  // namespace nacf
