// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "losses.hpp"

#include <cmath>

#include "error.hpp"

namespace nacf {

namespace {

void RequireSameShape(const Spectrogram& a, const Spectrogram& b) {
  for (size_t c = 0; c < 2; ++c)
    Require(a.magnitude[c].rows() == b.magnitude[c].rows() && a.magnitude[c].cols() == b.magnitude[c].cols(),
            "spectrogram shapes differ");
}

// Channel-major F x (D * 2) layout used by the tape path.
Eigen::MatrixXd Stack(const Spectrogram& s) {
  Eigen::MatrixXd out(s.magnitude[0].rows(), s.magnitude[0].cols() * 2);
  out << s.magnitude[0], s.magnitude[1];
  return out;
}

}  // namespace

LossConfig LossConfig::MultiScale() {
  LossConfig c;
  c.scales = {{240, 60, 512}, {600, 150, 1024}, {1200, 300, 2048}};
  return c;
}

LossConfig LossConfig::SingleScale() {
  LossConfig c;
  c.scales = {{600, 150, 1024}};
  return c;
}

void LossConfig::Validate() const {
  Require(!scales.empty(), "loss needs at least one STFT scale");
  Require(lambda >= 0.0, "decay weight lambda must be non-negative");
  Require(log_floor > 0.0, "log floor must be positive");
  for (const auto& s : scales) s.Validate();
}

double MagnitudeLoss(const Spectrogram& truth, const Spectrogram& pred) {
  RequireSameShape(truth, pred);
  double sum = 0.0;
  Eigen::Index count = 0;
  for (size_t c = 0; c < 2; ++c) {
    sum += (truth.magnitude[c] - pred.magnitude[c]).cwiseAbs().sum();
    count += truth.magnitude[c].size();
  }
  return sum / static_cast<double>(count);
}

Eigen::MatrixXd EnergyDecayCurve(const Spectrogram& m) {
  const Eigen::Index frames = m.magnitude[0].cols();
  Eigen::MatrixXd out(frames, 2);
  for (size_t c = 0; c < 2; ++c) {
    const Eigen::RowVectorXd energy = m.magnitude[c].array().square().colwise().sum();
    double acc = 0.0;
    for (Eigen::Index d = frames - 1; d >= 0; --d) {
      acc += energy(d);
      out(d, static_cast<Eigen::Index>(c)) = acc;
    }
  }
  return out;
}

double DecayLoss(const Spectrogram& truth, const Spectrogram& pred, double log_floor) {
  RequireSameShape(truth, pred);
  const Eigen::MatrixXd eg = EnergyDecayCurve(truth).cwiseMax(log_floor);
  const Eigen::MatrixXd ep = EnergyDecayCurve(pred).cwiseMax(log_floor);
  return (eg.array().log10() - ep.array().log10()).abs().mean();
}

LossBreakdown TotalLoss(const Rir& truth, const Rir& pred, const LossConfig& config) {
  config.Validate();
  Require(truth.length() == pred.length(), "loss inputs must have equal length");
  Require(truth.sample_rate == pred.sample_rate, "loss inputs must have equal sample rates");
  LossBreakdown out;
  for (const auto& params : config.scales) {
    const Spectrogram mg = StftMagnitude(truth, params);
    const Spectrogram mp = StftMagnitude(pred, params);
    ScaleLoss s{MagnitudeLoss(mg, mp), DecayLoss(mg, mp, config.log_floor)};
    out.total += s.magnitude + config.lambda * s.decay;
    out.scales.push_back(s);
  }
  return out;
}

Var BuildTotalLoss(Tape& tape, Var pred, const Eigen::MatrixXd& truth, const LossConfig& config,
                   std::vector<std::pair<Var, Var>>* components) {
  Require(tape.value(pred).rows() == truth.rows() && tape.value(pred).cols() == truth.cols(),
          "loss target shape mismatch");
  Var total;
  for (const auto& params : config.scales) {
    Rir target{truth, 1};
    const Spectrogram mg = StftMagnitude(target, params);
    const int frames = mg.num_windows;
    Var mp = tape.StftMag(pred, params);
    Var mag = tape.Mean(tape.Abs(tape.Sub(mp, tape.Constant(Stack(mg)))));

    const Eigen::MatrixXd eg = EnergyDecayCurve(mg);
    Eigen::MatrixXd log_g(1, 2 * frames);
    for (int c = 0; c < 2; ++c)
      for (int d = 0; d < frames; ++d) log_g(0, c * frames + d) = std::log10(std::max(eg(d, c), config.log_floor));
    Var energy = tape.SuffixSumBlocks(tape.ColSum(tape.Square(mp)), frames);
    Var dcy = tape.Mean(tape.Abs(tape.Sub(tape.Log10Clamped(energy, config.log_floor), tape.Constant(log_g))));

    Var term = tape.Add(mag, tape.Scale(dcy, config.lambda));
    total = total.valid() ? tape.Add(total, term) : term;
    if (components) components->emplace_back(mag, dcy);
  }
  return total;
}

}  // namespace nacf
