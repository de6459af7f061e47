// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "dsp.hpp"
#include "tape.hpp"

namespace nacf {

struct LossConfig {
  std::vector<StftParams> scales;
  double lambda = 0.01;
  double log_floor = 1e-12;

  // Windows {240, 600, 1200}, FFT sizes {512, 1024, 2048}, hop = window / 4.
  static LossConfig MultiScale();
  // Middle scale only (W = 600, F = 1024).
  static LossConfig SingleScale();
  void Validate() const;
};

struct ScaleLoss {
  double magnitude = 0.0;
  double decay = 0.0;
};

struct LossBreakdown {
  double total = 0.0;
  std::vector<ScaleLoss> scales;
};

// Mean over all (f, d, channel) of |M_g - M_p|.
double MagnitudeLoss(const Spectrogram& truth, const Spectrogram& pred);

// Backward-accumulated window energies, D x 2: out(d) = sum_{i >= d} sum_f M(f, i)^2.
Eigen::MatrixXd EnergyDecayCurve(const Spectrogram& m);

// Mean over (d, channel) of |log10 max(E_g, floor) - log10 max(E_p, floor)|.
double DecayLoss(const Spectrogram& truth, const Spectrogram& pred, double log_floor = 1e-12);

// Sum over scales of magnitude + lambda * decay.
LossBreakdown TotalLoss(const Rir& truth, const Rir& pred, const LossConfig& config);

// Differentiable version; `pred` is a T x 2 node, `truth` its target.
// Fills per-scale component nodes when `components` is non-null.
Var BuildTotalLoss(Tape& tape, Var pred, const Eigen::MatrixXd& truth, const LossConfig& config,
                   std::vector<std::pair<Var, Var>>* components = nullptr);

}  // namespace nacf
