// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "fft.hpp"

namespace nacf {

// Two-channel impulse response, samples(t, c) with c = 0 left, 1 right.
struct Rir {
  Eigen::MatrixXd samples;
  int sample_rate = 0;

  int length() const { return static_cast<int>(samples.rows()); }
  void Validate() const;
};

enum class WindowKind { kHann, kRectangular };

struct StftParams {
  int window_size = 0;
  int hop_size = 0;
  int fft_size = 0;
  WindowKind window = WindowKind::kHann;

  int NumBins() const { return fft_size / 2 + 1; }
  // Number of full frames once the signal is zero-padded at the tail.
  int NumFrames(int signal_length) const;
  void Validate() const;
};

struct Spectrogram {
  std::array<Eigen::MatrixXd, 2> magnitude;  // per channel, F x D
  StftParams params;
  int num_windows = 0;
};

// Symmetric Hann window, w[n] = 0.5 (1 - cos(2 pi n / (size - 1))).
std::vector<double> HannWindow(int size);

std::vector<double> AnalysisWindow(const StftParams& params);

// One-sided complex spectrum of frame `frame` (NumBins() values), windowed
// and zero-padded. Used by both the magnitude path and its adjoint.
void FrameSpectrum(std::span<const double> signal, const StftParams& params,
                   std::span<const double> window, int frame,
                   std::vector<Complex>& out);

// F x D magnitude of one channel.
Eigen::MatrixXd StftMagnitude(std::span<const double> signal, const StftParams& params);

Spectrogram StftMagnitude(const Rir& rir, const StftParams& params);

// [sin(2^0 pi t'), cos(2^0 pi t'), ..., sin(2^(L-1) pi t'), cos(2^(L-1) pi t')]
// with t' = 2 t_norm - 1.
std::vector<double> PositionalEncoding(double t_norm, int num_frequencies);

}  // namespace nacf
