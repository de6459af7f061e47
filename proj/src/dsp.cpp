// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dsp.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "error.hpp"

namespace nacf {

void Rir::Validate() const {
  Require(samples.rows() > 0, "rir must have at least one sample");
  Require(samples.cols() == 2, "rir must have exactly two channels");
  Require(sample_rate > 0, "rir sample rate must be positive");
  if (!samples.allFinite()) Fail(ErrorCode::kInvalidArgument, "rir has non-finite samples");
}

void StftParams::Validate() const {
  Require(hop_size > 0, "stft hop_size must be positive");
  Require(hop_size <= window_size, "stft hop_size must not exceed window_size");
  Require(window_size <= fft_size, "stft window_size must not exceed fft_size");
}

int StftParams::NumFrames(int signal_length) const {
  if (signal_length <= window_size) return 1;
  const int rest = signal_length - window_size;
  return (rest + hop_size - 1) / hop_size + 1;
}

std::vector<double> HannWindow(int size) {
  Require(size >= 2, "hann window size must be at least 2, got " + std::to_string(size));
  std::vector<double> w(static_cast<size_t>(size));
  const double denom = static_cast<double>(size - 1);
  for (int n = 0; n < size; ++n)
    w[static_cast<size_t>(n)] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / denom));
  return w;
}

std::vector<double> AnalysisWindow(const StftParams& params) {
  if (params.window == WindowKind::kRectangular)
    return std::vector<double>(static_cast<size_t>(params.window_size), 1.0);
  return HannWindow(params.window_size);
}

void FrameSpectrum(std::span<const double> signal, const StftParams& params,
                   std::span<const double> window, int frame, std::vector<Complex>& out) {
  thread_local std::vector<double> frame_buf;
  frame_buf.assign(static_cast<size_t>(params.fft_size), 0.0);
  const size_t start = static_cast<size_t>(frame) * static_cast<size_t>(params.hop_size);
  for (size_t n = 0; n < window.size(); ++n) {
    const size_t idx = start + n;
    if (idx >= signal.size()) break;
    frame_buf[n] = signal[idx] * window[n];
  }
  out.resize(static_cast<size_t>(params.NumBins()));
  RealDft(frame_buf, out);
}

Eigen::MatrixXd StftMagnitude(std::span<const double> signal, const StftParams& params) {
  params.Validate();
  Require(!signal.empty(), "stft signal must not be empty");
  for (double x : signal)
    if (!std::isfinite(x)) Fail(ErrorCode::kInvalidArgument, "stft signal has non-finite samples");
  const int bins = params.NumBins();
  const int frames = params.NumFrames(static_cast<int>(signal.size()));
  const auto window = AnalysisWindow(params);
  Eigen::MatrixXd mag(bins, frames);
  std::vector<Complex> spec;
  for (int d = 0; d < frames; ++d) {
    FrameSpectrum(signal, params, window, d, spec);
    for (int f = 0; f < bins; ++f) mag(f, d) = Magnitude(spec[static_cast<size_t>(f)]);
  }
  return mag;
}

Spectrogram StftMagnitude(const Rir& rir, const StftParams& params) {
  rir.Validate();
  Spectrogram out;
  out.params = params;
  for (int c = 0; c < 2; ++c) {
    const Eigen::VectorXd channel = rir.samples.col(c);
    out.magnitude[static_cast<size_t>(c)] =
        StftMagnitude(std::span<const double>(channel.data(), static_cast<size_t>(channel.size())), params);
  }
  out.num_windows = static_cast<int>(out.magnitude[0].cols());
  return out;
}

std::vector<double> PositionalEncoding(double t_norm, int num_frequencies) {
  Require(num_frequencies >= 1, "positional encoding needs at least one frequency");
  Require(t_norm >= 0.0 && t_norm <= 1.0, "positional encoding time must lie in [0, 1]");
  const double t = 2.0 * t_norm - 1.0;
  std::vector<double> out(static_cast<size_t>(2 * num_frequencies));
  double scale = std::numbers::pi;
  for (int l = 0; l < num_frequencies; ++l) {
    out[static_cast<size_t>(2 * l)] = std::sin(scale * t);
    out[static_cast<size_t>(2 * l + 1)] = std::cos(scale * t);
    scale *= 2.0;
  }
  return out;
}

}  // namespace nacf
