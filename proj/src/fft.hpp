// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <complex>
#include <span>

namespace nacf {

using Complex = std::complex<double>;

// One-sided DFT of a real frame: out[f] = sum_n in[n] exp(-2 pi i f n / N)
// for f in [0, N/2]. out must hold N/2 + 1 values.
void RealDft(std::span<const double> in, std::span<Complex> out);

// Transpose of RealDft under the pairing Re(sum_f X[f] z[f]):
// out[n] = Re(sum_{f=0}^{N/2} z[f] exp(-2 pi i f n / N)), n in [0, N).
void RealDftAdjoint(std::span<const Complex> z, std::span<double> out);

inline double Magnitude(const Complex& z) { return std::sqrt(z.real() * z.real() + z.imag() * z.imag()); }

}  // namespace nacf
