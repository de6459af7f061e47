// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "error.hpp"

namespace nacf {
namespace {

// FFTW_ESTIMATE plans are chosen without timing, so results do not vary
// between runs.
struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

struct Buffers {
  size_t n = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  ~Buffers() {
    fftw_free(real);
    fftw_free(spec);
  }
  void Reserve(size_t size) {
    if (n == size) return;
    fftw_free(real);
    fftw_free(spec);
    real = fftw_alloc_real(size);
    spec = fftw_alloc_complex(size / 2 + 1);
    n = size;
  }
};

std::mutex& PlanMutex() {
  static std::mutex m;
  return m;
}

const Plans& PlansFor(size_t n) {
  static std::map<size_t, Plans> cache;
  std::lock_guard<std::mutex> lock(PlanMutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  double* real = fftw_alloc_real(n);
  fftw_complex* spec = fftw_alloc_complex(n / 2 + 1);
  Plans p;
  p.forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real, spec, FFTW_ESTIMATE);
  p.inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, real, FFTW_ESTIMATE);
  fftw_free(real);
  fftw_free(spec);
  if (!p.forward || !p.inverse) Fail(ErrorCode::kInvalidArgument, "fftw could not plan size " + std::to_string(n));
  return cache.emplace(n, p).first->second;
}

Buffers& Scratch(size_t n) {
  thread_local Buffers b;
  b.Reserve(n);
  return b;
}

}  // namespace

void RealDft(std::span<const double> in, std::span<Complex> out) {
  const size_t n = in.size();
  Require(n >= 1 && out.size() == n / 2 + 1, "real dft: output must hold n/2 + 1 bins");
  const Plans& plans = PlansFor(n);
  Buffers& b = Scratch(n);
  std::copy(in.begin(), in.end(), b.real);
  fftw_execute_dft_r2c(plans.forward, b.real, b.spec);
  for (size_t f = 0; f < out.size(); ++f) out[f] = Complex(b.spec[f][0], b.spec[f][1]);
}

void RealDftAdjoint(std::span<const Complex> z, std::span<double> out) {
  const size_t n = out.size();
  Require(n >= 1 && z.size() == n / 2 + 1, "real dft adjoint: input must hold n/2 + 1 bins");
  const Plans& plans = PlansFor(n);
  Buffers& b = Scratch(n);
  // c2r evaluates x[n] = X0 + sum_{0<f<N/2} 2 Re(X_f e^{+i..}) (+ X_{N/2} (-1)^n),
  // using only the real parts of X0 and X_{N/2}.
  const size_t last = n / 2;
  for (size_t f = 0; f <= last; ++f) {
    const bool edge = f == 0 || (n % 2 == 0 && f == last);
    if (edge) {
      b.spec[f][0] = z[f].real();
      b.spec[f][1] = 0.0;
    } else {
      b.spec[f][0] = 0.5 * z[f].real();
      b.spec[f][1] = -0.5 * z[f].imag();
    }
  }
  fftw_execute_dft_c2r(plans.inverse, b.spec, b.real);
  std::copy(b.real, b.real + n, out.begin());
}

}  // namespace nacf
