// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Straightforward second implementations used as references by the unit and
// acceptance tests. None of them call into the code they check.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace nacf::oracle {

// Hann-windowed sinc tap for a source at fractional sample position tau,
// 81 taps around the nearest integer.
inline double SincTap(long n, double tau) {
  const long center = std::lround(tau);
  if (n < center - 40 || n > center + 40) return 0.0;
  const double x = static_cast<double>(n) - tau;
  const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
  return sinc * 0.5 * (1.0 + std::cos(std::numbers::pi * x / 41.0));
}

// Image-source response using the (n, p) lattice parameterization: per axis,
// image = (1 - 2p) s + 2 n L, with |n - p| reflections off the wall at 0 and
// |n| off the wall at L. Every lattice point in the cube [-order, order]^3 is
// visited; images whose total reflection count exceeds `order` are dropped.
inline std::vector<double> ImageSourceRir(const std::array<double, 3>& dims, const std::array<double, 3>& src,
                                          const std::array<double, 3>& rcv, const std::array<double, 6>& beta,
                                          int order, double fs, double c, int length) {
  std::vector<double> h(static_cast<size_t>(length), 0.0);
  for (int nx = -order; nx <= order; ++nx)
    for (int ny = -order; ny <= order; ++ny)
      for (int nz = -order; nz <= order; ++nz)
        for (int p = 0; p < 8; ++p) {
          const std::array<int, 3> n{nx, ny, nz};
          const std::array<int, 3> q{p & 1, (p >> 1) & 1, (p >> 2) & 1};
          int reflections = 0;
          double gain = 1.0, dist2 = 0.0;
          for (int a = 0; a < 3; ++a) {
            const int lo = std::abs(n[a] - q[a]);
            const int hi = std::abs(n[a]);
            reflections += lo + hi;
            gain *= std::pow(beta[static_cast<size_t>(2 * a)], lo) * std::pow(beta[static_cast<size_t>(2 * a + 1)], hi);
            const double image = (1 - 2 * q[a]) * src[static_cast<size_t>(a)] + 2.0 * n[a] * dims[static_cast<size_t>(a)];
            const double diff = image - rcv[static_cast<size_t>(a)];
            dist2 += diff * diff;
          }
          if (reflections > order) continue;
          const double d = std::sqrt(dist2);
          const double tau = d / c * fs;
          const double amp = gain / (4.0 * std::numbers::pi * d);
          for (long k = 0; k < length; ++k) h[static_cast<size_t>(k)] += amp * SincTap(k, tau);
        }
  return h;
}

// Exponentially decaying noise whose energy falls 60 dB in t60 seconds.
inline std::vector<double> DecayingNoise(Rng& rng, double t60, int fs, int length) {
  std::vector<double> h(static_cast<size_t>(length));
  const double rate = 3.0 * std::log(10.0) / (fs * t60);  // amplitude decay per sample
  for (int n = 0; n < length; ++n) h[static_cast<size_t>(n)] = std::exp(-rate * n) * rng.Normal();
  return h;
}

// 10 log10 of early over late energy, split at round(0.05 fs), by two loops.
inline double C50BySums(const std::vector<double>& h, int fs) {
  const long boundary = std::lround(0.05 * fs);
  double early = 0.0, late = 0.0;
  for (size_t n = 0; n < h.size(); ++n) {
    if (static_cast<long>(n) < boundary)
      early += h[n] * h[n];
    else
      late += h[n] * h[n];
  }
  return 10.0 * std::log10(early / late);
}

// Independent evaluation of the field MLP for one (t, channel): blocks are
// looked up by name, and conditioning is added to each layer's input before
// the weight multiply, exactly as the model is described.
inline double FieldValue(const Model& model, const std::vector<BoundaryContext>& contexts, int t, int orientation_index,
                         int channel) {
  const auto& P = model.params;
  auto block = [&](const std::string& name) -> const Eigen::MatrixXd& {
    return P.value(static_cast<size_t>(P.Index(name)));
  };
  auto mlp2 = [&](const std::string& prefix, const Eigen::RowVectorXd& x) {
    Eigen::RowVectorXd h = x * block(prefix + ".w1") + block(prefix + ".b1");
    for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = std::max(h(i), 0.0);
    Eigen::RowVectorXd out = h * block(prefix + ".w2") + block(prefix + ".b2");
    return out;
  };
  const auto& cfg = model.config;
  const int T = cfg.rir_length;
  Eigen::RowVectorXd gamma(2 * cfg.pe_frequencies);
  const double tn = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
  for (int l = 0; l < cfg.pe_frequencies; ++l) {
    const double arg = std::pow(2.0, l) * std::numbers::pi * (2.0 * tn - 1.0);
    gamma(2 * l) = std::sin(arg);
    gamma(2 * l + 1) = std::cos(arg);
  }
  const Eigen::RowVectorXd tvec = mlp2("time", gamma);

  const int n = cfg.num_points;
  Eigen::RowVectorXd query(n * kNumModalities);
  const auto features = ContextFeatures(cfg, contexts);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < kNumModalities; ++j) {
      Eigen::RowVectorXd v;
      if (cfg.use_context)
        v = mlp2(std::string("ctx.") + ModalityName(j), features[static_cast<size_t>(j)].row(i));
      else
        v = block("ctx.constant").row(i * kNumModalities + j);
      query(i * kNumModalities + j) = v.dot(tvec);
    }

  const Eigen::RowVectorXd s = block("emb.channel").row(channel) + block("emb.orientation").row(orientation_index);
  Eigen::RowVectorXd x = query;
  for (int l = 1; l <= 4; ++l) {
    const std::string name = "field.l" + std::to_string(l);
    Eigen::RowVectorXd in = x;
    if (l == 3) {
      in.resize(x.size() + query.size());
      in << x, query;
    }
    in += s * block(name + ".cond");
    x = in * block(name + ".w") + block(name + ".b");
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = std::max(x(i), 0.0);
  }
  return (x * block("field.head.w"))(0, 0) + block("field.head.b")(0, 0);
}

}  // namespace nacf::oracle
