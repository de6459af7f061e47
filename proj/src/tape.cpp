// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tape.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "error.hpp"

namespace nacf {

Var Tape::Push(std::string name, Matrix value, std::vector<int> inputs,
               std::function<void(Tape&, const Matrix&)> backward) {
  Node n;
  n.name = std::move(name);
  n.owned = std::move(value);
  n.inputs = std::move(inputs);
  for (int i : n.inputs) n.needs_grad = n.needs_grad || nodes_[static_cast<size_t>(i)].needs_grad;
  if (n.needs_grad) n.backward = std::move(backward);
  const int id = static_cast<int>(nodes_.size());
  if (first_nonfinite_ < 0 && !n.owned.allFinite()) first_nonfinite_ = id;
  nodes_.push_back(std::move(n));
  return Var{id};
}

Var Tape::Constant(Matrix value) { return Push("constant", std::move(value), {}, nullptr); }

Var Tape::Leaf(Matrix value) {
  Var v = Push("leaf", std::move(value), {}, nullptr);
  nodes_.back().needs_grad = true;
  return v;
}

Var Tape::LeafRef(const Matrix& value) {
  Node n;
  n.name = "leaf";
  n.external = &value;
  n.needs_grad = true;
  const int id = static_cast<int>(nodes_.size());
  if (first_nonfinite_ < 0 && !value.allFinite()) first_nonfinite_ = id;
  nodes_.push_back(std::move(n));
  return Var{id};
}

const Matrix& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.external ? *n.external : n.owned;
}

Matrix Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) return Matrix::Zero(value(v).rows(), value(v).cols());
  return n.grad;
}

Matrix& Tape::GradRef(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.size() == 0) {
    const Matrix& v = n.external ? *n.external : n.owned;
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::Backward(Var loss) {
  Require(loss.valid() && loss.id < static_cast<int>(nodes_.size()), "backward: unknown loss node");
  Require(value(loss).size() == 1, "backward: loss must be a scalar");
  if (first_nonfinite_ >= 0 && first_nonfinite_ <= loss.id)
    Fail(ErrorCode::kNonFinite, "non-finite value produced by op #" + std::to_string(first_nonfinite_) +
                                    " (" + nodes_[static_cast<size_t>(first_nonfinite_)].name + ")");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  GradRef(loss.id).setConstant(1.0);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.backward || n.grad.size() == 0) continue;
    if (!n.grad.allFinite())
      Fail(ErrorCode::kNonFinite, "non-finite gradient at op #" + std::to_string(id) + " (" + n.name + ")");
    // Inputs precede this node, so n.grad is not touched by its own backward.
    n.backward(*this, n.grad);
  }
}

Var Tape::MatMul(Var a, Var b) {
  Require(value(a).cols() == value(b).rows(), "matmul: inner dimension mismatch");
  Matrix out = value(a) * value(b);
  return Push("matmul", std::move(out), {a.id, b.id}, [a, b](Tape& t, const Matrix& g) {
    t.AddGrad(a.id, g * t.value(b).transpose());
    t.AddGrad(b.id, t.value(a).transpose() * g);
  });
}

Var Tape::MatMulNT(Var a, Var b) {
  Require(value(a).cols() == value(b).cols(), "matmul_nt: inner dimension mismatch");
  Matrix out = value(a) * value(b).transpose();
  return Push("matmul_nt", std::move(out), {a.id, b.id}, [a, b](Tape& t, const Matrix& g) {
    t.AddGrad(a.id, g * t.value(b));
    t.AddGrad(b.id, g.transpose() * t.value(a));
  });
}

Var Tape::Add(Var a, Var b) {
  Require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add: shape mismatch");
  Matrix out = value(a) + value(b);
  return Push("add", std::move(out), {a.id, b.id}, [a, b](Tape& t, const Matrix& g) {
    t.AddGrad(a.id, g);
    t.AddGrad(b.id, g);
  });
}

Var Tape::Sub(Var a, Var b) {
  Require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "sub: shape mismatch");
  Matrix out = value(a) - value(b);
  return Push("sub", std::move(out), {a.id, b.id}, [a, b](Tape& t, const Matrix& g) {
    if (t.Needs(a.id)) t.GradRef(a.id) += g;
    if (t.Needs(b.id)) t.GradRef(b.id) -= g;
  });
}

Var Tape::Scale(Var a, double s) {
  Matrix out = s * value(a);
  return Push("scale", std::move(out), {a.id}, [a, s](Tape& t, const Matrix& g) { t.GradRef(a.id) += s * g; });
}

Var Tape::AddRowBroadcast(Var x, Var row) {
  Require(value(row).rows() == 1 && value(row).cols() == value(x).cols(), "add_row: shape mismatch");
  Matrix out = value(x).rowwise() + value(row).row(0);
  return Push("add_row", std::move(out), {x.id, row.id}, [x, row](Tape& t, const Matrix& g) {
    t.AddGrad(x.id, g);
    t.AddGrad(row.id, g.colwise().sum());
  });
}

Var Tape::AddBlockRows(Var x, Var rows, int block) {
  const Matrix& xv = value(x);
  const Matrix& rv = value(rows);
  Require(block > 0 && rv.rows() * block == xv.rows() && rv.cols() == xv.cols(), "add_block_rows: shape mismatch");
  Matrix out = xv;
  for (Eigen::Index b = 0; b < rv.rows(); ++b) out.middleRows(b * block, block).rowwise() += rv.row(b);
  return Push("add_block_rows", std::move(out), {x.id, rows.id}, [x, rows, block](Tape& t, const Matrix& g) {
    if (t.Needs(x.id)) t.GradRef(x.id) += g;
    if (!t.Needs(rows.id)) return;
    Matrix& gr = t.GradRef(rows.id);
    for (Eigen::Index b = 0; b < gr.rows(); ++b) gr.row(b) += g.middleRows(b * block, block).colwise().sum();
  });
}

Var Tape::ConcatCols(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  Require(av.rows() == bv.rows(), "concat_cols: row mismatch");
  Matrix out(av.rows(), av.cols() + bv.cols());
  out << av, bv;
  const Eigen::Index ca = av.cols();
  return Push("concat_cols", std::move(out), {a.id, b.id}, [a, b, ca](Tape& t, const Matrix& g) {
    t.AddGrad(a.id, g.leftCols(ca));
    t.AddGrad(b.id, g.rightCols(g.cols() - ca));
  });
}

Var Tape::AddBlockRowsRelu(Var x, Var rows, int block) {
  const Matrix& xv = value(x);
  const Matrix& rv = value(rows);
  Require(block > 0 && rv.rows() * block == xv.rows() && rv.cols() == xv.cols(), "add_block_rows_relu: shape mismatch");
  Matrix out(xv.rows(), xv.cols());
  for (Eigen::Index b = 0; b < rv.rows(); ++b)
    out.middleRows(b * block, block) = (xv.middleRows(b * block, block).rowwise() + rv.row(b)).cwiseMax(0.0);
  const int self = static_cast<int>(nodes_.size());
  return Push("add_block_rows_relu", std::move(out), {x.id, rows.id}, [x, rows, block, self](Tape& t, const Matrix& g) {
    Matrix masked = (t.value(Var{self}).array() > 0.0).select(g, 0.0);
    if (t.Needs(rows.id)) {
      Matrix& gr = t.GradRef(rows.id);
      for (Eigen::Index b = 0; b < gr.rows(); ++b) gr.row(b) += masked.middleRows(b * block, block).colwise().sum();
    }
    t.AddGrad(x.id, masked);
  });
}

Var Tape::Relu(Var x) {
  Matrix out = value(x).cwiseMax(0.0);
  return Push("relu", std::move(out), {x.id}, [x](Tape& t, const Matrix& g) {
    t.GradRef(x.id) += (t.value(x).array() > 0.0).select(g, 0.0);
  });
}

Var Tape::LeakyRelu(Var x, double slope) {
  const Matrix& xv = value(x);
  Matrix out = (xv.array() > 0.0).select(xv, slope * xv);
  return Push("leaky_relu", std::move(out), {x.id}, [x, slope](Tape& t, const Matrix& g) {
    t.GradRef(x.id) += (t.value(x).array() > 0.0).select(g, slope * g);
  });
}

Var Tape::RowSelect(Var table, std::vector<int> rows) {
  const Matrix& tv = value(table);
  Matrix out(static_cast<Eigen::Index>(rows.size()), tv.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    Require(rows[i] >= 0 && rows[i] < tv.rows(), "row_select: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = tv.row(rows[i]);
  }
  return Push("row_select", std::move(out), {table.id}, [table, rows](Tape& t, const Matrix& g) {
    Matrix& gt = t.GradRef(table.id);
    for (size_t i = 0; i < rows.size(); ++i) gt.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var Tape::InterleaveRows(const std::vector<Var>& parts) {
  Require(!parts.empty(), "interleave_rows: no inputs");
  const Eigen::Index n = value(parts[0]).rows(), cols = value(parts[0]).cols();
  const auto p = static_cast<Eigen::Index>(parts.size());
  std::vector<int> ids;
  for (Var v : parts) {
    Require(value(v).rows() == n && value(v).cols() == cols, "interleave_rows: shape mismatch");
    ids.push_back(v.id);
  }
  Matrix out(n * p, cols);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) out.row(i * p + j) = value(parts[static_cast<size_t>(j)]).row(i);
  return Push("interleave_rows", std::move(out), ids, [ids, n, p](Tape& t, const Matrix& g) {
    for (Eigen::Index j = 0; j < p; ++j) {
      Matrix& gj = t.GradRef(ids[static_cast<size_t>(j)]);
      for (Eigen::Index i = 0; i < n; ++i) gj.row(i) += g.row(i * p + j);
    }
  });
}

Var Tape::TileRows(Var x, int times) {
  const Matrix& xv = value(x);
  Require(times >= 1, "tile_rows: times must be positive");
  Matrix out = xv.replicate(times, 1);
  const Eigen::Index r = xv.rows();
  return Push("tile_rows", std::move(out), {x.id}, [x, times, r](Tape& t, const Matrix& g) {
    if (!t.Needs(x.id)) return;
    Matrix& gx = t.GradRef(x.id);
    for (int k = 0; k < times; ++k) gx += g.middleRows(k * r, r);
  });
}

Var Tape::Reshape(Var x, int rows, int cols) {
  const Matrix& xv = value(x);
  Require(static_cast<Eigen::Index>(rows) * cols == xv.size(), "reshape: size mismatch");
  Matrix out = Eigen::Map<const Matrix>(xv.data(), rows, cols);
  const Eigen::Index r0 = xv.rows(), c0 = xv.cols();
  return Push("reshape", std::move(out), {x.id}, [x, r0, c0](Tape& t, const Matrix& g) {
    t.GradRef(x.id) += Eigen::Map<const Matrix>(g.data(), r0, c0);
  });
}

Var Tape::Conv1d(Var x, Var weight, Var bias, int kernel, int dilation) {
  const Matrix& xv = value(x);
  const Matrix& wv = value(weight);
  const Matrix& bv = value(bias);
  const Eigen::Index len = xv.rows(), cin = xv.cols(), cout = wv.rows();
  Require(kernel >= 1 && dilation >= 1 && (kernel - 1) * dilation % 2 == 0, "conv1d: kernel/dilation must give symmetric padding");
  Require(wv.cols() == cin * kernel, "conv1d: weight shape mismatch");
  Require(bv.rows() == 1 && bv.cols() == cout, "conv1d: bias shape mismatch");
  const Eigen::Index pad = (kernel - 1) * dilation / 2;
  Matrix out(len, cout);
  for (Eigen::Index o = 0; o < cout; ++o) out.col(o).setConstant(bv(0, o));
  for (Eigen::Index o = 0; o < cout; ++o)
    for (Eigen::Index i = 0; i < cin; ++i)
      for (Eigen::Index k = 0; k < kernel; ++k) {
        const double w = wv(o, i * kernel + k);
        const Eigen::Index shift = k * dilation - pad;
        const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
        const Eigen::Index t1 = std::min<Eigen::Index>(len, len - shift);
        if (t1 > t0) out.col(o).segment(t0, t1 - t0) += w * xv.col(i).segment(t0 + shift, t1 - t0);
      }
  return Push("conv1d", std::move(out), {x.id, weight.id, bias.id},
              [x, weight, bias, kernel, dilation, pad](Tape& t, const Matrix& g) {
                const Matrix& xv = t.value(x);
                const Matrix& wv = t.value(weight);
                const Eigen::Index len = xv.rows(), cin = xv.cols(), cout = wv.rows();
                Matrix& gx = t.GradRef(x.id);
                Matrix& gw = t.GradRef(weight.id);
                t.GradRef(bias.id) += g.colwise().sum();
                for (Eigen::Index o = 0; o < cout; ++o)
                  for (Eigen::Index i = 0; i < cin; ++i)
                    for (Eigen::Index k = 0; k < kernel; ++k) {
                      const Eigen::Index shift = k * dilation - pad;
                      const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
                      const Eigen::Index t1 = std::min<Eigen::Index>(len, len - shift);
                      if (t1 <= t0) continue;
                      const auto gseg = g.col(o).segment(t0, t1 - t0);
                      gw(o, i * kernel + k) += gseg.dot(xv.col(i).segment(t0 + shift, t1 - t0));
                      gx.col(i).segment(t0 + shift, t1 - t0) += wv(o, i * kernel + k) * gseg;
                    }
              });
}

Var Tape::StftMag(Var x, const StftParams& params) {
  params.Validate();
  const Matrix& xv = value(x);
  const int len = static_cast<int>(xv.rows());
  const int channels = static_cast<int>(xv.cols());
  const int bins = params.NumBins();
  const int frames = params.NumFrames(len);
  auto window = std::make_shared<std::vector<double>>(AnalysisWindow(params));
  auto spectra = std::make_shared<std::vector<std::vector<Complex>>>(static_cast<size_t>(frames * channels));
  Matrix out(bins, frames * channels);
  for (int c = 0; c < channels; ++c) {
    std::span<const double> sig(xv.col(c).data(), static_cast<size_t>(len));
    for (int d = 0; d < frames; ++d) {
      auto& spec = (*spectra)[static_cast<size_t>(c * frames + d)];
      FrameSpectrum(sig, params, *window, d, spec);
      for (int f = 0; f < bins; ++f) out(f, c * frames + d) = Magnitude(spec[static_cast<size_t>(f)]);
    }
  }
  return Push("stft_mag", std::move(out), {x.id},
              [x, params, window, spectra, len, channels, bins, frames](Tape& t, const Matrix& g) {
                Matrix& gx = t.GradRef(x.id);
                std::vector<Complex> z(static_cast<size_t>(bins));
                std::vector<double> y(static_cast<size_t>(params.fft_size));
                for (int c = 0; c < channels; ++c) {
                  for (int d = 0; d < frames; ++d) {
                    const auto& spec = (*spectra)[static_cast<size_t>(c * frames + d)];
                    std::fill(z.begin(), z.end(), Complex(0.0, 0.0));
                    bool any = false;
                    for (int f = 0; f < bins; ++f) {
                      const double mag = Magnitude(spec[static_cast<size_t>(f)]);
                      const double gf = g(f, c * frames + d);
                      // Zero-magnitude bins contribute a zero subgradient.
                      if (mag == 0.0 || gf == 0.0) continue;
                      z[static_cast<size_t>(f)] = gf * std::conj(spec[static_cast<size_t>(f)]) / mag;
                      any = true;
                    }
                    if (!any) continue;
                    RealDftAdjoint(z, y);
                    const int start = d * params.hop_size;
                    for (int n = 0; n < params.window_size && start + n < len; ++n)
                      gx(start + n, c) += (*window)[static_cast<size_t>(n)] * y[static_cast<size_t>(n)];
                  }
                }
              });
}

Var Tape::Abs(Var x) {
  Matrix out = value(x).cwiseAbs();
  return Push("abs", std::move(out), {x.id}, [x](Tape& t, const Matrix& g) {
    const auto& xv = t.value(x).array();
    t.GradRef(x.id).array() += g.array() * ((xv > 0.0).cast<double>() - (xv < 0.0).cast<double>());
  });
}

Var Tape::Square(Var x) {
  Matrix out = value(x).array().square().matrix();
  return Push("square", std::move(out), {x.id}, [x](Tape& t, const Matrix& g) {
    t.GradRef(x.id).array() += 2.0 * g.array() * t.value(x).array();
  });
}

Var Tape::Mean(Var x) {
  const double n = static_cast<double>(value(x).size());
  Require(n > 0, "mean: empty input");
  Matrix out(1, 1);
  out(0, 0) = value(x).mean();
  return Push("mean", std::move(out), {x.id}, [x, n](Tape& t, const Matrix& g) {
    t.GradRef(x.id).array() += g(0, 0) / n;
  });
}

Var Tape::Sum(Var x) {
  Matrix out(1, 1);
  out(0, 0) = value(x).sum();
  return Push("sum", std::move(out), {x.id}, [x](Tape& t, const Matrix& g) { t.GradRef(x.id).array() += g(0, 0); });
}

Var Tape::ColSum(Var x) {
  Matrix out = value(x).colwise().sum();
  return Push("col_sum", std::move(out), {x.id}, [x](Tape& t, const Matrix& g) {
    t.GradRef(x.id).rowwise() += g.row(0);
  });
}

Var Tape::SuffixSumBlocks(Var x, int block) {
  const Matrix& xv = value(x);
  Require(xv.rows() == 1 && block > 0 && xv.cols() % block == 0, "suffix_sum: shape mismatch");
  Matrix out(1, xv.cols());
  for (Eigen::Index b = 0; b < xv.cols(); b += block) {
    double acc = 0.0;
    for (Eigen::Index d = block - 1; d >= 0; --d) {
      acc += xv(0, b + d);
      out(0, b + d) = acc;
    }
  }
  return Push("suffix_sum", std::move(out), {x.id}, [x, block](Tape& t, const Matrix& g) {
    Matrix& gx = t.GradRef(x.id);
    // Adjoint of a suffix sum is a prefix sum.
    for (Eigen::Index b = 0; b < gx.cols(); b += block) {
      double acc = 0.0;
      for (Eigen::Index d = 0; d < block; ++d) {
        acc += g(0, b + d);
        gx(0, b + d) += acc;
      }
    }
  });
}

Var Tape::Log10Clamped(Var x, double floor) {
  Matrix out = value(x).cwiseMax(floor).array().log10().matrix();
  return Push("log10", std::move(out), {x.id}, [x, floor](Tape& t, const Matrix& g) {
    const auto& xv = t.value(x).array();
    t.GradRef(x.id).array() += (xv > floor).select(g.array() / (xv * std::numbers::ln10), 0.0);
  });
}

Var Tape::WeightedSum(Var x, Matrix weights) {
  Require(weights.rows() == value(x).rows() && weights.cols() == value(x).cols(), "weighted_sum: shape mismatch");
  Matrix out(1, 1);
  out(0, 0) = value(x).cwiseProduct(weights).sum();
  return Push("weighted_sum", std::move(out), {x.id}, [x, w = std::move(weights)](Tape& t, const Matrix& g) {
    t.GradRef(x.id) += g(0, 0) * w;
  });
}

}  // namespace nacf
