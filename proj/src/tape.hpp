// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "dsp.hpp"

namespace nacf {

using Matrix = Eigen::MatrixXd;

// Handle to a node recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense matrices. Nodes are recorded in evaluation
// order; Backward visits each node once, newest first. Scalars are 1x1.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Matrix value);
  // Differentiable input; its gradient is readable after Backward.
  Var Leaf(Matrix value);
  // Leaf whose value lives elsewhere and must outlive the tape.
  Var LeafRef(const Matrix& value);

  const Matrix& value(Var v) const;
  // Zero matrix of the right shape if nothing flowed into v.
  Matrix grad(Var v) const;
  double scalar(Var v) const { return value(v)(0, 0); }
  size_t size() const { return nodes_.size(); }
  const std::string& op_name(int id) const { return nodes_[static_cast<size_t>(id)].name; }

  // Throws Error(kNonFinite) naming the first offending op.
  void Backward(Var loss);

  // --- primitives ---
  Var MatMul(Var a, Var b);    // a * b
  Var MatMulNT(Var a, Var b);  // a * b^T
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Scale(Var a, double s);
  Var AddRowBroadcast(Var x, Var row);  // x + 1 * row
  // Row r of x receives row (r / block) of `rows`.
  Var AddBlockRows(Var x, Var rows, int block);
  Var ConcatCols(Var a, Var b);
  Var Relu(Var x);
  // relu(x + rows[b]) for row block b, in one pass.
  Var AddBlockRowsRelu(Var x, Var rows, int block);
  Var LeakyRelu(Var x, double slope);
  Var RowSelect(Var table, std::vector<int> rows);
  // Output row i * parts.size() + j is row i of parts[j].
  Var InterleaveRows(const std::vector<Var>& parts);
  Var TileRows(Var x, int times);
  // Column-major reinterpretation.
  Var Reshape(Var x, int rows, int cols);
  // Same-length dilated cross-correlation over rows (time) of x (T x Cin).
  // weight is Cout x (Cin * K), column i * K + k; bias is 1 x Cout.
  Var Conv1d(Var x, Var weight, Var bias, int kernel, int dilation);
  // Per-column STFT magnitude; output F x (D * C), channel-major blocks.
  Var StftMag(Var x, const StftParams& params);
  Var Abs(Var x);
  Var Square(Var x);
  Var Mean(Var x);
  Var Sum(Var x);
  Var ColSum(Var x);  // 1 x cols
  // Within each run of `block` columns of a row vector, out[d] = sum_{i >= d} x[i].
  Var SuffixSumBlocks(Var x, int block);
  // log10(max(x, floor)); zero gradient where clamped.
  Var Log10Clamped(Var x, double floor);
  // sum(x .* weights) with constant weights; seeds a backward pass with an
  // externally accumulated gradient.
  Var WeightedSum(Var x, Matrix weights);

 private:
  struct Node {
    std::string name;
    Matrix owned;
    const Matrix* external = nullptr;
    Matrix grad;
    bool needs_grad = false;  // depends on a leaf
    std::vector<int> inputs;
    std::function<void(Tape&, const Matrix& out_grad)> backward;
  };

  Var Push(std::string name, Matrix value, std::vector<int> inputs,
           std::function<void(Tape&, const Matrix&)> backward);
  Matrix& GradRef(int id);
  bool Needs(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }
  // grad(id) += e, assigning on first touch; skipped for nodes without leaves.
  template <typename Expr>
  void AddGrad(int id, const Expr& e) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0)
      n.grad.noalias() = e;
    else
      n.grad.noalias() += e;
  }
  const Node& node(Var v) const { return nodes_[static_cast<size_t>(v.id)]; }

  std::vector<Node> nodes_;
  int first_nonfinite_ = -1;
};

}  // namespace nacf
