// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "error.hpp"
#include "tape.hpp"
#include "test_util.hpp"

namespace nacf {
namespace {

using testing::RandomMatrix;
using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Reduces the builder output to a scalar with fixed random weights, then
// compares every leaf gradient entry against central differences.
void CheckGradients(std::vector<Matrix> inputs, const Builder& build, double step = 1e-6, double tol = 1e-6,
                    uint64_t seed = 1) {
  Matrix weights;
  auto evaluate = [&](bool backward, std::vector<Matrix>* grads) {
    Tape tape;
    std::vector<Var> leaves;
    for (auto& m : inputs) leaves.push_back(tape.LeafRef(m));
    const Var out = build(tape, leaves);
    if (weights.size() == 0) {
      Rng rng(seed);
      weights = RandomMatrix(rng, tape.value(out).rows(), tape.value(out).cols());
    }
    const Var loss = tape.WeightedSum(out, weights);
    if (backward) {
      tape.Backward(loss);
      for (const Var v : leaves) grads->push_back(tape.grad(v));
    }
    return tape.scalar(loss);
  };
  std::vector<Matrix> grads;
  evaluate(true, &grads);
  for (size_t k = 0; k < inputs.size(); ++k) {
    ASSERT_EQ(grads[k].rows(), inputs[k].rows());
    ASSERT_EQ(grads[k].cols(), inputs[k].cols());
    for (Eigen::Index j = 0; j < inputs[k].cols(); ++j)
      for (Eigen::Index i = 0; i < inputs[k].rows(); ++i) {
        const double fd = testing::CentralDifference([&] { return evaluate(false, nullptr); }, inputs[k](i, j), step);
        EXPECT_LE(std::abs(fd - grads[k](i, j)), tol * std::max(1.0, std::abs(fd)))
            << "input " << k << " (" << i << ", " << j << ") fd " << fd << " analytic " << grads[k](i, j);
      }
  }
}

// Entries pushed away from zero so kinks stay outside the difference stencil.
Matrix AwayFromZero(Rng& rng, int rows, int cols) {
  Matrix m = RandomMatrix(rng, rows, cols);
  for (double& x : m.reshaped()) x += x >= 0 ? 0.1 : -0.1;
  return m;
}

TEST(TapeGrad, MatMulFamily) {
  Rng rng(1);
  CheckGradients({RandomMatrix(rng, 3, 4), RandomMatrix(rng, 4, 2)},
                 [](Tape& t, const std::vector<Var>& v) { return t.MatMul(v[0], v[1]); });
  CheckGradients({RandomMatrix(rng, 3, 4), RandomMatrix(rng, 5, 4)},
                 [](Tape& t, const std::vector<Var>& v) { return t.MatMulNT(v[0], v[1]); });
}

TEST(TapeGrad, Elementwise) {
  Rng rng(2);
  const Matrix a = AwayFromZero(rng, 4, 3), b = RandomMatrix(rng, 4, 3);
  CheckGradients({a, b}, [](Tape& t, const std::vector<Var>& v) { return t.Add(v[0], t.Scale(v[1], -2.5)); });
  CheckGradients({a, b}, [](Tape& t, const std::vector<Var>& v) { return t.Sub(v[0], v[1]); });
  CheckGradients({a}, [](Tape& t, const std::vector<Var>& v) { return t.Relu(v[0]); });
  CheckGradients({a}, [](Tape& t, const std::vector<Var>& v) { return t.LeakyRelu(v[0], 0.2); });
  CheckGradients({a}, [](Tape& t, const std::vector<Var>& v) { return t.Abs(v[0]); });
  CheckGradients({a}, [](Tape& t, const std::vector<Var>& v) { return t.Square(v[0]); });
}

TEST(TapeGrad, Reductions) {
  Rng rng(3);
  const Matrix a = RandomMatrix(rng, 5, 3);
  CheckGradients({a}, [](Tape& t, const std::vector<Var>& v) { return t.Mean(v[0]); });
  CheckGradients({a}, [](Tape& t, const std::vector<Var>& v) { return t.Sum(v[0]); });
  CheckGradients({a}, [](Tape& t, const std::vector<Var>& v) { return t.ColSum(v[0]); });
  CheckGradients({RandomMatrix(rng, 1, 12)},
                 [](Tape& t, const std::vector<Var>& v) { return t.SuffixSumBlocks(v[0], 4); });
}

TEST(TapeGrad, Broadcasts) {
  Rng rng(4);
  CheckGradients({RandomMatrix(rng, 6, 3), RandomMatrix(rng, 1, 3)},
                 [](Tape& t, const std::vector<Var>& v) { return t.AddRowBroadcast(v[0], v[1]); });
  CheckGradients({RandomMatrix(rng, 6, 3), RandomMatrix(rng, 2, 3)},
                 [](Tape& t, const std::vector<Var>& v) { return t.AddBlockRows(v[0], v[1], 3); });
  CheckGradients({AwayFromZero(rng, 6, 3), RandomMatrix(rng, 2, 3, 0.01)},
                 [](Tape& t, const std::vector<Var>& v) { return t.AddBlockRowsRelu(v[0], v[1], 3); });
}

TEST(TapeGrad, Reshaping) {
  Rng rng(5);
  const Matrix a = RandomMatrix(rng, 3, 2), b = RandomMatrix(rng, 3, 4);
  CheckGradients({a, b}, [](Tape& t, const std::vector<Var>& v) { return t.ConcatCols(v[0], v[1]); });
  CheckGradients({a}, [](Tape& t, const std::vector<Var>& v) { return t.TileRows(v[0], 3); });
  CheckGradients({a}, [](Tape& t, const std::vector<Var>& v) { return t.Reshape(v[0], 2, 3); });
  CheckGradients({RandomMatrix(rng, 4, 3)},
                 [](Tape& t, const std::vector<Var>& v) { return t.RowSelect(v[0], {2, 0, 2, 3}); });
  CheckGradients({a, RandomMatrix(rng, 3, 2)},
                 [](Tape& t, const std::vector<Var>& v) { return t.InterleaveRows({v[0], v[1]}); });
}

TEST(TapeGrad, Conv1dKernelsAndDilations) {
  Rng rng(6);
  for (const int kernel : {1, 3, 5, 7})
    for (const int dilation : {1, 2}) {
      SCOPED_TRACE(::testing::Message() << "kernel " << kernel << " dilation " << dilation);
      CheckGradients({RandomMatrix(rng, 20, 2), RandomMatrix(rng, 3, 2 * kernel), RandomMatrix(rng, 1, 3)},
                     [=](Tape& t, const std::vector<Var>& v) { return t.Conv1d(v[0], v[1], v[2], kernel, dilation); });
    }
}

TEST(TapeGrad, StftMagnitude) {
  Rng rng(7);
  const StftParams params{16, 4, 32};
  CheckGradients({RandomMatrix(rng, 40, 2)},
                 [&](Tape& t, const std::vector<Var>& v) { return t.StftMag(v[0], params); });
}

TEST(TapeGrad, Log10Clamped) {
  Rng rng(8);
  Matrix a = RandomMatrix(rng, 4, 3).cwiseAbs().array() + 0.05;
  a(0, 0) = -0.5;  // clamped: zero gradient, and the stencil stays below the floor
  CheckGradients({a}, [](Tape& t, const std::vector<Var>& v) { return t.Log10Clamped(v[0], 1e-12); });
  Tape tape;
  const Var x = tape.Leaf(a);
  tape.Backward(tape.Sum(tape.Log10Clamped(x, 1e-12)));
  EXPECT_EQ(tape.grad(x)(0, 0), 0.0);
  EXPECT_NEAR(tape.grad(x)(1, 0), 1.0 / (a(1, 0) * std::log(10.0)), 1e-12);
}

TEST(TapeGrad, Composition) {
  Rng rng(9);
  CheckGradients({RandomMatrix(rng, 5, 3), RandomMatrix(rng, 3, 4), RandomMatrix(rng, 1, 4)},
                 [](Tape& t, const std::vector<Var>& v) {
                   const Var h = t.LeakyRelu(t.AddRowBroadcast(t.MatMul(v[0], v[1]), v[2]), 0.1);
                   return t.Square(t.ConcatCols(h, t.Scale(h, 0.5)));
                 });
}

TEST(Tape, ReusedNodeAccumulates) {
  Tape tape;
  const Var x = tape.Leaf(Matrix::Constant(1, 1, 3.0));
  const Var y = tape.Add(tape.Square(x), tape.Scale(x, 2.0));  // x^2 + 2x
  tape.Backward(y);
  EXPECT_DOUBLE_EQ(tape.grad(x)(0, 0), 8.0);
}

TEST(Tape, ConstantsGetNoGradient) {
  Tape tape;
  const Var c = tape.Constant(Matrix::Ones(2, 2));
  const Var x = tape.Leaf(Matrix::Ones(2, 2));
  tape.Backward(tape.Sum(tape.Add(c, x)));
  EXPECT_EQ(tape.grad(c), Matrix::Zero(2, 2));
  EXPECT_EQ(tape.grad(x), Matrix::Ones(2, 2));
}

TEST(Tape, UntouchedLeafHasZeroGradient) {
  Tape tape;
  const Var x = tape.Leaf(Matrix::Ones(2, 3));
  const Var y = tape.Leaf(Matrix::Ones(1, 1));
  tape.Backward(tape.Sum(y));
  EXPECT_EQ(tape.grad(x), Matrix::Zero(2, 3));
}

TEST(Tape, LinearityOfGradient) {
  Rng rng(10);
  const Matrix a = RandomMatrix(rng, 3, 3), w = RandomMatrix(rng, 3, 3);
  auto grad_of = [&](double s) {
    Tape tape;
    const Var x = tape.Leaf(a);
    tape.Backward(tape.Scale(tape.WeightedSum(tape.MatMul(x, tape.Constant(w)), Matrix::Ones(3, 3)), s));
    return tape.grad(x);
  };
  EXPECT_LE((grad_of(3.0) - 3.0 * grad_of(1.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Tape, NonFiniteIsReported) {
  Tape tape;
  Matrix m = Matrix::Ones(2, 2);
  m(1, 1) = std::nan("");
  const Var x = tape.Leaf(m);
  try {
    tape.Backward(tape.Sum(tape.Square(x)));
    FAIL() << "expected non-finite";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(Tape, ShapeMismatchIsRejected) {
  Tape tape;
  const Var a = tape.Leaf(Matrix::Ones(2, 3));
  const Var b = tape.Leaf(Matrix::Ones(2, 2));
  EXPECT_THROW(tape.MatMul(a, b), Error);
  EXPECT_THROW(tape.Add(a, b), Error);
}

TEST(Tape, Conv1dForwardMatchesDirectSum) {
  Rng rng(11);
  const Matrix x = RandomMatrix(rng, 12, 2), w = RandomMatrix(rng, 3, 2 * 5), b = RandomMatrix(rng, 1, 3);
  Tape tape;
  const Matrix y = tape.value(tape.Conv1d(tape.Constant(x), tape.Constant(w), tape.Constant(b), 5, 2));
  ASSERT_EQ(y.rows(), 12);
  for (int t = 0; t < 12; ++t)
    for (int o = 0; o < 3; ++o) {
      double acc = b(0, o);
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 5; ++k) {
          const int src = t + (k - 2) * 2;
          if (src >= 0 && src < 12) acc += w(o, i * 5 + k) * x(src, i);
        }
      EXPECT_NEAR(y(t, o), acc, 1e-12);
    }
}

TEST(Tape, Conv1dImpulseThroughOneLayer) {
  // Kernel (a, b, c) at dilation 2: cross-correlation puts c at -2, b at 0, a at +2.
  Matrix x = Matrix::Zero(9, 1);
  x(4, 0) = 1.0;
  const Matrix w = (Matrix(1, 3) << 2.0, 3.0, 5.0).finished();
  Tape tape;
  const Matrix y = tape.value(tape.Conv1d(tape.Constant(x), tape.Constant(w), tape.Constant(Matrix::Zero(1, 1)), 3, 2));
  const Matrix expect = (Matrix(9, 1) << 0, 0, 5, 0, 3, 0, 2, 0, 0).finished();
  EXPECT_EQ(y, expect);
}

}  // namespace
}  // namespace nacf
