// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nacf {

struct AdamHyper {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  long step = 0;
};

// Bias-corrected Adam update of every block whose `trainable` flag is set
// (all blocks when the mask is empty). Frozen blocks and their moments are
// left untouched.
void AdamStep(std::vector<Eigen::MatrixXd*> params, const std::vector<Eigen::MatrixXd>& grads,
              AdamState& state, const std::vector<bool>& trainable = {});

}  // namespace nacf
