// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "adam.hpp"

#include <cmath>

#include "error.hpp"

namespace nacf {

void AdamStep(std::vector<Eigen::MatrixXd*> params, const std::vector<Eigen::MatrixXd>& grads,
              AdamState& state, const std::vector<bool>& trainable) {
  Require(params.size() == grads.size(), "adam: parameter and gradient counts differ");
  Require(trainable.empty() || trainable.size() == params.size(), "adam: trainable mask size mismatch");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
      state.v.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    }
  }
  Require(state.m.size() == params.size(), "adam: state does not match parameter list");
  for (size_t i = 0; i < params.size(); ++i)
    Require(params[i]->rows() == grads[i].rows() && params[i]->cols() == grads[i].cols() &&
                state.m[i].rows() == grads[i].rows() && state.m[i].cols() == grads[i].cols(),
            "adam: shape mismatch in block " + std::to_string(i));

  ++state.step;
  const auto& hp = state.hyper;
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    if (!trainable.empty() && !trainable[i]) continue;
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    const auto g = grads[i].array();
    m = hp.beta1 * m + (1.0 - hp.beta1) * g;
    v = hp.beta2 * v + (1.0 - hp.beta2) * g.square();
    params[i]->array() -= hp.lr * (m / c1) / ((v / c2).sqrt() + hp.eps);
  }
}

}  // namespace nacf
