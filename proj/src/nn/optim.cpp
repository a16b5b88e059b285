// Copyright 2026 The synthcapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "capt/nn/optim.hpp"

#include <algorithm>
#include <cmath>

namespace capt::nn {

Adam::Adam(ParameterSet& params, AdamConfig config) : params_(&params), config_(config) {
  for (const auto& p : params.all()) {
    m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void Adam::step(double batch) {
  auto& ps = params_->all();
  double norm_sq = 0.0;
  for (auto& p : ps) {
    p.grad /= batch;
    norm_sq += p.grad.squaredNorm();
  }
  double clip = 1.0;
  if (config_.clip_norm > 0.0) {
    const double norm = std::sqrt(norm_sq);
    if (norm > config_.clip_norm) clip = config_.clip_norm / norm;
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const Matrix g = ps[k].grad * clip;
    m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * g;
    v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    const auto m_hat = m_[k].array() / bc1;
    const auto v_hat = v_[k].array() / bc2;
    ps[k].value.array() -= config_.learning_rate * m_hat / (v_hat.sqrt() + config_.epsilon);
    ps[k].grad.setZero();
  }
}

double gradient_check(ParameterSet& params, const std::function<Var(Tape&)>& loss,
                      double step, double floor) {
  params.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  auto eval = [&]() {
    Tape tape;
    return loss(tape).scalar();
  };
  double worst = 0.0;
  for (auto& p : params.all()) {
    const Matrix analytic = p.grad;
    for (Eigen::Index i = 0; i < p.value.rows(); ++i)
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
        const double saved = p.value(i, j);
        p.value(i, j) = saved + step;
        const double up = eval();
        p.value(i, j) = saved - step;
        const double down = eval();
        p.value(i, j) = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double a = analytic(i, j);
        const double denom = std::max({std::abs(a), std::abs(numeric), floor});
        worst = std::max(worst, std::abs(a - numeric) / denom);
      }
  }
  params.zero_grad();
  return worst;
}

}  // namespace capt::nn
