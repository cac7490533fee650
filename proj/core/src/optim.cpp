// Copyright (c) 2026 The coast Authors. All Rights Reserved.
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

#include "coast/optim.hpp"

#include <algorithm>
#include <cmath>

namespace coast {

double poly_learning_rate(double base, std::size_t iteration, std::size_t total, double power) {
  if (total == 0) return base;
  const double frac = 1.0 - static_cast<double>(std::min(iteration, total)) / static_cast<double>(total);
  return base * std::pow(frac, power);
}

SgdMomentum::SgdMomentum(std::vector<Tensor> parameters, double momentum, double weight_decay)
    : params_(std::move(parameters)), momentum_(momentum), weight_decay_(weight_decay) {
  for (const auto& p : params_) velocity_.emplace_back(p.numel(), Scalar{0});
}

void SgdMomentum::step(double learning_rate) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.mutable_values();
    auto& vel = velocity_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const Scalar grad = g[k] + static_cast<Scalar>(weight_decay_) * w[k];
      vel[k] = static_cast<Scalar>(momentum_) * vel[k] + grad;
      w[k] -= static_cast<Scalar>(learning_rate) * vel[k];
    }
  }
}

void SgdMomentum::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

Adam::Adam(std::vector<Tensor> parameters, double beta1, double beta2, double epsilon)
    : params_(std::move(parameters)), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), Scalar{0});
    v_.emplace_back(p.numel(), Scalar{0});
  }
}

void Adam::step(double learning_rate) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.mutable_values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m_[i][k] = static_cast<Scalar>(beta1_ * m_[i][k] + (1 - beta1_) * g[k]);
      v_[i][k] = static_cast<Scalar>(beta2_ * v_[i][k] + (1 - beta2_) * g[k] * g[k]);
      const double mhat = m_[i][k] / c1, vhat = v_[i][k] / c2;
      w[k] -= static_cast<Scalar>(learning_rate * mhat / (std::sqrt(vhat) + epsilon_));
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace coast
