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

#pragma once

#include <cstddef>
#include <vector>

#include "coast/tensor.hpp"

namespace coast {

// base * (1 - iteration / total)^power
double poly_learning_rate(double base, std::size_t iteration, std::size_t total, double power);

class SgdMomentum {
 public:
  SgdMomentum(std::vector<Tensor> parameters, double momentum, double weight_decay = 0.0);

  void step(double learning_rate);
  void zero_grad();

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<Scalar>> velocity_;
  double momentum_;
  double weight_decay_;
};

class Adam {
 public:
  Adam(std::vector<Tensor> parameters, double beta1 = 0.9, double beta2 = 0.99, double epsilon = 1e-8);

  void step(double learning_rate);
  void zero_grad();

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<Scalar>> m_, v_;
  double beta1_, beta2_, epsilon_;
  std::size_t t_ = 0;
};

}  // namespace coast
