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
#include <functional>

#include "coast/tensor.hpp"

namespace coast {

// Denominator floor of the relative error, so coordinates whose true
// gradient is zero are judged on an absolute scale.
inline constexpr double kGradCheckFloor = 1e-6;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  // Coordinates whose +-step evaluations fall on different relu pieces; the
  // central difference is meaningless there.
  std::size_t skipped_kinks = 0;
};

// Compares the tape gradient of scalar f at x with central finite
// differences at every coordinate. Error per coordinate is
// |a - n| / max(|a|, |n|, kGradCheckFloor). Coordinates straddling a relu
// kink are counted but not compared.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double step = 1e-5);

// Variant for a leaf parameter captured by f: perturbs it in place and
// restores it afterwards.
GradCheckResult grad_check_parameter(const std::function<Tensor()>& f, Tensor& parameter, double step = 1e-5);

}  // namespace coast
