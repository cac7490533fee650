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

#include <cstdint>
#include <string>
#include <vector>

#include "coast/grad_check.hpp"

namespace coast {

struct GradCase {
  std::string name;
  std::string shape;
  GradCheckResult result;
};

// Finite-difference checks of every differentiable op, loss and the full
// stage-2 objective on random shapes no larger than 2x4x8x8.
std::vector<GradCase> run_gradient_suite(std::uint64_t seed, double step = 1e-5);

}  // namespace coast
