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

#include "coast/ops.hpp"
#include "coast/tensor.hpp"

namespace coast {

// Channel-wise (mean, std) of a feature map; one row per sample ([N,C]) or a
// single [C] vector. These statistics carry the appearance of an image.
struct StyleVector {
  Tensor mu;
  Tensor sigma;
  int domain_id = -1;
};

StyleVector extract_style(const Tensor& z, int domain_id = -1);

// Standardizes z with `own` and re-normalizes it with `other`:
//   other.sigma * (z - own.mu) / own.sigma + other.mu   (per channel)
// Differentiable with respect to z and both style vectors.
Tensor apply_style(const Tensor& z, const StyleVector& own, const StyleVector& other);

struct StylizedPair {
  Tensor i_to_j;  // content of z_i, statistics of z_j
  Tensor j_to_i;
};

// Exchanges styles between two equally shaped feature maps, sample n of z_i
// with sample n of z_j. With detach_style the statistics act as constants.
StylizedPair cross_stylize(const Tensor& z_i, const Tensor& z_j, bool detach_style = false);

}  // namespace coast
