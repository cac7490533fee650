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

#include "coast/crossdonorm.hpp"

#include "coast/errors.hpp"

namespace coast {

StyleVector extract_style(const Tensor& z, int domain_id) {
  auto [mu, sigma] = channel_stats(z);
  return {std::move(mu), std::move(sigma), domain_id};
}

Tensor apply_style(const Tensor& z, const StyleVector& own, const StyleVector& other) {
  if (z.rank() != 4) throw InvalidShape("apply_style: expected [N,C,H,W] features");
  if (own.mu.shape() != own.sigma.shape() || other.mu.shape() != other.sigma.shape() ||
      own.mu.shape() != other.mu.shape()) {
    throw InvalidShape("apply_style: style vectors have mismatched shapes");
  }
  if (own.mu.rank() == 0 || own.mu.shape().back() != z.dim(1)) {
    throw InvalidShape("apply_style: style has " + to_string(own.mu.shape()) + " channels, features " +
                       to_string(z.shape()));
  }
  for (const Tensor* s : {&own.sigma, &other.sigma}) {
    for (Scalar v : s->values()) {
      if (!(v > 0)) throw InvalidArgument("apply_style: style sigma must be strictly positive");
    }
  }
  const Tensor ratio = other.sigma / own.sigma;
  const Tensor shift = other.mu - own.mu * ratio;
  return channel_affine(z, ratio, shift);
}

StylizedPair cross_stylize(const Tensor& z_i, const Tensor& z_j, bool detach_style) {
  if (z_i.shape() != z_j.shape()) {
    throw InvalidShape("cross_stylize: " + to_string(z_i.shape()) + " vs " + to_string(z_j.shape()));
  }
  StyleVector style_i = extract_style(z_i);
  StyleVector style_j = extract_style(z_j);
  if (detach_style) {
    style_i = {style_i.mu.detach(), style_i.sigma.detach(), style_i.domain_id};
    style_j = {style_j.mu.detach(), style_j.sigma.detach(), style_j.domain_id};
  }
  return {apply_style(z_i, style_i, style_j), apply_style(z_j, style_j, style_i)};
}

}  // namespace coast
