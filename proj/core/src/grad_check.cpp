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

#include "coast/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "coast/errors.hpp"
#include "coast/ops.hpp"

namespace coast {
namespace {

struct Evaluation {
  double value;
  std::uint64_t pattern;
};

Evaluation evaluate(const std::function<Tensor()>& f) {
  NoGradGuard guard;
  KinkProbe probe;
  const Tensor out = f();
  if (out.numel() != 1) throw InvalidShape("grad_check: function must be scalar-valued");
  const double v = static_cast<double>(out.item());
  if (!std::isfinite(v)) throw NonFiniteError("grad_check: non-finite function value");
  return {v, probe.fingerprint()};
}

GradCheckResult compare(const std::vector<Scalar>& analytic, std::span<Scalar> coords,
                        const std::function<Tensor()>& f, double step) {
  GradCheckResult result;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const Scalar saved = coords[i];
    coords[i] = static_cast<Scalar>(saved + step);
    const Evaluation plus = evaluate(f);
    coords[i] = static_cast<Scalar>(saved - step);
    const Evaluation minus = evaluate(f);
    coords[i] = saved;
    if (plus.pattern != minus.pattern) {
      ++result.skipped_kinks;
      continue;
    }
    const double numeric = (plus.value - minus.value) / (2 * step);
    const double a = static_cast<double>(analytic[i]);
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
    if (result.checked++ == 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
      result.analytic = a;
      result.numeric = numeric;
    }
  }
  return result;
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double step) {
  Tensor leaf = x.clone(true);
  const Tensor out = f(leaf);
  if (out.numel() != 1) throw InvalidShape("grad_check: function must be scalar-valued");
  if (!std::isfinite(static_cast<double>(out.item()))) throw NonFiniteError("grad_check: non-finite f(x)");
  out.backward();
  std::vector<Scalar> analytic(leaf.numel(), Scalar{0});
  if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), analytic.begin());

  Tensor probe = x.clone(false);
  return compare(analytic, probe.mutable_values(), [&] { return f(probe); }, step);
}

GradCheckResult grad_check_parameter(const std::function<Tensor()>& f, Tensor& parameter, double step) {
  if (!parameter.is_leaf() || !parameter.requires_grad()) {
    throw InvalidArgument("grad_check_parameter: parameter must be a leaf requiring grad");
  }
  parameter.zero_grad();
  const Tensor out = f();
  if (out.numel() != 1) throw InvalidShape("grad_check: function must be scalar-valued");
  if (!std::isfinite(static_cast<double>(out.item()))) throw NonFiniteError("grad_check: non-finite f(x)");
  out.backward();
  std::vector<Scalar> analytic(parameter.numel(), Scalar{0});
  if (parameter.has_grad()) std::copy(parameter.grad().begin(), parameter.grad().end(), analytic.begin());
  parameter.zero_grad();
  return compare(analytic, parameter.mutable_values(), f, step);
}

}  // namespace coast
