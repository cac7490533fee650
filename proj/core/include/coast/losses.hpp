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

#include "coast/tensor.hpp"

namespace coast {

// Probability floor applied inside every log of a probability.
inline constexpr Scalar kProbEpsilon = 1e-8;

// Tolerance on per-pixel probability sums accepted by the divergence losses.
inline constexpr Scalar kNormalizationTolerance = 1e-6;

// One-hot encoding [N,K,H,W] of a label batch.
Tensor one_hot(const LabelBatch& labels, std::size_t classes);

// Mean over pixels of w * (-log softmax(logits)[target]). `target` must be a
// one-hot [N,K,H,W]; `pixel_weights` is an optional nonnegative [N,H,W].
Tensor softmax_cross_entropy(const Tensor& logits, const Tensor& target, const Tensor& pixel_weights = {});

// Same loss evaluated on an already normalized probability map and integer
// labels, with the probability clamped at kProbEpsilon inside the log.
Tensor cross_entropy(const Tensor& probs, const LabelBatch& labels, const Tensor& pixel_weights = {});

// Mean over pixels of sum_k p_k log(p_k / q_k), with 0 log 0 = 0 and both
// arguments clamped at kProbEpsilon inside the logs.
Tensor kl_divergence(const Tensor& p, const Tensor& q);

// Per-pixel KL(p || q) as [N,H,W]; same conventions as kl_divergence.
Tensor kl_per_pixel(const Tensor& p, const Tensor& q);

// Mean binary cross-entropy of logits against a constant 0/1 target.
Tensor bce_with_logits(const Tensor& logits, Scalar target);

// Throws NormalizationError unless every pixel of a [N,K,H,W] map sums to 1.
void require_normalized(const Tensor& probs, const char* what);

}  // namespace coast
