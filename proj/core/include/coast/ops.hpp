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
#include <cstdint>
#include <random>

#include "coast/tensor.hpp"

namespace coast {

using Rng = std::mt19937_64;

// Elementwise arithmetic on identically shaped tensors.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, Scalar s);
Tensor mul_scalar(const Tensor& a, Scalar s);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator*(const Tensor& a, Scalar s) { return mul_scalar(a, s); }
inline Tensor operator*(Scalar s, const Tensor& a) { return mul_scalar(a, s); }
inline Tensor operator+(const Tensor& a, Scalar s) { return add_scalar(a, s); }
inline Tensor operator-(const Tensor& a) { return mul_scalar(a, Scalar{-1}); }

// While alive, folds the sign pattern of every relu/leaky_relu input on this
// thread into a fingerprint. Equal fingerprints mean the same linear piece.
class KinkProbe {
 public:
  KinkProbe();
  ~KinkProbe();
  KinkProbe(const KinkProbe&) = delete;
  KinkProbe& operator=(const KinkProbe&) = delete;

  std::uint64_t fingerprint() const { return hash_; }
  static void record(std::span<const Scalar> x);

 private:
  std::uint64_t hash_ = 1469598103934665603ULL;
  KinkProbe* previous_;
};

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, Scalar negative_slope);

// Inverted dropout. In eval mode (train == false) the input is returned as is.
Tensor dropout(const Tensor& x, Scalar rate, bool train, Rng& rng);

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// x [N,Cin,H,W], weight [Cout,Cin,k,k], bias [Cout] (may be undefined).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dOptions options = {});

// y[n,c,:,:] = x[n,c,:,:] * scale + shift where scale/shift are [C] or [N,C].
Tensor channel_affine(const Tensor& x, const Tensor& scale, const Tensor& shift);

Tensor upsample_nearest(const Tensor& x, std::size_t factor);
Tensor downsample_nearest(const Tensor& x, std::size_t factor);

// Softmax / log-softmax over the class axis (axis 1) of [N,K,H,W] or [N,K].
Tensor softmax(const Tensor& logits);
Tensor log_softmax(const Tensor& logits);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Per-sample, per-channel spatial mean and population std of [N,C,H,W].
inline constexpr Scalar kStatsEpsilon = 1e-5;

struct ChannelStats {
  Tensor mu;     // [N,C]
  Tensor sigma;  // [N,C], sqrt(var + eps)
};

Tensor spatial_mean(const Tensor& z);
Tensor spatial_std(const Tensor& z, Scalar eps = kStatsEpsilon);
ChannelStats channel_stats(const Tensor& z, Scalar eps = kStatsEpsilon);

// Per-pixel argmax over axis 1 of [N,K,H,W]; ties resolve to the lowest index.
LabelBatch argmax_classes(const Tensor& probs);

// Rows [begin, end) of the batch axis.
Tensor slice_batch(const Tensor& x, std::size_t begin, std::size_t end);

}  // namespace coast
