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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "coast/ops.hpp"
#include "coast/segnet.hpp"
#include "coast/synthetic.hpp"
#include "coast/tensor.hpp"
#include "coast/trainer.hpp"

namespace coast::test {

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Scalar> v(numel(shape));
  for (auto& x : v) x = static_cast<Scalar>(u(rng));
  return Tensor::from_values(shape, std::move(v), requires_grad);
}

inline LabelBatch random_labels(std::size_t n, std::size_t k, std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LabelBatch out{n, h, w, std::vector<std::int32_t>(n * h * w)};
  for (auto& v : out.values) v = static_cast<std::int32_t>(rng() % k);
  return out;
}

// Per-pixel softmax over axis 1, written out independently of the library.
inline std::vector<double> softmax_oracle(const Tensor& logits) {
  const auto& s = logits.shape();
  const std::size_t n = s[0], k = s[1], hw = s[2] * s[3];
  const auto v = logits.values();
  std::vector<double> out(v.size());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t p = 0; p < hw; ++p) {
      double mx = -1e300, z = 0;
      for (std::size_t c = 0; c < k; ++c) mx = std::max(mx, double(v[(b * k + c) * hw + p]));
      for (std::size_t c = 0; c < k; ++c) z += std::exp(double(v[(b * k + c) * hw + p]) - mx);
      for (std::size_t c = 0; c < k; ++c) out[(b * k + c) * hw + p] = std::exp(double(v[(b * k + c) * hw + p]) - mx) / z;
    }
  }
  return out;
}

inline double at4(const Tensor& t, std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
  const auto& s = t.shape();
  return static_cast<double>(t.values()[((n * s[1] + c) * s[2] + y) * s[3] + x]);
}

// Per-pixel -log p[label], averaged with optional weights [N,H,W].
inline double weighted_ce_oracle(const Tensor& probs, const LabelBatch& y, const std::vector<double>& w = {}) {
  const std::size_t k = probs.dim(1), hw = y.height * y.width;
  double acc = 0;
  for (std::size_t n = 0; n < y.batch; ++n) {
    for (std::size_t q = 0; q < hw; ++q) {
      const auto c = static_cast<std::size_t>(y.values[n * hw + q]);
      const double wt = w.empty() ? 1.0 : w[n * hw + q];
      acc -= wt * std::log(std::max(double(probs.values()[(n * k + c) * hw + q]), 1e-8));
    }
  }
  return acc / static_cast<double>(y.pixels());
}

// Per-pixel KL(p || q) summed over classes, [N*H*W].
inline std::vector<double> kl_pixel_oracle(const Tensor& p, const Tensor& q) {
  const std::size_t n = p.dim(0), k = p.dim(1), hw = p.dim(2) * p.dim(3);
  std::vector<double> out(n * hw, 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < hw; ++i) {
        const double a = p.values()[(b * k + c) * hw + i], r = q.values()[(b * k + c) * hw + i];
        if (a > 0) out[b * hw + i] += a * std::log(std::max(a, 1e-8) / std::max(r, 1e-8));
      }
    }
  }
  return out;
}

inline ModelConfig tiny_model(std::size_t targets = 2, std::uint64_t seed = 11) {
  ModelConfig c;
  c.classes = 3;
  c.num_targets = targets;
  c.encoder.widths = {4, 6, 6};
  c.encoder.strides = {1, 2, 1};
  c.discriminator_widths = {4, 4};
  c.seed = seed;
  return c;
}

inline BenchmarkConfig tiny_data(std::size_t targets = 2) {
  BenchmarkConfig c;
  c.height = c.width = 16;
  c.classes = 3;
  c.num_targets = targets;
  c.source_count = 12;
  c.target_count = 8;
  c.target_eval_count = 4;
  c.unseen_count = 4;
  c.seed = 2;
  return c;
}

inline TrainBatch micro_batch(std::size_t m, std::uint64_t seed, std::size_t n = 1, std::size_t hw = 8) {
  TrainBatch b;
  b.source_images = random_tensor({n, 3, hw, hw}, seed, 0, 1);
  b.source_labels = random_labels(n, 3, hw, hw, seed + 1);
  for (std::size_t i = 0; i < m; ++i) {
    b.target_images.push_back(random_tensor({n, 3, hw, hw}, seed + 10 + i, 0.1 * double(i), 1));
    b.target_labels.push_back(random_labels(n, 3, hw, hw, seed + 20 + i));
  }
  return b;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Every term evaluated from model outputs with the test-side oracles.
inline double hand_summed_total(const ModelBundle& m, const TrainBatch& b, double lambda, double gamma) {
  const std::size_t M = m.num_targets();
  const Tensor zs = m.features(b.source_images);
  double total = weighted_ce_oracle(m.agnostic.probs(zs), b.source_labels);
  for (std::size_t i = 0; i < M; ++i) total += weighted_ce_oracle(m.classifiers[i].probs(zs), b.source_labels);

  for (std::size_t i = 0; i < M; ++i) {
    const Tensor zi = m.features(b.target_images[i]);
    const Tensor pi = m.classifiers[i].probs(zi);
    std::vector<Tensor> cross(M);
    std::vector<double> w(b.target_labels[i].pixels(), 0.0);
    for (std::size_t j = 0; j < M; ++j) {
      if (j == i) continue;
      cross[j] = m.forward(b.target_images[i], Head::domain(j), b.target_images[j]);
      const auto kl = kl_pixel_oracle(pi, cross[j]);
      for (std::size_t k = 0; k < w.size(); ++k) w[k] += std::exp(-gamma * kl[k]) / static_cast<double>(M - 1);
    }
    total += mean_of(kl_pixel_oracle(m.agnostic.probs(zi), pi)) / static_cast<double>(M);
    total += weighted_ce_oracle(pi, b.target_labels[i], w);
    double pair = 0;
    for (std::size_t j = 0; j < M; ++j) {
      if (j == i) continue;
      pair += weighted_ce_oracle(cross[j], b.target_labels[i], w);
      pair += mean_of(kl_pixel_oracle(cross[j], pi));
    }
    total += lambda / static_cast<double>(M - 1) * pair;
  }
  return total;
}

}  // namespace coast::test
