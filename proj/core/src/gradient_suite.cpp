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

#include "coast/gradient_suite.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <tuple>

#include "coast/crossdonorm.hpp"
#include "coast/losses.hpp"
#include "coast/ops.hpp"
#include "coast/self_train.hpp"
#include "coast/trainer.hpp"
#include "coast/warmup.hpp"

namespace coast {
namespace {

class Cases {
 public:
  Cases(std::uint64_t seed, double step) : rng_(seed), step_(step) {}

  std::size_t pick(std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng_() % (hi - lo + 1)); }

  Shape map_shape() { return {pick(1, 2), pick(1, 4), pick(2, 8), pick(2, 8)}; }

  // Uniform values in [lo, hi], kept at least `gap` away from zero.
  Tensor random(const Shape& s, double lo = -1.0, double hi = 1.0, double gap = 0.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<Scalar> v(numel(s));
    for (auto& x : v) {
      double d = u(rng_);
      while (std::abs(d) < gap) d = u(rng_);
      x = static_cast<Scalar>(d);
    }
    return Tensor::from_values(s, std::move(v));
  }

  LabelBatch labels(std::size_t n, std::size_t k, std::size_t h, std::size_t w) {
    LabelBatch out{n, h, w, std::vector<std::int32_t>(n * h * w)};
    for (auto& v : out.values) v = static_cast<std::int32_t>(rng_() % k);
    return out;
  }

  // Scalar reduction with fixed random weights so every output entry matters.
  Tensor project(const Tensor& y) {
    auto it = projections_.find(to_string(y.shape()));
    if (it == projections_.end()) it = projections_.emplace(to_string(y.shape()), random(y.shape())).first;
    return sum(y * it->second);
  }

  void check(const std::string& name, const Tensor& x, const std::function<Tensor(const Tensor&)>& f) {
    out.push_back({name, to_string(x.shape()), grad_check(f, x, step_)});
  }

  void check_param(const std::string& name, Tensor param, const std::function<Tensor()>& f) {
    out.push_back({name, to_string(param.shape()), grad_check_parameter(f, param, step_)});
  }

  std::vector<GradCase> out;

 private:
  Rng rng_;
  double step_;
  std::map<std::string, Tensor> projections_;
};

void elementwise(Cases& c) {
  const Shape s = c.map_shape();
  const Tensor b = c.random(s), pos = c.random(s, 0.5, 2.0);
  c.check("add", c.random(s), [&](const Tensor& x) { return c.project(x + b); });
  c.check("sub", c.random(s), [&](const Tensor& x) { return c.project(b - x); });
  c.check("mul", c.random(s), [&](const Tensor& x) { return c.project(x * b); });
  c.check("div_numerator", c.random(s), [&](const Tensor& x) { return c.project(x / pos); });
  c.check("div_denominator", c.random(s, 0.5, 2.0), [&](const Tensor& x) { return c.project(b / x); });
  c.check("add_scalar", c.random(s), [&](const Tensor& x) { return c.project(x + Scalar{0.3}); });
  c.check("mul_scalar", c.random(s), [&](const Tensor& x) { return c.project(x * Scalar{-1.7}); });
  c.check("exp", c.random(s), [&](const Tensor& x) { return c.project(exp(x)); });
  c.check("log", c.random(s, 0.2, 2.0), [&](const Tensor& x) { return c.project(log(x)); });
  c.check("sqrt", c.random(s, 0.2, 2.0), [&](const Tensor& x) { return c.project(sqrt(x)); });
  c.check("relu", c.random(s, -1, 1, 0.01), [&](const Tensor& x) { return c.project(relu(x)); });
  c.check("leaky_relu", c.random(s, -1, 1, 0.01), [&](const Tensor& x) { return c.project(leaky_relu(x, 0.2)); });
  c.check("sum", c.random(s), [&](const Tensor& x) { return sum(x * x); });
  c.check("mean", c.random(s), [&](const Tensor& x) { return mean(x * x); });
}

void structural(Cases& c) {
  const Shape s = c.map_shape();
  const std::size_t n = s[0], ch = s[1], h = s[2], w = s[3];
  const std::size_t cout = c.pick(1, 4);
  for (const auto& [stride, pad, k] : {std::tuple{1u, 1u, 3u}, std::tuple{2u, 1u, 3u}, std::tuple{1u, 0u, 1u}}) {
    if (h + 2 * pad < k || w + 2 * pad < k) continue;
    const Conv2dOptions opt{stride, pad};
    const Tensor wt = c.random({cout, ch, k, k}), bias = c.random({cout}), x0 = c.random(s);
    const std::string tag = "_k" + std::to_string(k) + "s" + std::to_string(stride);
    c.check("conv2d_input" + tag, x0, [&](const Tensor& x) { return c.project(conv2d(x, wt, bias, opt)); });
    c.check("conv2d_weight" + tag, wt, [&](const Tensor& x) { return c.project(conv2d(x0, x, bias, opt)); });
    c.check("conv2d_bias" + tag, bias, [&](const Tensor& x) { return c.project(conv2d(x0, wt, x, opt)); });
  }
  const Tensor scale = c.random({n, ch}), shift = c.random({n, ch}), x0 = c.random(s);
  c.check("channel_affine_input", x0, [&](const Tensor& x) { return c.project(channel_affine(x, scale, shift)); });
  c.check("channel_affine_scale", scale, [&](const Tensor& x) { return c.project(channel_affine(x0, x, shift)); });
  c.check("channel_affine_shift", shift, [&](const Tensor& x) { return c.project(channel_affine(x0, scale, x)); });
  c.check("upsample_nearest", c.random(s), [&](const Tensor& x) { return c.project(upsample_nearest(x, 2)); });
  const Shape even{n, ch, 2 * c.pick(1, 4), 2 * c.pick(1, 4)};
  c.check("downsample_nearest", c.random(even), [&](const Tensor& x) { return c.project(downsample_nearest(x, 2)); });
  c.check("softmax", c.random(s, -2, 2), [&](const Tensor& x) { return c.project(softmax(x)); });
  c.check("log_softmax", c.random(s, -2, 2), [&](const Tensor& x) { return c.project(log_softmax(x)); });
  c.check("spatial_mean", c.random(s), [&](const Tensor& x) { return c.project(spatial_mean(x)); });
  c.check("spatial_std", c.random(s), [&](const Tensor& x) { return c.project(spatial_std(x)); });
}

void losses(Cases& c) {
  const std::size_t n = c.pick(1, 2), k = c.pick(2, 4), h = c.pick(2, 8), w = c.pick(2, 8);
  const Shape s{n, k, h, w};
  const LabelBatch y = c.labels(n, k, h, w);
  const Tensor onehot = one_hot(y, k);
  const Tensor weights = c.random({n, h, w}, 0.1, 1.0);
  const Tensor q = softmax(c.random(s, -2, 2)), p = softmax(c.random(s, -2, 2));
  c.check("softmax_cross_entropy", c.random(s, -2, 2),
          [&](const Tensor& x) { return softmax_cross_entropy(x, onehot, weights); });
  c.check("cross_entropy", c.random(s, -2, 2), [&](const Tensor& x) { return cross_entropy(softmax(x), y, weights); });
  c.check("kl_divergence_p", c.random(s, -2, 2), [&](const Tensor& x) { return kl_divergence(softmax(x), q); });
  c.check("kl_divergence_q", c.random(s, -2, 2), [&](const Tensor& x) { return kl_divergence(p, softmax(x)); });
  c.check("kl_per_pixel", c.random(s, -2, 2), [&](const Tensor& x) { return c.project(kl_per_pixel(softmax(x), q)); });
  const Tensor t = c.random({n, 1, h, w});
  c.check("bce_with_logits_1", t, [&](const Tensor& x) { return bce_with_logits(x, 1); });
  c.check("bce_with_logits_0", t, [&](const Tensor& x) { return bce_with_logits(x, 0); });

  c.check("rectified_pl_loss", c.random(s, -2, 2),
          [&](const Tensor& x) { return rectified_pl_loss(softmax(x), y, weights); });
  c.check("rectified_cross_pl_loss", c.random(s, -2, 2),
          [&](const Tensor& x) { return rectified_cross_pl_loss(softmax(x), y, weights); });
  c.check("consistency_loss", c.random(s, -2, 2), [&](const Tensor& x) { return consistency_loss(softmax(x), p); });
  c.check("kd_loss_soft", c.random(s, -2, 2), [&](const Tensor& x) { return kd_loss(softmax(x), p, KdMode::Soft); });
  c.check("kd_loss_hard", c.random(s, -2, 2), [&](const Tensor& x) { return kd_loss(softmax(x), p, KdMode::Hard); });
}

void stylization(Cases& c) {
  const Shape s = c.map_shape();
  const Tensor zi = c.random(s), zj = c.random(s, -2, 3);
  const StyleVector own = extract_style(zi), other = extract_style(zj);
  c.check("apply_style_input", zi, [&](const Tensor& x) { return c.project(apply_style(x, own, other)); });
  c.check("apply_style_own", zi, [&](const Tensor& x) { return c.project(apply_style(zi, extract_style(x), other)); });
  c.check("apply_style_other", zj, [&](const Tensor& x) { return c.project(apply_style(zi, own, extract_style(x))); });
  c.check("cross_stylize_i", zi, [&](const Tensor& x) {
    const auto pair = cross_stylize(x, zj);
    return c.project(pair.i_to_j) + c.project(pair.j_to_i * Scalar{0.5});
  });
  c.check("cross_stylize_j", zj, [&](const Tensor& x) {
    const auto pair = cross_stylize(zi, x);
    return c.project(pair.i_to_j) + c.project(pair.j_to_i * Scalar{0.5});
  });
}

ModelConfig tiny_model(std::size_t targets, std::uint64_t seed) {
  ModelConfig m;
  m.classes = 3;
  m.num_targets = targets;
  m.encoder.widths = {4, 4, 4};
  m.encoder.strides = {1, 2, 1};
  m.discriminator_widths = {4, 4};
  m.seed = seed;
  return m;
}

// Fresh biases are all zero, which puts ReLUs fed by dead inputs exactly on
// their kink; random biases move the check point off it.
ModelBundle tiny_bundle(Cases& c, std::size_t targets, std::uint64_t seed) {
  ModelBundle bundle(tiny_model(targets, seed));
  for (auto& p : bundle.parameters()) {
    if (p.name.find("bias") == std::string::npos) continue;
    const Tensor r = c.random(p.tensor.shape(), -0.2, 0.2, 0.02);
    std::copy(r.values().begin(), r.values().end(), p.tensor.mutable_values().begin());
  }
  return bundle;
}

void adversarial(Cases& c, std::uint64_t seed) {
  const ModelBundle bundle = tiny_bundle(c, 2, seed);
  const Tensor xs = c.random({2, 3, 8, 8}, 0, 1), xt = c.random({2, 3, 8, 8}, 0, 1);
  const LabelBatch ys = c.labels(2, 3, 8, 8);
  const Tensor ps = bundle.forward(xs, Head::domain(1)).detach(), pt = bundle.forward(xt, Head::domain(1)).detach();
  c.check_param("discriminator_loss", bundle.discriminators[1].convs[0].weight,
                [&] { return discriminator_loss(bundle, ps, pt, 1); });
  c.check_param("generator_loss_encoder", bundle.encoder.blocks[1].weight,
                [&] { return generator_loss(bundle, xs, ys, xt, 1, 0.5).total; });
  c.check_param("generator_loss_classifier", bundle.classifiers[1].conv.weight,
                [&] { return generator_loss(bundle, xs, ys, xt, 1, 0.5).total; });
}

void objective(Cases& c, std::uint64_t seed, std::size_t targets) {
  const ModelBundle bundle = tiny_bundle(c, targets, seed);
  TrainBatch batch;
  batch.source_images = c.random({2, 3, 8, 8}, 0, 1);
  batch.source_labels = c.labels(2, 3, 8, 8);
  for (std::size_t i = 0; i < targets; ++i) {
    batch.target_images.push_back(c.random({2, 3, 8, 8}, 0, 1));
    batch.target_labels.push_back(c.labels(2, 3, 8, 8));
  }
  TrainConfig cfg;
  cfg.lambda = 0.7;
  for (const auto& p : bundle.parameters()) {
    if (p.owner.rfind("discriminator", 0) == 0) continue;
    FrozenTerms frozen;
    c.check_param("total_objective_M" + std::to_string(targets) + "_" + p.owner + "." + p.name, p.tensor, [&] {
      Tensor t = total_objective(bundle, batch, cfg, nullptr, &frozen).total;
      frozen.replay = true;
      return t;
    });
  }
}

}  // namespace

std::vector<GradCase> run_gradient_suite(std::uint64_t seed, double step) {
  Cases c(seed, step);
  elementwise(c);
  structural(c);
  losses(c);
  stylization(c);
  adversarial(c, seed);
  objective(c, seed, 2);
  objective(c, seed, 3);
  return std::move(c.out);
}

}  // namespace coast
