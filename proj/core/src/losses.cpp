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

#include "coast/losses.hpp"

#include <algorithm>
#include <cmath>

#include "coast/errors.hpp"
#include "coast/ops.hpp"

namespace coast {
namespace {

using Node = detail::Node;

struct MapLayout {
  std::size_t batch, classes, height, width;
  std::size_t hw() const { return height * width; }
  std::size_t pixels() const { return batch * height * width; }
};

MapLayout map_layout(const Tensor& t, const char* what) {
  if (t.rank() != 4) throw InvalidShape(std::string(what) + ": expected [N,K,H,W], got " + to_string(t.shape()));
  return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
}

void check_weights(const Tensor& w, const MapLayout& m) {
  if (!w.defined()) return;
  if (w.shape() != Shape{m.batch, m.height, m.width}) {
    throw InvalidShape("pixel weights " + to_string(w.shape()) + " do not match map");
  }
  for (Scalar v : w.values()) {
    if (!(v >= 0)) throw InvalidArgument("pixel weights must be nonnegative");
  }
}

Scalar safe_log(Scalar v) { return std::log(std::max(v, kProbEpsilon)); }

}  // namespace

void require_normalized(const Tensor& probs, const char* what) {
  const auto m = map_layout(probs, what);
  const auto v = probs.values();
  for (std::size_t b = 0; b < m.batch; ++b) {
    for (std::size_t px = 0; px < m.hw(); ++px) {
      Scalar total = 0;
      for (std::size_t c = 0; c < m.classes; ++c) total += v[(b * m.classes + c) * m.hw() + px];
      if (!(std::abs(total - 1) <= kNormalizationTolerance)) {
        throw NormalizationError(std::string(what) + ": pixel distribution sums to " + std::to_string(total));
      }
    }
  }
}

Tensor one_hot(const LabelBatch& labels, std::size_t classes) {
  const std::size_t hw = labels.height * labels.width;
  std::vector<Scalar> v(labels.batch * classes * hw, Scalar{0});
  for (std::size_t b = 0; b < labels.batch; ++b) {
    for (std::size_t px = 0; px < hw; ++px) {
      const auto c = labels.values[b * hw + px];
      if (c < 0 || static_cast<std::size_t>(c) >= classes) throw InvalidArgument("label out of range");
      v[(b * classes + c) * hw + px] = 1;
    }
  }
  return Tensor::from_values({labels.batch, classes, labels.height, labels.width}, std::move(v));
}

Tensor softmax_cross_entropy(const Tensor& logits, const Tensor& target, const Tensor& pixel_weights) {
  const auto m = map_layout(logits, "softmax_cross_entropy");
  if (target.shape() != logits.shape()) {
    throw InvalidShape("softmax_cross_entropy: target " + to_string(target.shape()) + " vs logits " +
                       to_string(logits.shape()));
  }
  check_weights(pixel_weights, m);
  const std::size_t hw = m.hw();
  const auto tv = target.values();
  std::vector<std::size_t> cls(m.pixels());
  for (std::size_t b = 0; b < m.batch; ++b) {
    for (std::size_t px = 0; px < hw; ++px) {
      std::size_t ones = 0;
      for (std::size_t c = 0; c < m.classes; ++c) {
        const Scalar t = tv[(b * m.classes + c) * hw + px];
        if (t == 1) {
          ++ones;
          cls[b * hw + px] = c;
        } else if (t != 0) {
          ones = 2;
        }
      }
      if (ones != 1) throw InvalidArgument("softmax_cross_entropy: target is not one-hot");
    }
  }
  const Tensor logp = log_softmax(logits);
  const auto lv = logp.values();
  const Scalar inv = Scalar{1} / static_cast<Scalar>(m.pixels());
  Scalar loss = 0;
  std::vector<Scalar> w(m.pixels(), Scalar{1});
  if (pixel_weights.defined()) std::copy(pixel_weights.values().begin(), pixel_weights.values().end(), w.begin());
  for (std::size_t b = 0; b < m.batch; ++b) {
    for (std::size_t px = 0; px < hw; ++px) {
      loss -= w[b * hw + px] * lv[(b * m.classes + cls[b * hw + px]) * hw + px];
    }
  }
  return Tensor::make_result({}, {loss * inv}, {logp}, [=, cls = std::move(cls), w = std::move(w)](const Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < cls.size(); ++i) {
      const std::size_t b = i / hw, px = i % hw;
      g[(b * m.classes + cls[i]) * hw + px] -= self.grad[0] * w[i] * inv;
    }
  });
}

Tensor cross_entropy(const Tensor& probs, const LabelBatch& labels, const Tensor& pixel_weights) {
  const auto m = map_layout(probs, "cross_entropy");
  if (labels.batch != m.batch || labels.height != m.height || labels.width != m.width) {
    throw InvalidShape("cross_entropy: labels do not match probability map " + to_string(probs.shape()));
  }
  check_weights(pixel_weights, m);
  const std::size_t hw = m.hw();
  const auto pv = probs.values();
  const Scalar inv = Scalar{1} / static_cast<Scalar>(m.pixels());
  std::vector<Scalar> w(m.pixels(), Scalar{1});
  if (pixel_weights.defined()) std::copy(pixel_weights.values().begin(), pixel_weights.values().end(), w.begin());
  Scalar loss = 0;
  for (std::size_t i = 0; i < m.pixels(); ++i) {
    const auto c = labels.values[i];
    if (c < 0 || static_cast<std::size_t>(c) >= m.classes) throw InvalidArgument("label out of range");
    loss -= w[i] * safe_log(pv[(i / hw * m.classes + c) * hw + i % hw]);
  }
  return Tensor::make_result({}, {loss * inv}, {probs},
                             [=, cls = labels.values, w = std::move(w)](const Node& self) {
                               auto& g = self.inputs[0]->grad_buffer();
                               const auto& pv = self.inputs[0]->value;
                               for (std::size_t i = 0; i < cls.size(); ++i) {
                                 const std::size_t idx = (i / hw * m.classes + cls[i]) * hw + i % hw;
                                 if (pv[idx] > kProbEpsilon) g[idx] -= self.grad[0] * w[i] * inv / pv[idx];
                               }
                             });
}

Tensor kl_per_pixel(const Tensor& p, const Tensor& q) {
  const auto m = map_layout(p, "kl_divergence");
  if (q.shape() != p.shape()) throw InvalidShape("kl_divergence: p and q shapes differ");
  require_normalized(p, "kl_divergence p");
  require_normalized(q, "kl_divergence q");
  const std::size_t hw = m.hw();
  const auto pv = p.values(), qv = q.values();
  std::vector<Scalar> out(m.pixels(), Scalar{0});
  for (std::size_t b = 0; b < m.batch; ++b) {
    for (std::size_t c = 0; c < m.classes; ++c) {
      for (std::size_t px = 0; px < hw; ++px) {
        const std::size_t idx = (b * m.classes + c) * hw + px;
        if (pv[idx] > 0) out[b * hw + px] += pv[idx] * (safe_log(pv[idx]) - safe_log(qv[idx]));
      }
    }
  }
  return Tensor::make_result({m.batch, m.height, m.width}, std::move(out), {p, q}, [m](const Node& self) {
    const std::size_t hw = m.hw();
    const auto& pv = self.inputs[0]->value;
    const auto& qv = self.inputs[1]->value;
    auto* gp = self.inputs[0]->requires_grad ? &self.inputs[0]->grad_buffer() : nullptr;
    auto* gq = self.inputs[1]->requires_grad ? &self.inputs[1]->grad_buffer() : nullptr;
    for (std::size_t b = 0; b < m.batch; ++b) {
      for (std::size_t c = 0; c < m.classes; ++c) {
        for (std::size_t px = 0; px < hw; ++px) {
          const std::size_t idx = (b * m.classes + c) * hw + px;
          const Scalar up = self.grad[b * hw + px];
          if (gp) {
            (*gp)[idx] += up * (safe_log(pv[idx]) - safe_log(qv[idx]) + (pv[idx] > kProbEpsilon ? 1 : 0));
          }
          if (gq && qv[idx] > kProbEpsilon) (*gq)[idx] -= up * pv[idx] / qv[idx];
        }
      }
    }
  });
}

Tensor kl_divergence(const Tensor& p, const Tensor& q) { return mean(kl_per_pixel(p, q)); }

Tensor bce_with_logits(const Tensor& logits, Scalar target) {
  if (target != 0 && target != 1) throw InvalidArgument("bce target must be 0 or 1");
  if (logits.numel() == 0) throw InvalidShape("bce of an empty tensor");
  const auto xv = logits.values();
  const Scalar inv = Scalar{1} / static_cast<Scalar>(xv.size());
  Scalar loss = 0;
  for (Scalar x : xv) {
    // softplus(x) - t*x, evaluated without overflow
    loss += std::max(x, Scalar{0}) + std::log1p(std::exp(-std::abs(x))) - target * x;
  }
  return Tensor::make_result({}, {loss * inv}, {logits}, [inv, target](const Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const auto& xv = self.inputs[0]->value;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const Scalar sig = Scalar{1} / (1 + std::exp(-xv[i]));
      g[i] += self.grad[0] * (sig - target) * inv;
    }
  });
}

}  // namespace coast
