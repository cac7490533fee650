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

#include "coast/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "coast/errors.hpp"

namespace coast {
namespace {

using Node = detail::Node;
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw InvalidShape(std::string(op) + ": shape " + to_string(a.shape()) + " vs " +
                       to_string(b.shape()));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw InvalidShape(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                       to_string(t.shape()));
  }
}

// Accumulation target for input k, or nullptr when it needs no gradient.
std::vector<Scalar>* grad_of(const Node& self, std::size_t k) {
  auto& in = *self.inputs[k];
  return in.requires_grad ? &in.grad_buffer() : nullptr;
}

template <class Forward, class Derivative>
Tensor unary(const Tensor& a, Forward f, Derivative d) {
  const auto x = a.values();
  std::vector<Scalar> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return Tensor::make_result(a.shape(), std::move(y), {a}, [d](const Node& self) {
    auto* ga = grad_of(self, 0);
    if (!ga) return;
    const auto& x = self.inputs[0]->value;
    for (std::size_t i = 0; i < x.size(); ++i) (*ga)[i] += self.grad[i] * d(x[i], self.value[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<Scalar> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] + b.values()[i];
  return Tensor::make_result(a.shape(), std::move(y), {a, b}, [](const Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (auto* g = grad_of(self, k)) {
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<Scalar> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] - b.values()[i];
  return Tensor::make_result(a.shape(), std::move(y), {a, b}, [](const Node& self) {
    if (auto* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    }
    if (auto* g = grad_of(self, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<Scalar> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] * b.values()[i];
  return Tensor::make_result(a.shape(), std::move(y), {a, b}, [](const Node& self) {
    const auto& av = self.inputs[0]->value;
    const auto& bv = self.inputs[1]->value;
    if (auto* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * bv[i];
    }
    if (auto* g = grad_of(self, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * av[i];
    }
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  std::vector<Scalar> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] / b.values()[i];
  return Tensor::make_result(a.shape(), std::move(y), {a, b}, [](const Node& self) {
    const auto& bv = self.inputs[1]->value;
    if (auto* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] / bv[i];
    }
    if (auto* g = grad_of(self, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i] * self.value[i] / bv[i];
    }
  });
}

Tensor add_scalar(const Tensor& a, Scalar s) {
  return unary(a, [s](Scalar x) { return x + s; }, [](Scalar, Scalar) { return Scalar{1}; });
}

Tensor mul_scalar(const Tensor& a, Scalar s) {
  return unary(a, [s](Scalar x) { return x * s; }, [s](Scalar, Scalar) { return s; });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](Scalar x) { return std::exp(x); }, [](Scalar, Scalar y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(a, [](Scalar x) { return std::log(x); }, [](Scalar x, Scalar) { return 1 / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary(a, [](Scalar x) { return std::sqrt(x); }, [](Scalar, Scalar y) { return 1 / (2 * y); });
}

namespace {
thread_local KinkProbe* t_probe = nullptr;
}  // namespace

KinkProbe::KinkProbe() : previous_(t_probe) { t_probe = this; }
KinkProbe::~KinkProbe() { t_probe = previous_; }

void KinkProbe::record(std::span<const Scalar> x) {
  if (!t_probe) return;
  std::uint64_t h = t_probe->hash_;
  for (auto v : x) h = (h ^ static_cast<std::uint64_t>(v > 0)) * 1099511628211ULL;
  t_probe->hash_ = h;
}

Tensor relu(const Tensor& x) {
  KinkProbe::record(x.values());
  return unary(x, [](Scalar v) { return v > 0 ? v : Scalar{0}; },
               [](Scalar v, Scalar) { return v > 0 ? Scalar{1} : Scalar{0}; });
}

Tensor leaky_relu(const Tensor& x, Scalar negative_slope) {
  KinkProbe::record(x.values());
  return unary(x, [negative_slope](Scalar v) { return v > 0 ? v : v * negative_slope; },
               [negative_slope](Scalar v, Scalar) { return v > 0 ? Scalar{1} : negative_slope; });
}

Tensor dropout(const Tensor& x, Scalar rate, bool train, Rng& rng) {
  if (rate < 0 || rate >= 1) throw InvalidArgument("dropout rate must be in [0,1)");
  if (!train || rate == 0) return x;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Scalar keep_scale = Scalar{1} / (1 - rate);
  std::vector<Scalar> mask(x.numel());
  for (auto& m : mask) m = uniform(rng) < rate ? Scalar{0} : keep_scale;
  std::vector<Scalar> y(x.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x.values()[i] * mask[i];
  return Tensor::make_result(x.shape(), std::move(y), {x}, [mask = std::move(mask)](const Node& self) {
    if (auto* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * mask[i];
    }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dOptions options) {
  require_rank(x, 4, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != cin || weight.dim(3) != k) {
    throw InvalidShape("conv2d: weight " + to_string(weight.shape()) + " incompatible with input " +
                       to_string(x.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{cout}) throw InvalidShape("conv2d: bias shape");
  const std::size_t s = options.stride, p = options.padding;
  if (s == 0 || h + 2 * p < k || w + 2 * p < k) throw InvalidShape("conv2d: kernel larger than input");
  const std::size_t ho = (h + 2 * p - k) / s + 1, wo = (w + 2 * p - k) / s + 1;
  const std::size_t ckk = cin * k * k, hwo = ho * wo, hw = h * w;
  const bool pointwise = k == 1 && s == 1 && p == 0;

  // Eigen operands are copied into freshly allocated (aligned) matrices: the
  // vectorized kernels peel unaligned heads, so views into arbitrary buffers
  // would make the rounding depend on heap addresses.
  const RowMatrix wmat = ConstMatrixMap(weight.values().data(), cout, ckk);
  std::vector<RowMatrix> cols(n, RowMatrix(ckk, hwo));
  const auto xv = x.values();
  for (std::size_t b = 0; b < n; ++b) {
    Scalar* col = cols[b].data();
    if (pointwise) {
      std::copy_n(xv.data() + b * cin * hw, cin * hw, col);
      continue;
    }
    std::fill_n(col, ckk * hwo, Scalar{0});
    for (std::size_t c = 0; c < cin; ++c) {
      const Scalar* plane = xv.data() + (b * cin + c) * hw;
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          Scalar* row = col + ((c * k + ky) * k + kx) * hwo;
          for (std::size_t oy = 0; oy < ho; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - static_cast<std::ptrdiff_t>(p);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t ox = 0; ox < wo; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - static_cast<std::ptrdiff_t>(p);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              row[oy * wo + ox] = plane[iy * w + ix];
            }
          }
        }
      }
    }
  }

  std::vector<Scalar> y(n * cout * hwo);
  RowMatrix out(cout, hwo);
  for (std::size_t b = 0; b < n; ++b) {
    out.noalias() = wmat * cols[b];
    Scalar* dst = y.data() + b * cout * hwo;
    for (std::size_t o = 0; o < cout; ++o) {
      const Scalar bo = bias.defined() ? bias.values()[o] : Scalar{0};
      for (std::size_t q = 0; q < hwo; ++q) dst[o * hwo + q] = out(o, q) + bo;
    }
  }

  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return Tensor::make_result(
      {n, cout, ho, wo}, std::move(y), std::move(inputs),
      [=, cols = std::move(cols)](const Node& self) {
        auto* gx = grad_of(self, 0);
        auto* gw = grad_of(self, 1);
        auto* gb = self.inputs.size() > 2 ? grad_of(self, 2) : nullptr;
        const RowMatrix wmat = ConstMatrixMap(self.inputs[1]->value.data(), cout, ckk);
        RowMatrix dy(cout, hwo), dw(cout, ckk), dcol(ckk, hwo);
        for (std::size_t b = 0; b < n; ++b) {
          std::copy_n(self.grad.data() + b * cout * hwo, cout * hwo, dy.data());
          if (gw) {
            dw.noalias() = dy * cols[b].transpose();
            for (std::size_t e = 0; e < cout * ckk; ++e) (*gw)[e] += dw.data()[e];
          }
          if (gb) {
            for (std::size_t o = 0; o < cout; ++o) {
              Scalar acc = 0;
              for (std::size_t q = 0; q < hwo; ++q) acc += dy(o, q);
              (*gb)[o] += acc;
            }
          }
          if (!gx) continue;
          dcol.noalias() = wmat.transpose() * dy;
          if (pointwise) {
            Scalar* dst = gx->data() + b * cin * hw;
            for (std::size_t e = 0; e < cin * hw; ++e) dst[e] += dcol.data()[e];
            continue;
          }
          for (std::size_t c = 0; c < cin; ++c) {
            Scalar* plane = gx->data() + (b * cin + c) * hw;
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                const Scalar* row = dcol.data() + ((c * k + ky) * k + kx) * hwo;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                  const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - static_cast<std::ptrdiff_t>(p);
                  if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                  for (std::size_t ox = 0; ox < wo; ++ox) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - static_cast<std::ptrdiff_t>(p);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                    plane[iy * w + ix] += row[oy * wo + ox];
                  }
                }
              }
            }
          }
        }
      });
}

Tensor channel_affine(const Tensor& x, const Tensor& scale, const Tensor& shift) {
  require_rank(x, 4, "channel_affine");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  require_same_shape(scale, shift, "channel_affine scale/shift");
  const bool per_sample = scale.shape() == Shape{n, c};
  if (!per_sample && scale.shape() != Shape{c}) {
    throw InvalidShape("channel_affine: scale " + to_string(scale.shape()) + " does not match " +
                       to_string(x.shape()));
  }
  auto param_index = [per_sample, c](std::size_t b, std::size_t ch) { return per_sample ? b * c + ch : ch; };
  std::vector<Scalar> y(x.numel());
  const auto xv = x.values(), sv = scale.values(), tv = shift.values();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const Scalar a = sv[param_index(b, ch)], t = tv[param_index(b, ch)];
      const std::size_t base = (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) y[base + i] = xv[base + i] * a + t;
    }
  }
  return Tensor::make_result(x.shape(), std::move(y), {x, scale, shift}, [=](const Node& self) {
    const auto& xv = self.inputs[0]->value;
    const auto& sv = self.inputs[1]->value;
    auto* gx = grad_of(self, 0);
    auto* gs = grad_of(self, 1);
    auto* gt = grad_of(self, 2);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t base = (b * c + ch) * hw, pi = param_index(b, ch);
        Scalar ds = 0, dt = 0;
        for (std::size_t i = 0; i < hw; ++i) {
          const Scalar g = self.grad[base + i];
          ds += g * xv[base + i];
          dt += g;
          if (gx) (*gx)[base + i] += g * sv[pi];
        }
        if (gs) (*gs)[pi] += ds;
        if (gt) (*gt)[pi] += dt;
      }
    }
  });
}

Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
  require_rank(x, 4, "upsample_nearest");
  if (factor == 0) throw InvalidArgument("upsample factor must be positive");
  if (factor == 1) return x;
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t ho = h * factor, wo = w * factor;
  std::vector<Scalar> y(planes * ho * wo);
  const auto xv = x.values();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        y[(pl * ho + i) * wo + j] = xv[(pl * h + i / factor) * w + j / factor];
      }
    }
  }
  return Tensor::make_result({x.dim(0), x.dim(1), ho, wo}, std::move(y), {x}, [=](const Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t pl = 0; pl < planes; ++pl) {
      for (std::size_t i = 0; i < ho; ++i) {
        for (std::size_t j = 0; j < wo; ++j) {
          (*g)[(pl * h + i / factor) * w + j / factor] += self.grad[(pl * ho + i) * wo + j];
        }
      }
    }
  });
}

Tensor downsample_nearest(const Tensor& x, std::size_t factor) {
  require_rank(x, 4, "downsample_nearest");
  if (factor == 0) throw InvalidArgument("downsample factor must be positive");
  if (factor == 1) return x;
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % factor || w % factor) throw InvalidShape("downsample_nearest: extent not divisible by factor");
  const std::size_t ho = h / factor, wo = w / factor;
  std::vector<Scalar> y(planes * ho * wo);
  const auto xv = x.values();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) y[(pl * ho + i) * wo + j] = xv[(pl * h + i * factor) * w + j * factor];
    }
  }
  return Tensor::make_result({x.dim(0), x.dim(1), ho, wo}, std::move(y), {x}, [=](const Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t pl = 0; pl < planes; ++pl) {
      for (std::size_t i = 0; i < ho; ++i) {
        for (std::size_t j = 0; j < wo; ++j) {
          (*g)[(pl * h + i * factor) * w + j * factor] += self.grad[(pl * ho + i) * wo + j];
        }
      }
    }
  });
}

namespace {

struct ClassLayout {
  std::size_t batch, classes, pixels;
};

ClassLayout class_layout(const Tensor& t, const char* op) {
  if (t.rank() != 2 && t.rank() != 4) throw InvalidShape(std::string(op) + ": expected [N,K] or [N,K,H,W]");
  const std::size_t pixels = t.rank() == 4 ? t.dim(2) * t.dim(3) : 1;
  return {t.dim(0), t.dim(1), pixels};
}

}  // namespace

Tensor softmax(const Tensor& logits) {
  const auto [n, k, hw] = class_layout(logits, "softmax");
  const auto xv = logits.values();
  std::vector<Scalar> y(xv.size());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t px = 0; px < hw; ++px) {
      const std::size_t base = b * k * hw + px;
      Scalar m = xv[base];
      for (std::size_t c = 1; c < k; ++c) m = std::max(m, xv[base + c * hw]);
      Scalar z = 0;
      for (std::size_t c = 0; c < k; ++c) z += (y[base + c * hw] = std::exp(xv[base + c * hw] - m));
      for (std::size_t c = 0; c < k; ++c) y[base + c * hw] /= z;
    }
  }
  return Tensor::make_result(logits.shape(), std::move(y), {logits}, [n, k, hw](const Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t px = 0; px < hw; ++px) {
        const std::size_t base = b * k * hw + px;
        Scalar dot = 0;
        for (std::size_t c = 0; c < k; ++c) dot += self.grad[base + c * hw] * self.value[base + c * hw];
        for (std::size_t c = 0; c < k; ++c) {
          (*g)[base + c * hw] += self.value[base + c * hw] * (self.grad[base + c * hw] - dot);
        }
      }
    }
  });
}

Tensor log_softmax(const Tensor& logits) {
  const auto [n, k, hw] = class_layout(logits, "log_softmax");
  const auto xv = logits.values();
  std::vector<Scalar> y(xv.size());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t px = 0; px < hw; ++px) {
      const std::size_t base = b * k * hw + px;
      std::size_t top = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (xv[base + c * hw] > xv[base + top * hw]) top = c;
      }
      const Scalar m = xv[base + top * hw];
      Scalar rest = 0;
      for (std::size_t c = 0; c < k; ++c) {
        if (c != top) rest += std::exp(xv[base + c * hw] - m);
      }
      const Scalar log_z = std::log1p(rest);
      for (std::size_t c = 0; c < k; ++c) y[base + c * hw] = (xv[base + c * hw] - m) - log_z;
    }
  }
  return Tensor::make_result(logits.shape(), std::move(y), {logits}, [n, k, hw](const Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t px = 0; px < hw; ++px) {
        const std::size_t base = b * k * hw + px;
        Scalar total = 0;
        for (std::size_t c = 0; c < k; ++c) total += self.grad[base + c * hw];
        for (std::size_t c = 0; c < k; ++c) {
          (*g)[base + c * hw] += self.grad[base + c * hw] - std::exp(self.value[base + c * hw]) * total;
        }
      }
    }
  });
}

Tensor sum(const Tensor& x) {
  Scalar total = 0;
  for (Scalar v : x.values()) total += v;
  return Tensor::make_result({}, {total}, {x}, [](const Node& self) {
    if (auto* g = grad_of(self, 0)) {
      for (auto& v : *g) v += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw InvalidShape("mean of an empty tensor");
  return mul_scalar(sum(x), Scalar{1} / static_cast<Scalar>(x.numel()));
}

Tensor spatial_mean(const Tensor& z) {
  require_rank(z, 4, "spatial_mean");
  const std::size_t n = z.dim(0), c = z.dim(1), hw = z.dim(2) * z.dim(3);
  if (hw == 0) throw InvalidShape("channel statistics need a non-empty spatial extent");
  std::vector<Scalar> mu(n * c);
  const auto zv = z.values();
  for (std::size_t pl = 0; pl < n * c; ++pl) {
    Scalar acc = 0;
    for (std::size_t i = 0; i < hw; ++i) acc += zv[pl * hw + i];
    mu[pl] = acc / static_cast<Scalar>(hw);
  }
  return Tensor::make_result({n, c}, std::move(mu), {z}, [hw](const Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t pl = 0; pl < self.value.size(); ++pl) {
      const Scalar d = self.grad[pl] / static_cast<Scalar>(hw);
      for (std::size_t i = 0; i < hw; ++i) (*g)[pl * hw + i] += d;
    }
  });
}

Tensor spatial_std(const Tensor& z, Scalar eps) {
  require_rank(z, 4, "spatial_std");
  const std::size_t n = z.dim(0), c = z.dim(1), hw = z.dim(2) * z.dim(3);
  if (hw == 0) throw InvalidShape("channel statistics need a non-empty spatial extent");
  std::vector<Scalar> sigma(n * c), mu(n * c);
  const auto zv = z.values();
  for (std::size_t pl = 0; pl < n * c; ++pl) {
    Scalar acc = 0;
    for (std::size_t i = 0; i < hw; ++i) acc += zv[pl * hw + i];
    mu[pl] = acc / static_cast<Scalar>(hw);
    Scalar var = 0;
    for (std::size_t i = 0; i < hw; ++i) {
      const Scalar d = zv[pl * hw + i] - mu[pl];
      var += d * d;
    }
    sigma[pl] = std::sqrt(var / static_cast<Scalar>(hw) + eps);
  }
  return Tensor::make_result({n, c}, std::move(sigma), {z}, [hw, mu = std::move(mu)](const Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    const auto& zv = self.inputs[0]->value;
    for (std::size_t pl = 0; pl < self.value.size(); ++pl) {
      const Scalar d = self.grad[pl] / (static_cast<Scalar>(hw) * self.value[pl]);
      for (std::size_t i = 0; i < hw; ++i) (*g)[pl * hw + i] += d * (zv[pl * hw + i] - mu[pl]);
    }
  });
}

ChannelStats channel_stats(const Tensor& z, Scalar eps) { return {spatial_mean(z), spatial_std(z, eps)}; }

LabelBatch argmax_classes(const Tensor& probs) {
  require_rank(probs, 4, "argmax_classes");
  const std::size_t n = probs.dim(0), k = probs.dim(1), h = probs.dim(2), w = probs.dim(3), hw = h * w;
  LabelBatch out{n, h, w, std::vector<std::int32_t>(n * hw)};
  const auto pv = probs.values();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t px = 0; px < hw; ++px) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (pv[(b * k + c) * hw + px] > pv[(b * k + best) * hw + px]) best = c;
      }
      out.values[b * hw + px] = static_cast<std::int32_t>(best);
    }
  }
  return out;
}

Tensor slice_batch(const Tensor& x, std::size_t begin, std::size_t end) {
  if (x.rank() == 0 || begin > end || end > x.dim(0)) throw InvalidShape("slice_batch: bad range");
  const std::size_t row = x.numel() / x.dim(0);
  Shape shape = x.shape();
  shape[0] = end - begin;
  std::vector<Scalar> y(x.values().begin() + begin * row, x.values().begin() + end * row);
  return Tensor::make_result(std::move(shape), std::move(y), {x}, [begin, row](const Node& self) {
    if (auto* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[begin * row + i] += self.grad[i];
    }
  });
}

}  // namespace coast
