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

#include "coast/segnet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "coast/crossdonorm.hpp"
#include "coast/errors.hpp"
#include "coast/synthetic.hpp"

namespace coast {
namespace {

Conv2d make_conv(std::size_t cin, std::size_t cout, std::size_t k, Conv2dOptions options, Rng& rng) {
  const double fan_in = static_cast<double>(cin * k * k);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
  std::vector<Scalar> w(cout * cin * k * k);
  for (auto& v : w) v = static_cast<Scalar>(normal(rng));
  return {Tensor::from_values({cout, cin, k, k}, std::move(w), true), Tensor::zeros({cout}, true), options};
}

Classifier make_classifier(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  return {make_conv(cfg.encoder.widths.back(), cfg.classes, 1, {}, rng), cfg.encoder.output_stride()};
}

Discriminator make_discriminator(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Discriminator d;
  d.leaky_slope = static_cast<Scalar>(cfg.leaky_slope);
  std::size_t in = cfg.classes;
  for (std::size_t width : cfg.discriminator_widths) {
    d.convs.push_back(make_conv(in, width, 3, {2, 1}, rng));
    in = width;
  }
  d.convs.push_back(make_conv(in, 1, 3, {2, 1}, rng));
  return d;
}

void append_conv(std::vector<NamedParameter>& out, const std::string& owner, const std::string& prefix,
                 const Conv2d& conv) {
  out.push_back({owner, prefix + ".weight", conv.weight});
  out.push_back({owner, prefix + ".bias", conv.bias});
}

}  // namespace

void EncoderConfig::validate() const {
  if (widths.empty()) throw InvalidArgument("encoder needs at least one block");
  if (strides.size() != widths.size()) throw InvalidArgument("encoder strides must match widths");
  if (!(dropout >= 0 && dropout < 1)) throw InvalidArgument("dropout rate must be in [0,1)");
  if (dropout_after >= widths.size()) throw InvalidArgument("dropout block index out of range");
  for (auto t : taps) {
    if (t >= widths.size()) throw InvalidArgument("stylization tap index out of range");
  }
  for (auto s : strides) {
    if (s == 0) throw InvalidArgument("encoder stride must be positive");
  }
}

std::size_t EncoderConfig::output_stride() const {
  std::size_t s = 1;
  for (auto v : strides) s *= v;
  return s;
}

bool EncoderConfig::is_tap(std::size_t block) const {
  return std::find(taps.begin(), taps.end(), block) != taps.end();
}

void ModelConfig::validate() const {
  encoder.validate();
  if (classes < 2) throw InvalidArgument("model needs at least 2 classes");
  if (num_targets < 1) throw InvalidArgument("model needs at least one target domain");
}

Encoder::Encoder(const EncoderConfig& cfg, std::size_t in_channels, std::uint64_t seed) : config(cfg) {
  Rng rng(seed);
  std::size_t in = in_channels;
  for (std::size_t b = 0; b < cfg.widths.size(); ++b) {
    blocks.push_back(make_conv(in, cfg.widths[b], 3, {cfg.strides[b], 1}, rng));
    in = cfg.widths[b];
  }
}

Tensor Encoder::run(const Tensor& x, std::size_t first, std::size_t last, const ForwardContext& ctx) const {
  Tensor z = x;
  for (std::size_t b = first; b < last; ++b) {
    z = relu(blocks[b](z));
    if (b == config.dropout_after && config.dropout > 0 && ctx.train) {
      if (!ctx.rng) throw InvalidArgument("train-mode forward needs an rng for dropout");
      z = dropout(z, static_cast<Scalar>(config.dropout), true, *ctx.rng);
    }
  }
  return z;
}

Tensor Classifier::logits(const Tensor& features) const { return upsample_nearest(conv(features), upsample); }

Tensor Classifier::probs(const Tensor& features) const { return softmax(logits(features)); }

Tensor Discriminator::operator()(const Tensor& probs) const {
  Tensor z = probs;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    z = convs[i](z);
    if (i + 1 < convs.size()) z = leaky_relu(z, leaky_slope);
  }
  return z;
}

std::string Head::name() const {
  return kind == Kind::Agnostic ? std::string("agnostic") : "T" + std::to_string(index + 1);
}

std::string classifier_owner(std::size_t domain) { return "classifier_t" + std::to_string(domain + 1); }
std::string discriminator_owner(std::size_t domain) { return "discriminator_t" + std::to_string(domain + 1); }

ModelBundle::ModelBundle(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  encoder = Encoder(config_.encoder, config_.in_channels, mix_seed(config_.seed, 0));
  for (std::size_t i = 0; i < config_.num_targets; ++i) {
    classifiers.push_back(make_classifier(config_, mix_seed(config_.seed, 100 + i)));
    discriminators.push_back(make_discriminator(config_, mix_seed(config_.seed, 200 + i)));
  }
  agnostic = make_classifier(config_, mix_seed(config_.seed, 99));
}

ModelBundle ModelBundle::clone() const {
  ModelBundle copy(config_);
  const auto src = parameters();
  auto dst = copy.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto values = dst[i].tensor.mutable_values();
    std::copy(src[i].tensor.values().begin(), src[i].tensor.values().end(), values.begin());
  }
  return copy;
}

const Classifier& ModelBundle::classifier(Head head) const {
  if (head.kind == Head::Kind::Agnostic) return agnostic;
  if (head.index >= classifiers.size()) {
    throw InvalidArgument("unknown classifier head " + head.name());
  }
  return classifiers[head.index];
}

Tensor ModelBundle::forward(const Tensor& x, Head head, const Tensor& style_source, const ForwardContext& ctx) const {
  const Classifier& cls = classifier(head);
  return cls.probs(features(x, style_source, ctx));
}

Tensor ModelBundle::features(const Tensor& x, const Tensor& style_source, const ForwardContext& ctx) const {
  if (style_source.defined() && style_source.shape() != x.shape()) {
    throw InvalidShape("forward: style source " + to_string(style_source.shape()) + " vs input " +
                       to_string(x.shape()));
  }
  std::size_t last_tap = 0;
  for (auto t : config_.encoder.taps) last_tap = std::max(last_tap, t);
  Tensor z = x, s = style_source;
  for (std::size_t b = 0; b < encoder.blocks.size(); ++b) {
    z = encoder.run(z, b, b + 1, ctx);
    if (!s.defined() || b > last_tap) continue;
    s = encoder.run(s, b, b + 1, ctx);
    if (config_.encoder.is_tap(b)) {
      StyleVector own = extract_style(z), other = extract_style(s);
      if (ctx.detach_style) {
        own = {own.mu.detach(), own.sigma.detach(), own.domain_id};
        other = {other.mu.detach(), other.sigma.detach(), other.domain_id};
      }
      z = apply_style(z, own, other);
    }
  }
  return z;
}

Tensor ModelBundle::discriminate(const Tensor& probs, std::size_t domain) const {
  if (domain >= discriminators.size()) {
    throw InvalidArgument("discriminator index " + std::to_string(domain) + " out of range");
  }
  if (probs.rank() != 4 || probs.dim(1) != config_.classes) {
    throw InvalidShape("discriminate: expected [N,K,H,W] probabilities, got " + to_string(probs.shape()));
  }
  return discriminators[domain](probs);
}

std::vector<NamedParameter> ModelBundle::parameters() const {
  std::vector<NamedParameter> out;
  const std::string enc(kEncoderOwner);
  for (std::size_t b = 0; b < encoder.blocks.size(); ++b) append_conv(out, enc, "block" + std::to_string(b), encoder.blocks[b]);
  for (std::size_t i = 0; i < classifiers.size(); ++i) append_conv(out, classifier_owner(i), "conv", classifiers[i].conv);
  append_conv(out, std::string(kAgnosticOwner), "conv", agnostic.conv);
  for (std::size_t i = 0; i < discriminators.size(); ++i) {
    for (std::size_t l = 0; l < discriminators[i].convs.size(); ++l) {
      append_conv(out, discriminator_owner(i), "conv" + std::to_string(l), discriminators[i].convs[l]);
    }
  }
  return out;
}

std::vector<Tensor> ModelBundle::parameters_of(std::string_view owner) const {
  std::vector<Tensor> out;
  for (auto& p : parameters()) {
    if (p.owner == owner) out.push_back(p.tensor);
  }
  return out;
}

std::vector<Tensor> ModelBundle::segmentation_parameters() const {
  std::vector<Tensor> out;
  for (auto& p : parameters()) {
    if (p.owner.rfind("discriminator", 0) != 0) out.push_back(p.tensor);
  }
  return out;
}

std::vector<Tensor> ModelBundle::discriminator_parameters() const {
  std::vector<Tensor> out;
  for (auto& p : parameters()) {
    if (p.owner.rfind("discriminator", 0) == 0) out.push_back(p.tensor);
  }
  return out;
}

std::size_t ModelBundle::parameter_hash(std::string_view owner) const {
  std::size_t h = 0;
  for (const auto& t : parameters_of(owner)) {
    const auto v = t.values();
    const std::string_view bytes(reinterpret_cast<const char*>(v.data()), v.size_bytes());
    h = mix_seed(h, std::hash<std::string_view>{}(bytes));
  }
  return h;
}

void ModelBundle::zero_grad() const {
  for (auto& p : parameters()) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

}  // namespace coast
