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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "coast/ops.hpp"
#include "coast/tensor.hpp"

namespace coast {

struct Conv2d {
  Tensor weight;  // [Cout,Cin,k,k]
  Tensor bias;    // [Cout]
  Conv2dOptions options;

  Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias, options); }
};

struct EncoderConfig {
  std::vector<std::size_t> widths{16, 32, 32};
  std::vector<std::size_t> strides{1, 1, 1};
  double dropout = 0.1;
  std::size_t dropout_after = 1;      // block index followed by dropout
  std::vector<std::size_t> taps{0};   // blocks whose output may be stylized

  void validate() const;
  std::size_t output_stride() const;
  bool is_tap(std::size_t block) const;
};

struct ModelConfig {
  std::size_t in_channels = 3;
  std::size_t classes = 4;
  std::size_t num_targets = 2;
  EncoderConfig encoder;
  std::vector<std::size_t> discriminator_widths{16, 32};
  double leaky_slope = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

// Train mode enables dropout and needs an rng. detach_style turns style
// vectors into constants at the stylization taps.
struct ForwardContext {
  bool train = false;
  Rng* rng = nullptr;
  bool detach_style = false;
};

class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, std::size_t in_channels, std::uint64_t seed);

  // Runs blocks [first, last): 3x3 conv, ReLU, optional dropout.
  Tensor run(const Tensor& x, std::size_t first, std::size_t last, const ForwardContext& ctx) const;
  Tensor operator()(const Tensor& x, const ForwardContext& ctx) const { return run(x, 0, blocks.size(), ctx); }

  EncoderConfig config;
  std::vector<Conv2d> blocks;
};

// 1x1 conv to K logits, nearest upsampling back to input resolution.
struct Classifier {
  Conv2d conv;
  std::size_t upsample = 1;

  Tensor logits(const Tensor& features) const;
  Tensor probs(const Tensor& features) const;
};

// Strided 3x3 conv stack over a K-channel probability map, one logit per patch.
struct Discriminator {
  std::vector<Conv2d> convs;
  Scalar leaky_slope = 0.2;

  Tensor operator()(const Tensor& probs) const;
};

struct Head {
  enum class Kind { Domain, Agnostic };
  Kind kind = Kind::Agnostic;
  std::size_t index = 0;

  static Head domain(std::size_t i) { return {Kind::Domain, i}; }
  static Head agnostic() { return {Kind::Agnostic, 0}; }
  std::string name() const;
};

struct NamedParameter {
  std::string owner;
  std::string name;
  Tensor tensor;
};

inline constexpr std::string_view kEncoderOwner = "encoder";
inline constexpr std::string_view kAgnosticOwner = "classifier_agnostic";
std::string classifier_owner(std::size_t domain);
std::string discriminator_owner(std::size_t domain);

// Shared encoder, one classifier and one discriminator per target domain,
// and the domain-agnostic classifier used at inference.
class ModelBundle {
 public:
  explicit ModelBundle(ModelConfig config);

  ModelBundle(ModelBundle&&) = default;
  ModelBundle& operator=(ModelBundle&&) = default;
  ModelBundle(const ModelBundle&) = delete;
  ModelBundle& operator=(const ModelBundle&) = delete;

  // Deep copy with independent parameter buffers.
  ModelBundle clone() const;

  const ModelConfig& config() const { return config_; }
  std::size_t num_targets() const { return classifiers.size(); }

  // Per-pixel class probabilities [N,K,H,W]. With a style source, features
  // at every tap are re-normalized to the style source's statistics.
  Tensor forward(const Tensor& x, Head head, const Tensor& style_source = {}, const ForwardContext& ctx = {}) const;

  // Encoder output, stylized like `forward`.
  Tensor features(const Tensor& x, const Tensor& style_source = {}, const ForwardContext& ctx = {}) const;

  const Classifier& classifier(Head head) const;
  Tensor discriminate(const Tensor& probs, std::size_t domain) const;

  std::vector<NamedParameter> parameters() const;
  std::vector<Tensor> parameters_of(std::string_view owner) const;
  std::vector<Tensor> segmentation_parameters() const;
  std::vector<Tensor> discriminator_parameters() const;
  std::size_t parameter_hash(std::string_view owner) const;
  void zero_grad() const;

  Encoder encoder;
  std::vector<Classifier> classifiers;
  Classifier agnostic;
  std::vector<Discriminator> discriminators;

 private:
  ModelConfig config_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// "COAST", u32 version, u64 entry count, then per entry: u32-prefixed owner,
// u32-prefixed name, u32 rank, u64 extents, little-endian float64 values.
void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path);
void load_checkpoint(ModelBundle& bundle, const std::filesystem::path& path);

}  // namespace coast
