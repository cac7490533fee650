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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "coast/tensor.hpp"

namespace coast {

inline constexpr std::size_t kImageChannels = 3;
inline constexpr std::size_t kPaletteSize = 8;

struct ShapeConfig {
  // Shapes guaranteed per foreground class, drawn last so they stay visible.
  std::size_t shapes_per_class = 1;
  // Additional shapes of random class, drawn first (uniform in [0, max]).
  std::size_t max_extra_shapes = 2;
};

// A label map and its domain-free appearance. The label map is shared by
// every rendering of the scene.
struct Scene {
  std::uint64_t seed = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = 0;
  std::vector<std::uint8_t> labels;  // [H,W]
  std::vector<float> canonical;      // [3,H,W], values in [0,1]
};

Scene generate_scene(std::uint64_t seed, std::size_t height, std::size_t width, std::size_t classes,
                     const ShapeConfig& shapes = {});

// Global photometric style of a domain:
//   clip(gain * canonical^gamma + bias + noise, 0, 1)
struct DomainSpec {
  int domain_id = 0;
  std::array<double, 3> gain{1.0, 1.0, 1.0};
  std::array<double, 3> bias{0.0, 0.0, 0.0};
  double gamma = 1.0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Rendered values are rounded to float32 so datasets round-trip exactly.
Tensor render_domain(const Scene& scene, const DomainSpec& spec);

struct Sample {
  std::uint64_t scene_seed = 0;
  std::vector<float> image;           // [3,H,W]
  std::vector<std::uint8_t> labels;   // [H,W], empty when unlabeled
};

struct DomainDataset {
  int domain_id = 0;
  bool is_source = false;
  DomainSpec spec;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool labeled() const;
  // Stacks the selected samples into [B,3,H,W].
  Tensor images(const std::vector<std::size_t>& indices) const;
  LabelBatch labels(const std::vector<std::size_t>& indices) const;
};

struct BenchmarkConfig {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t classes = 4;
  std::size_t num_targets = 2;
  std::size_t source_count = 400;
  std::size_t target_count = 300;
  std::size_t target_eval_count = 100;
  std::size_t unseen_count = 100;
  std::uint64_t seed = 0;
  ShapeConfig shapes;
  // Optional explicit styles: source first, then one per target, then the
  // unseen domain. Empty selects the built-in presets.
  std::vector<DomainSpec> specs;
};

struct Benchmark {
  DomainDataset source;
  std::vector<DomainDataset> targets;      // unlabeled training splits
  std::vector<DomainDataset> target_eval;  // labeled held-out splits, same styles
  DomainDataset unseen;                    // labeled, never used for training
};

// Built-in styles: index 0 is the source, 1..M the targets. The unseen
// domain (id M+1) takes the style a further target would have had, so it
// belongs to the target family without being trained on.
DomainSpec preset_domain_spec(std::size_t index, std::uint64_t seed);
DomainSpec unseen_domain_spec(int domain_id, std::uint64_t seed);

Benchmark make_benchmark(const BenchmarkConfig& config);

// Directory layout: manifest.json plus per-sample raw little-endian float32
// images (*.f32) and 8-bit label grids (*.u8).
void export_dataset(const DomainDataset& dataset, const std::filesystem::path& dir);
DomainDataset import_dataset(const std::filesystem::path& dir);

void export_benchmark(const Benchmark& bench, const std::filesystem::path& dir);
Benchmark import_benchmark(const std::filesystem::path& dir);

void write_label_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);
std::vector<std::uint8_t> read_label_file(const std::filesystem::path& path, std::size_t expected);

// Deterministic 64-bit seed derivation.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace coast
