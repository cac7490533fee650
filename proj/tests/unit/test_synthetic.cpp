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

#include <iostream>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "coast/errors.hpp"
#include "coast/synthetic.hpp"

using namespace coast;

namespace {

std::array<double, 3> channel_means(const std::vector<float>& image, std::size_t hw) {
  std::array<double, 3> m{};
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < hw; ++i) m[c] += image[c * hw + i];
    m[c] /= static_cast<double>(hw);
  }
  return m;
}

void expect_same_dataset(const DomainDataset& a, const DomainDataset& b) {
  EXPECT_EQ(a.domain_id, b.domain_id);
  EXPECT_EQ(a.is_source, b.is_source);
  EXPECT_EQ(a.height, b.height);
  EXPECT_EQ(a.width, b.width);
  EXPECT_EQ(a.classes, b.classes);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].scene_seed, b.samples[i].scene_seed);
    EXPECT_EQ(a.samples[i].image, b.samples[i].image);
    EXPECT_EQ(a.samples[i].labels, b.samples[i].labels);
  }
}

BenchmarkConfig small_config() {
  BenchmarkConfig c;
  c.source_count = 20;
  c.target_count = 15;
  c.target_eval_count = 10;
  c.unseen_count = 10;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(GenerateScene, DeterministicInSeed) {
  const Scene a = generate_scene(42, 32, 32, 4), b = generate_scene(42, 32, 32, 4);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.canonical, b.canonical);
  EXPECT_NE(a.labels, generate_scene(43, 32, 32, 4).labels);
}

TEST(GenerateScene, RangesHold) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = generate_scene(seed, 16, 24, 5);
    ASSERT_EQ(s.labels.size(), 16u * 24u);
    ASSERT_EQ(s.canonical.size(), 3u * 16u * 24u);
    for (auto l : s.labels) EXPECT_LT(l, 5);
    for (auto v : s.canonical) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(GenerateScene, ZeroShapesGiveAllBackground) {
  const Scene s = generate_scene(7, 16, 16, 2, ShapeConfig{0, 0});
  EXPECT_TRUE(std::all_of(s.labels.begin(), s.labels.end(), [](std::uint8_t v) { return v == 0; }));
}

TEST(GenerateScene, RejectsBadArguments) {
  EXPECT_THROW(generate_scene(0, 32, 32, kPaletteSize + 1), InvalidArgument);
  EXPECT_THROW(generate_scene(0, 32, 32, 1), InvalidArgument);
  EXPECT_THROW(generate_scene(0, 7, 32, 3), InvalidArgument);
}

TEST(GenerateScene, EveryClassInNearlyEveryScene) {
  std::array<std::size_t, 3> present{};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Scene s = generate_scene(mix_seed(seed, 5), 32, 32, 3);
    for (std::size_t c = 0; c < 3; ++c) {
      present[c] += std::find(s.labels.begin(), s.labels.end(), c) != s.labels.end();
    }
  }
  for (std::size_t c = 0; c < 3; ++c) EXPECT_GE(present[c], 950u) << "class " << c;
}

TEST(GenerateScene, BackgroundShareIsBounded) {
  double share = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Scene s = generate_scene(seed, 32, 32, 4);
    share += static_cast<double>(std::count(s.labels.begin(), s.labels.end(), 0)) / static_cast<double>(s.labels.size());
  }
  EXPECT_LE(share / 300, 0.70);
}

TEST(RenderDomain, IdentitySpecReproducesCanonical) {
  const Scene s = generate_scene(1, 32, 32, 4);
  const Tensor img = render_domain(s, DomainSpec{});
  for (std::size_t i = 0; i < img.numel(); ++i) EXPECT_EQ(img.values()[i], static_cast<Scalar>(s.canonical[i]));
}

TEST(RenderDomain, BiasShiftMovesUnclippedMeans) {
  const Scene s = generate_scene(2, 32, 32, 4);
  DomainSpec shifted;
  shifted.bias = {0.3, 0.3, 0.3};
  const Tensor a = render_domain(s, DomainSpec{}), b = render_domain(s, shifted);
  const std::size_t hw = 32 * 32;
  for (std::size_t c = 0; c < 3; ++c) {
    double ma = 0, mb = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < hw; ++i) {
      const double v = a.values()[c * hw + i];
      if (v + 0.3 >= 1.0) continue;
      ma += v;
      mb += b.values()[c * hw + i];
      ++n;
    }
    ASSERT_GT(n, 0u);
    EXPECT_NEAR((mb - ma) / static_cast<double>(n), 0.3, 1e-6);
  }
}

TEST(RenderDomain, RejectsInvalidSpec) {
  const Scene s = generate_scene(2, 16, 16, 3);
  DomainSpec bad;
  bad.gain = {1, 0, 1};
  EXPECT_THROW(render_domain(s, bad), InvalidArgument);
  bad = {};
  bad.gamma = 0;
  EXPECT_THROW(render_domain(s, bad), InvalidArgument);
  bad = {};
  bad.noise_std = -0.1;
  EXPECT_THROW(render_domain(s, bad), InvalidArgument);
}

TEST(MakeBenchmark, CardinalityAndLabels) {
  const Benchmark b = make_benchmark(small_config());
  ASSERT_EQ(b.targets.size(), 2u);
  ASSERT_EQ(b.target_eval.size(), 2u);
  std::set<int> training_ids{b.source.domain_id, b.targets[0].domain_id, b.targets[1].domain_id};
  EXPECT_EQ(training_ids.size(), 3u);
  EXPECT_EQ(training_ids.count(b.unseen.domain_id), 0u);
  EXPECT_TRUE(b.source.labeled());
  EXPECT_TRUE(b.source.is_source);
  for (const auto& t : b.targets) {
    EXPECT_FALSE(t.is_source);
    for (const auto& s : t.samples) EXPECT_TRUE(s.labels.empty());
  }
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_TRUE(b.target_eval[i].labeled());
    EXPECT_EQ(b.target_eval[i].domain_id, b.targets[i].domain_id);
  }
  EXPECT_EQ(b.source.size(), 20u);
  EXPECT_EQ(b.targets[0].size(), 15u);
  EXPECT_EQ(b.unseen.size(), 10u);
  EXPECT_THROW(b.targets[0].labels({0}), InvalidArgument);
}

TEST(MakeBenchmark, DeterministicInConfig) {
  const Benchmark a = make_benchmark(small_config()), b = make_benchmark(small_config());
  expect_same_dataset(a.source, b.source);
  expect_same_dataset(a.targets[1], b.targets[1]);
  expect_same_dataset(a.unseen, b.unseen);
  auto other = small_config();
  other.seed = 4;
  EXPECT_NE(make_benchmark(other).source.samples[0].image, a.source.samples[0].image);
}

TEST(MakeBenchmark, SceneSeedsDisjointAcrossDomains) {
  const Benchmark b = make_benchmark(small_config());
  std::set<std::uint64_t> seen;
  std::size_t total = 0;
  auto add = [&](const DomainDataset& d) {
    for (const auto& s : d.samples) seen.insert(s.scene_seed);
    total += d.size();
  };
  add(b.source);
  for (const auto& t : b.targets) add(t);
  for (const auto& t : b.target_eval) add(t);
  add(b.unseen);
  EXPECT_EQ(seen.size(), total);
}

TEST(MakeBenchmark, SemanticsSurviveStyling) {
  const Scene s = generate_scene(11, 32, 32, 4);
  const Benchmark b = make_benchmark(small_config());
  const Tensor a = render_domain(s, b.source.spec), c = render_domain(s, b.targets[0].spec);
  EXPECT_NE(std::vector<Scalar>(a.values().begin(), a.values().end()),
            std::vector<Scalar>(c.values().begin(), c.values().end()));
  const Scene again = generate_scene(11, 32, 32, 4);
  EXPECT_EQ(again.labels, s.labels);
}

TEST(MakeBenchmark, RejectsDuplicateDomainIds) {
  auto c = small_config();
  c.specs = {preset_domain_spec(0, 0), preset_domain_spec(1, 0), preset_domain_spec(1, 0), preset_domain_spec(3, 0)};
  EXPECT_THROW(make_benchmark(c), InvalidArgument);
  c.specs.pop_back();
  EXPECT_THROW(make_benchmark(c), InvalidArgument);
  c = small_config();
  c.num_targets = 0;
  EXPECT_THROW(make_benchmark(c), InvalidArgument);
}

TEST(MakeBenchmark, DomainChannelMeansAreDistinct) {
  auto c = small_config();
  c.source_count = c.target_count = c.unseen_count = 200;
  c.target_eval_count = 1;
  const Benchmark b = make_benchmark(c);
  const std::vector<const DomainDataset*> domains{&b.source, &b.targets[0], &b.targets[1], &b.unseen};
  const std::size_t hw = c.height * c.width;
  std::vector<std::array<double, 3>> mean(4), se(4);
  for (std::size_t d = 0; d < 4; ++d) {
    std::array<double, 3> s{}, s2{};
    for (const auto& smp : domains[d]->samples) {
      const auto m = channel_means(smp.image, hw);
      for (std::size_t k = 0; k < 3; ++k) {
        s[k] += m[k];
        s2[k] += m[k] * m[k];
      }
    }
    const double n = static_cast<double>(domains[d]->size());
    for (std::size_t k = 0; k < 3; ++k) {
      mean[d][k] = s[k] / n;
      se[d][k] = std::sqrt(std::max(0.0, s2[k] / n - mean[d][k] * mean[d][k]) / (n - 1));
    }
  }
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t d = a + 1; d < 4; ++d) {
      bool distinct = false;
      for (std::size_t k = 0; k < 3; ++k) {
        const double pooled = std::hypot(se[a][k], se[d][k]);
        distinct |= std::abs(mean[a][k] - mean[d][k]) > 3 * pooled;
      }
      EXPECT_TRUE(distinct) << "domains " << a << " and " << d;
    }
  }
}

TEST(MakeBenchmark, NearestNeighbourIdentifiesDomains) {
  auto c = small_config();
  c.source_count = c.target_count = c.unseen_count = 120;
  c.target_eval_count = 1;
  const Benchmark b = make_benchmark(c);
  const std::vector<const DomainDataset*> domains{&b.source, &b.targets[0], &b.targets[1], &b.unseen};
  const std::size_t hw = c.height * c.width;
  std::vector<std::pair<std::array<double, 3>, std::size_t>> train, test;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    for (std::size_t i = 0; i < domains[d]->size(); ++i) {
      (i % 2 == 0 ? train : test).emplace_back(channel_means(domains[d]->samples[i].image, hw), d);
    }
  }
  std::size_t correct = 0;
  for (const auto& [x, label] : test) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t pred = 0;
    for (const auto& [y, l] : train) {
      const double dist = std::pow(x[0] - y[0], 2) + std::pow(x[1] - y[1], 2) + std::pow(x[2] - y[2], 2);
      if (dist < best) {
        best = dist;
        pred = l;
      }
    }
    correct += pred == label;
  }
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(test.size()), 0.90);
}

TEST(DatasetIo, BitExactRoundTrip) {
  const Benchmark b = make_benchmark(small_config());
  const auto dir = std::filesystem::temp_directory_path() / "coast_synthetic_roundtrip";
  std::filesystem::remove_all(dir);
  export_benchmark(b, dir);
  const Benchmark r = import_benchmark(dir);
  expect_same_dataset(b.source, r.source);
  ASSERT_EQ(r.targets.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    expect_same_dataset(b.targets[i], r.targets[i]);
    expect_same_dataset(b.target_eval[i], r.target_eval[i]);
  }
  expect_same_dataset(b.unseen, r.unseen);
  EXPECT_EQ(r.source.spec.gain, b.source.spec.gain);
  EXPECT_EQ(r.targets[1].spec.gamma, b.targets[1].spec.gamma);
  std::filesystem::remove_all(dir);
}

TEST(DatasetIo, RejectsMissingOrTruncatedFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "coast_synthetic_bad";
  std::filesystem::remove_all(dir);
  EXPECT_THROW(import_dataset(dir), FormatError);
  std::filesystem::create_directories(dir);
  write_label_file(dir / "x.u8", {1, 2, 3});
  EXPECT_THROW(read_label_file(dir / "x.u8", 4), FormatError);
  EXPECT_EQ(read_label_file(dir / "x.u8", 3), (std::vector<std::uint8_t>{1, 2, 3}));
  std::filesystem::remove_all(dir);
}
