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

#include "coast/synthetic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "coast/errors.hpp"
#include "json.hpp"

namespace coast {
namespace {

using json = nlohmann::json;

constexpr std::array<std::array<float, 3>, kPaletteSize> kPalette{{
    {0.45f, 0.50f, 0.42f},  // background
    {0.85f, 0.30f, 0.25f},
    {0.25f, 0.70f, 0.35f},
    {0.30f, 0.35f, 0.85f},
    {0.85f, 0.80f, 0.25f},
    {0.70f, 0.30f, 0.80f},
    {0.25f, 0.75f, 0.80f},
    {0.15f, 0.15f, 0.15f},
}};

constexpr float kTextureAmplitude = 0.05f;
constexpr float kPixelJitter = 0.03f;

void paint_rectangle(Scene& s, std::mt19937_64& rng, std::uint8_t cls) {
  const double side_lo = 0.22 * static_cast<double>(s.height), side_hi = 0.48 * static_cast<double>(s.height);
  std::uniform_real_distribution<double> side(side_lo, side_hi);
  const auto rh = static_cast<std::size_t>(side(rng)), rw = static_cast<std::size_t>(side(rng));
  std::uniform_int_distribution<std::size_t> y0(0, s.height - std::min(rh, s.height));
  std::uniform_int_distribution<std::size_t> x0(0, s.width - std::min(rw, s.width));
  const std::size_t top = y0(rng), left = x0(rng);
  for (std::size_t y = top; y < std::min(top + rh, s.height); ++y) {
    for (std::size_t x = left; x < std::min(left + rw, s.width); ++x) s.labels[y * s.width + x] = cls;
  }
}

void paint_disk(Scene& s, std::mt19937_64& rng, std::uint8_t cls) {
  std::uniform_real_distribution<double> radius(0.12 * static_cast<double>(s.height), 0.24 * static_cast<double>(s.height));
  std::uniform_real_distribution<double> cy(0.0, static_cast<double>(s.height));
  std::uniform_real_distribution<double> cx(0.0, static_cast<double>(s.width));
  const double r = radius(rng), yc = cy(rng), xc = cx(rng);
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      const double dy = static_cast<double>(y) + 0.5 - yc, dx = static_cast<double>(x) + 0.5 - xc;
      if (dy * dy + dx * dx <= r * r) s.labels[y * s.width + x] = cls;
    }
  }
}

void put_f32(std::ostream& os, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  os.write(bytes, 4);
}

float get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json spec_to_json(const DomainSpec& s) {
  return {{"domain_id", s.domain_id}, {"gain", s.gain},          {"bias", s.bias},
          {"gamma", s.gamma},         {"noise_std", s.noise_std}, {"seed", s.seed}};
}

DomainSpec spec_from_json(const json& j) {
  DomainSpec s;
  s.domain_id = j.at("domain_id").get<int>();
  s.gain = j.at("gain").get<std::array<double, 3>>();
  s.bias = j.at("bias").get<std::array<double, 3>>();
  s.gamma = j.at("gamma").get<double>();
  s.noise_std = j.at("noise_std").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.validate();
  return s;
}

DomainDataset render_dataset(const BenchmarkConfig& cfg, const DomainSpec& spec, bool is_source, bool keep_labels,
                             std::size_t count, std::uint64_t split_tag) {
  DomainDataset ds;
  ds.domain_id = spec.domain_id;
  ds.is_source = is_source;
  ds.spec = spec;
  ds.height = cfg.height;
  ds.width = cfg.width;
  ds.classes = cfg.classes;
  ds.samples.reserve(count);
  const std::uint64_t domain_seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(spec.domain_id) + 1), split_tag);
  for (std::size_t n = 0; n < count; ++n) {
    const std::uint64_t scene_seed = mix_seed(domain_seed, n);
    const Scene scene = generate_scene(scene_seed, cfg.height, cfg.width, cfg.classes, cfg.shapes);
    const Tensor img = render_domain(scene, spec);
    Sample s;
    s.scene_seed = scene_seed;
    s.image.assign(img.values().begin(), img.values().end());
    if (keep_labels) s.labels = scene.labels;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Scene generate_scene(std::uint64_t seed, std::size_t height, std::size_t width, std::size_t classes,
                     const ShapeConfig& shapes) {
  if (classes < 2) throw InvalidArgument("generate_scene: need at least 2 classes");
  if (classes > kPaletteSize) {
    throw InvalidArgument("generate_scene: " + std::to_string(classes) + " classes exceed the palette of " +
                          std::to_string(kPaletteSize));
  }
  if (height < 8 || width < 8) throw InvalidArgument("generate_scene: extents must be at least 8");

  Scene s{seed, height, width, classes, std::vector<std::uint8_t>(height * width, 0), {}};
  std::mt19937_64 rng(seed);
  auto paint = [&](std::uint8_t cls) {
    std::bernoulli_distribution disk(0.5);
    if (disk(rng)) {
      paint_disk(s, rng, cls);
    } else {
      paint_rectangle(s, rng, cls);
    }
  };

  std::uniform_int_distribution<std::size_t> extra_count(0, shapes.max_extra_shapes);
  std::uniform_int_distribution<int> any_class(1, static_cast<int>(classes) - 1);
  const std::size_t extras = extra_count(rng);
  for (std::size_t i = 0; i < extras; ++i) paint(static_cast<std::uint8_t>(any_class(rng)));

  std::vector<std::uint8_t> order;
  for (std::size_t r = 0; r < shapes.shapes_per_class; ++r) {
    for (std::size_t c = 1; c < classes; ++c) order.push_back(static_cast<std::uint8_t>(c));
  }
  std::shuffle(order.begin(), order.end(), rng);
  for (auto c : order) paint(c);

  // Class-specific oriented stripes over a base color, scene-level brightness.
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> brightness(0.9, 1.1);
  std::uniform_real_distribution<float> jitter(-kPixelJitter, kPixelJitter);
  const double scene_phase = phase(rng), scene_gain = brightness(rng);
  s.canonical.assign(kImageChannels * height * width, 0.0f);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t cls = s.labels[y * width + x];
      const double angle = static_cast<double>(cls) * std::numbers::pi / static_cast<double>(kPaletteSize);
      const double freq = 0.6 + 0.25 * static_cast<double>(cls);
      const double t = std::sin(freq * (static_cast<double>(x) * std::cos(angle) + static_cast<double>(y) * std::sin(angle)) +
                                scene_phase);
      for (std::size_t ch = 0; ch < kImageChannels; ++ch) {
        const double v = scene_gain * kPalette[cls][ch] + kTextureAmplitude * t + jitter(rng);
        s.canonical[(ch * height + y) * width + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return s;
}

void DomainSpec::validate() const {
  for (double g : gain) {
    if (!(g > 0)) throw InvalidArgument("domain spec: gains must be positive");
  }
  if (!(gamma > 0)) throw InvalidArgument("domain spec: gamma must be positive");
  if (!(noise_std >= 0)) throw InvalidArgument("domain spec: noise_std must be nonnegative");
}

Tensor render_domain(const Scene& scene, const DomainSpec& spec) {
  spec.validate();
  const std::size_t hw = scene.height * scene.width;
  std::vector<Scalar> out(kImageChannels * hw);
  std::mt19937_64 rng(mix_seed(spec.seed, scene.seed));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t ch = 0; ch < kImageChannels; ++ch) {
    for (std::size_t i = 0; i < hw; ++i) {
      const double c = scene.canonical[ch * hw + i];
      double v = spec.gain[ch] * std::pow(c, spec.gamma) + spec.bias[ch];
      if (spec.noise_std > 0) v += spec.noise_std * noise(rng);
      out[ch * hw + i] = static_cast<Scalar>(static_cast<float>(std::clamp(v, 0.0, 1.0)));
    }
  }
  return Tensor::from_values({kImageChannels, scene.height, scene.width}, std::move(out));
}

bool DomainDataset::labeled() const {
  return !samples.empty() &&
         std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return !s.labels.empty(); });
}

Tensor DomainDataset::images(const std::vector<std::size_t>& indices) const {
  const std::size_t per = kImageChannels * height * width;
  std::vector<Scalar> v;
  v.reserve(indices.size() * per);
  for (auto i : indices) {
    const auto& img = samples.at(i).image;
    v.insert(v.end(), img.begin(), img.end());
  }
  return Tensor::from_values({indices.size(), kImageChannels, height, width}, std::move(v));
}

LabelBatch DomainDataset::labels(const std::vector<std::size_t>& indices) const {
  LabelBatch out{indices.size(), height, width, {}};
  out.values.reserve(out.pixels());
  for (auto i : indices) {
    const auto& lbl = samples.at(i).labels;
    if (lbl.empty()) throw InvalidArgument("dataset for domain " + std::to_string(domain_id) + " is unlabeled");
    out.values.insert(out.values.end(), lbl.begin(), lbl.end());
  }
  return out;
}

DomainSpec preset_domain_spec(std::size_t index, std::uint64_t seed) {
  DomainSpec s;
  s.domain_id = static_cast<int>(index);
  s.seed = mix_seed(seed, 1000 + index);
  switch (index) {
    case 0:
      s.noise_std = 0.02;
      break;
    case 1:
      s.gain = {0.65, 0.8, 1.25};
      s.bias = {0.2, 0.05, -0.12};
      s.gamma = 1.5;
      s.noise_std = 0.04;
      break;
    case 2:
      s.gain = {1.2, 1.1, 0.7};
      s.bias = {-0.12, 0.12, 0.18};
      s.gamma = 0.65;
      s.noise_std = 0.03;
      break;
    case 3:
      s.gain = {0.85, 1.3, 0.9};
      s.bias = {0.05, -0.18, 0.1};
      s.gamma = 1.25;
      s.noise_std = 0.05;
      break;
    default: {
      std::mt19937_64 rng(s.seed);
      std::uniform_real_distribution<double> gain(0.65, 1.3), bias(-0.15, 0.15), gamma(0.7, 1.5);
      for (auto& g : s.gain) g = gain(rng);
      for (auto& b : s.bias) b = bias(rng);
      s.gamma = gamma(rng);
      s.noise_std = 0.04;
    }
  }
  return s;
}

DomainSpec unseen_domain_spec(int domain_id, std::uint64_t seed) {
  if (domain_id < 1) throw InvalidArgument("unseen domain id must be >= 1");
  DomainSpec s = preset_domain_spec(static_cast<std::size_t>(domain_id), seed);
  s.seed = mix_seed(seed, 999);
  return s;
}

Benchmark make_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.num_targets < 1) throw InvalidArgument("make_benchmark: need at least one target domain");
  std::vector<DomainSpec> specs = cfg.specs;
  if (specs.empty()) {
    for (std::size_t i = 0; i <= cfg.num_targets; ++i) specs.push_back(preset_domain_spec(i, cfg.seed));
    specs.push_back(unseen_domain_spec(static_cast<int>(cfg.num_targets) + 1, cfg.seed));
  }
  if (specs.size() != cfg.num_targets + 2) {
    throw InvalidArgument("make_benchmark: expected source, " + std::to_string(cfg.num_targets) +
                          " target and one unseen spec");
  }
  std::set<int> ids;
  for (const auto& s : specs) {
    s.validate();
    if (!ids.insert(s.domain_id).second) throw InvalidArgument("make_benchmark: duplicate domain_id " + std::to_string(s.domain_id));
  }

  Benchmark b;
  b.source = render_dataset(cfg, specs.front(), true, true, cfg.source_count, 0);
  for (std::size_t i = 1; i <= cfg.num_targets; ++i) {
    b.targets.push_back(render_dataset(cfg, specs[i], false, false, cfg.target_count, 0));
    b.target_eval.push_back(render_dataset(cfg, specs[i], false, true, cfg.target_eval_count, 1));
  }
  b.unseen = render_dataset(cfg, specs.back(), false, true, cfg.unseen_count, 2);
  return b;
}

void write_label_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

std::vector<std::uint8_t> read_label_file(const std::filesystem::path& path, std::size_t expected) {
  auto bytes = read_all(path);
  if (bytes.size() != expected) throw FormatError(path.string() + ": unexpected label file size");
  return {bytes.begin(), bytes.end()};
}

void export_dataset(const DomainDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest{{"format", "coast-dataset"}, {"version", 1},        {"domain_id", ds.domain_id},
                {"is_source", ds.is_source}, {"height", ds.height}, {"width", ds.width},
                {"channels", kImageChannels}, {"classes", ds.classes}, {"spec", spec_to_json(ds.spec)}};
  json samples = json::array();
  char name[32];
  for (std::size_t n = 0; n < ds.samples.size(); ++n) {
    const auto& s = ds.samples[n];
    std::snprintf(name, sizeof name, "img_%05zu.f32", n);
    {
      std::ofstream out(dir / name, std::ios::binary);
      if (!out) throw FormatError("cannot write " + (dir / name).string());
      for (float v : s.image) put_f32(out, v);
    }
    json entry{{"scene_seed", s.scene_seed}, {"image", name}, {"labels", nullptr}};
    if (!s.labels.empty()) {
      std::snprintf(name, sizeof name, "lbl_%05zu.u8", n);
      write_label_file(dir / name, s.labels);
      entry["labels"] = name;
    }
    samples.push_back(std::move(entry));
  }
  manifest["samples"] = std::move(samples);
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

DomainDataset import_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw FormatError("missing manifest in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "coast-dataset" || manifest.value("version", 0) != 1) {
    throw FormatError("unsupported dataset manifest in " + dir.string());
  }
  DomainDataset ds;
  ds.domain_id = manifest.at("domain_id").get<int>();
  ds.is_source = manifest.at("is_source").get<bool>();
  ds.height = manifest.at("height").get<std::size_t>();
  ds.width = manifest.at("width").get<std::size_t>();
  ds.classes = manifest.at("classes").get<std::size_t>();
  ds.spec = spec_from_json(manifest.at("spec"));
  const std::size_t hw = ds.height * ds.width;
  for (const auto& entry : manifest.at("samples")) {
    Sample s;
    s.scene_seed = entry.at("scene_seed").get<std::uint64_t>();
    const auto bytes = read_all(dir / entry.at("image").get<std::string>());
    if (bytes.size() != 4 * kImageChannels * hw) throw FormatError("unexpected image file size");
    s.image.resize(kImageChannels * hw);
    for (std::size_t i = 0; i < s.image.size(); ++i) s.image[i] = get_f32(bytes.data() + 4 * i);
    if (!entry.at("labels").is_null()) s.labels = read_label_file(dir / entry.at("labels").get<std::string>(), hw);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void export_benchmark(const Benchmark& b, const std::filesystem::path& dir) {
  export_dataset(b.source, dir / "source");
  json layout{{"format", "coast-benchmark"}, {"version", 1}, {"targets", json::array()}};
  for (std::size_t i = 0; i < b.targets.size(); ++i) {
    const std::string train = "target_" + std::to_string(i + 1);
    const std::string eval = "target_eval_" + std::to_string(i + 1);
    export_dataset(b.targets[i], dir / train);
    export_dataset(b.target_eval[i], dir / eval);
    layout["targets"].push_back({{"train", train}, {"eval", eval}});
  }
  export_dataset(b.unseen, dir / "unseen");
  layout["source"] = "source";
  layout["unseen"] = "unseen";
  std::ofstream(dir / "benchmark.json") << layout.dump(2) << '\n';
}

Benchmark import_benchmark(const std::filesystem::path& dir) {
  std::ifstream in(dir / "benchmark.json");
  if (!in) throw FormatError("missing benchmark.json in " + dir.string());
  const json layout = json::parse(in, nullptr, false);
  if (layout.is_discarded() || layout.value("format", "") != "coast-benchmark") {
    throw FormatError("unsupported benchmark layout in " + dir.string());
  }
  Benchmark b;
  b.source = import_dataset(dir / layout.at("source").get<std::string>());
  for (const auto& t : layout.at("targets")) {
    b.targets.push_back(import_dataset(dir / t.at("train").get<std::string>()));
    b.target_eval.push_back(import_dataset(dir / t.at("eval").get<std::string>()));
  }
  b.unseen = import_dataset(dir / layout.at("unseen").get<std::string>());
  return b;
}

}  // namespace coast
