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

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "coast/config.hpp"
#include "coast/errors.hpp"
#include "coast/gradient_suite.hpp"
#include "coast/metrics.hpp"
#include "coast/segnet.hpp"
#include "coast/self_train.hpp"
#include "coast/synthetic.hpp"
#include "coast/trainer.hpp"
#include "coast/warmup.hpp"

namespace fs = std::filesystem;
using namespace coast;

namespace {

RunConfig config_from(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

Benchmark data_from(const RunConfig& cfg, const std::string& dir) {
  return dir.empty() ? make_benchmark(cfg.data) : import_benchmark(dir);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

ModelBundle load_bundle(const RunConfig& cfg, const std::string& checkpoint) {
  ModelBundle bundle(cfg.model_for_data());
  if (!checkpoint.empty()) load_checkpoint(bundle, checkpoint);
  return bundle;
}

}  // namespace

int main(int argc, char** argv) {
  coast::retain_freed_memory();
  CLI::App app{"coast: multi-target domain-adaptive segmentation on synthetic domains"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);

  std::string data_dir, out, checkpoint, log_path, metrics_path, bank_dir, baselines_path, uncertainty_dir;
  bool source_only = false, domain_heads = false, print_config = false;
  std::optional<std::uint64_t> seed;
  double step = 1e-5, tolerance = 1e-4;

  auto* gen = app.add_subcommand("gen-data", "Render the source, target and unseen domains to disk");
  gen->add_option("-o,--out", out, "Output directory")->required();
  gen->add_option("--seed", seed, "Override data.seed");

  auto* warm = app.add_subcommand("warmup", "Stage 1: adversarial warm-up from a fresh model");
  warm->add_option("-d,--data", data_dir, "Benchmark directory (generated from the config when omitted)");
  warm->add_option("-o,--out", out, "Checkpoint to write")->required();
  warm->add_option("--log", log_path, "Per-iteration warm-up CSV");
  warm->add_flag("--source-only", source_only, "Supervised source training without the adversarial branch");

  auto* self = app.add_subcommand("selftrain", "Stage 2: multi-head self-training from a warm-up checkpoint");
  self->add_option("-d,--data", data_dir, "Benchmark directory");
  self->add_option("-i,--init", checkpoint, "Warm-up checkpoint")->required()->check(CLI::ExistingFile);
  self->add_option("-o,--out", out, "Checkpoint to write")->required();
  self->add_option("-m,--metrics", metrics_path, "Per-iteration loss CSV");
  self->add_option("--export-bank", bank_dir, "Directory for the final pseudo-label bank");

  auto* abl = app.add_subcommand("ablate", "Warm-up once per seed, then train every ablation variant");
  abl->add_option("-o,--out", out, "Variant CSV")->required();
  abl->add_option("--baselines", baselines_path, "Source-only and warm-up CSV");

  auto* ev = app.add_subcommand("eval", "Per-class IoU report for the target and unseen domains");
  ev->add_option("-d,--data", data_dir, "Benchmark directory");
  ev->add_option("-k,--checkpoint", checkpoint, "Checkpoint to evaluate")->required()->check(CLI::ExistingFile);
  ev->add_option("-o,--out", out, "Report CSV (stdout when omitted)");
  ev->add_flag("--domain-heads", domain_heads, "Score each target with its own head instead of C^A");
  ev->add_option("--uncertainty", uncertainty_dir, "Write 1-w maps for the first image of each target as PGM");

  auto* gc = app.add_subcommand("grad-check", "Finite-difference check of every differentiable op");
  gc->add_option("--seed", seed, "Random seed");
  gc->add_option("--step", step, "Central-difference step");
  gc->add_option("--tolerance", tolerance, "Maximum relative error");

  auto* show = app.add_subcommand("show-config", "Print the effective configuration as JSON");
  show->callback([&] { print_config = true; });

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = config_from(config_path);
    if (print_config) {
      std::cout << dump_run_config(cfg) << '\n';
    } else if (*gen) {
      if (seed) cfg.data.seed = *seed;
      export_benchmark(make_benchmark(cfg.data), out);
      std::cout << "wrote benchmark to " << out << '\n';
    } else if (*warm) {
      const Benchmark bench = data_from(cfg, data_dir);
      ModelBundle bundle(cfg.model_for_data());
      const auto log = source_only ? source_only_run(bundle, bench.source, cfg.warmup)
                                   : warmup_run(bundle, bench.source, bench.targets, cfg.warmup);
      if (!log_path.empty()) {
        auto f = open_out(log_path);
        write_warmup_csv(log, f);
      }
      if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
      save_checkpoint(bundle, out);
      std::cout << "wrote " << out << '\n';
    } else if (*self) {
      const Benchmark bench = data_from(cfg, data_dir);
      ModelBundle bundle = load_bundle(cfg, checkpoint);
      PseudoLabelBank bank;
      std::ofstream metrics;
      SelfTrainOutputs outputs;
      if (!metrics_path.empty()) {
        metrics = open_out(metrics_path);
        outputs.metrics_csv = &metrics;
      }
      selftrain_run(bundle, bench.source, bench.targets, bank, cfg.train, outputs);
      if (!bank_dir.empty()) export_bank(bank, bench.targets, bank_dir);
      if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
      save_checkpoint(bundle, out);
      std::cout << "wrote " << out << '\n';
    } else if (*abl) {
      const auto result = run_ablation_suite(cfg.ablation(), &std::cerr);
      auto f = open_out(out);
      write_ablation_csv(result.variants, f);
      if (!baselines_path.empty()) {
        auto b = open_out(baselines_path);
        write_ablation_csv(result.baselines, b);
      }
      for (const auto& name : {"source_only", "warmup"}) {
        std::printf("%-12s median avg_mIoU %.4f\n", name, median_score(result.baselines, name));
      }
      for (const auto& v : cfg.ablation().variants) {
        std::printf("%-12s median avg_mIoU %.4f\n", v.name.c_str(), median_score(result.variants, v.name));
      }
    } else if (*ev) {
      const Benchmark bench = data_from(cfg, data_dir);
      const ModelBundle bundle = load_bundle(cfg, checkpoint);
      MetricsReport report = evaluate_targets(bundle, bench.target_eval, domain_heads);
      if (bench.unseen.labeled() && bench.unseen.size() > 0) {
        MetricsReport unseen;
        unseen.domains.push_back(evaluate(bundle, bench.unseen));
        std::cerr << "unseen domain mIoU (not in avg): " << unseen.domains.front().iou.mean << '\n';
      }
      if (out.empty()) {
        write_report_csv(report, std::cout);
      } else {
        auto f = open_out(out);
        write_report_csv(report, f);
      }
      if (!uncertainty_dir.empty()) {
        std::vector<Tensor> styles;
        for (const auto& t : bench.targets) styles.push_back(t.images({0}));
        for (std::size_t i = 0; i < bench.targets.size(); ++i) {
          const fs::path path = fs::path(uncertainty_dir) / ("uncertainty_target_" + std::to_string(i + 1) + ".pgm");
          std::vector<Tensor> sources = styles;
          export_uncertainty_map(bundle, bench.targets[i].images({0}), i, sources, cfg.train.gamma, path);
          std::cout << "wrote " << path.string() << '\n';
        }
      }
    } else if (*gc) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto cases = run_gradient_suite(seed.value_or(0), step);
      bool ok = true;
      for (const auto& c : cases) {
        const bool pass = c.result.max_relative_error <= tolerance;
        ok = ok && pass;
        std::printf("%-4s %-52s %-12s max_rel_err %.3e  kinks %zu/%zu\n", pass ? "ok" : "FAIL", c.name.c_str(),
                    c.shape.c_str(), c.result.max_relative_error, c.result.skipped_kinks,
                    c.result.checked + c.result.skipped_kinks);
      }
      std::printf("%zu cases in %.2fs\n", cases.size(),
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
