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

#include <benchmark/benchmark.h>

#include "coast/metrics.hpp"
#include "coast/optim.hpp"
#include "coast/trainer.hpp"
#include "coast/warmup.hpp"

namespace {

struct DeskFixture {
  coast::Benchmark data;
  coast::ModelConfig model;

  DeskFixture() {
    coast::BenchmarkConfig cfg;
    cfg.source_count = 16;
    cfg.target_count = 16;
    cfg.target_eval_count = 16;
    cfg.unseen_count = 16;
    data = coast::make_benchmark(cfg);
    model.classes = cfg.classes;
    model.num_targets = cfg.num_targets;
    model.encoder.widths = {16, 16, 16};
  }

  coast::TrainBatch batch(std::size_t n) const {
    std::vector<std::size_t> idx(n);
    for (std::size_t k = 0; k < n; ++k) idx[k] = k;
    coast::TrainBatch b;
    b.source_images = data.source.images(idx);
    b.source_labels = data.source.labels(idx);
    for (const auto& t : data.target_eval) {
      b.target_images.push_back(t.images(idx));
      b.target_labels.push_back(t.labels(idx));
    }
    return b;
  }
};

const DeskFixture& fixture() {
  static const DeskFixture f;
  return f;
}

void BM_TotalObjectiveStep(benchmark::State& state) {
  const auto& f = fixture();
  coast::ModelBundle bundle(f.model);
  const auto b = f.batch(static_cast<std::size_t>(state.range(0)));
  coast::TrainConfig cfg;
  coast::SgdMomentum opt(bundle.segmentation_parameters(), 0.9, 0.0);
  coast::Rng rng(7);
  for (auto _ : state) {
    opt.zero_grad();
    const auto r = coast::total_objective(bundle, b, cfg, &rng);
    r.total.backward();
    opt.step(1e-3);
  }
}
BENCHMARK(BM_TotalObjectiveStep)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_WarmupIteration(benchmark::State& state) {
  const auto& f = fixture();
  coast::ModelBundle bundle(f.model);
  coast::WarmupConfig cfg;
  cfg.iterations = 1;
  for (auto _ : state) coast::warmup_run(bundle, f.data.source, f.data.targets, cfg);
}
BENCHMARK(BM_WarmupIteration)->Unit(benchmark::kMillisecond);

void BM_EvaluateDomain(benchmark::State& state) {
  const auto& f = fixture();
  const coast::ModelBundle bundle(f.model);
  for (auto _ : state) benchmark::DoNotOptimize(coast::evaluate(bundle, f.data.unseen));
}
BENCHMARK(BM_EvaluateDomain)->Unit(benchmark::kMillisecond);

}  // namespace
