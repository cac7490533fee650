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

#include <random>

#include "coast/crossdonorm.hpp"
#include "coast/ops.hpp"

namespace {

coast::Tensor random(const coast::Shape& shape, std::uint64_t seed, bool grad = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<coast::Scalar> v(coast::numel(shape));
  for (auto& x : v) x = static_cast<coast::Scalar>(n(rng));
  return coast::Tensor::from_values(shape, std::move(v), grad);
}

// Args: channels in/out, spatial extent.
void BM_Conv3x3Forward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0)), hw = static_cast<std::size_t>(state.range(1));
  const auto x = random({4, c, hw, hw}, 1), w = random({c, c, 3, 3}, 2), b = random({c}, 3);
  coast::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(coast::conv2d(x, w, b, {1, 1}));
  state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_Conv3x3Forward)->Args({16, 32})->Args({32, 32})->Args({32, 16});

void BM_Conv3x3ForwardBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0)), hw = static_cast<std::size_t>(state.range(1));
  auto x = random({4, c, hw, hw}, 1, true), w = random({c, c, 3, 3}, 2, true), b = random({c}, 3, true);
  for (auto _ : state) {
    coast::sum(coast::conv2d(x, w, b, {1, 1})).backward();
    x.zero_grad();
    w.zero_grad();
    b.zero_grad();
  }
  state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_Conv3x3ForwardBackward)->Args({16, 32})->Args({32, 32});

void BM_CrossStylize(benchmark::State& state) {
  const auto zi = random({4, 16, 32, 32}, 4), zj = random({4, 16, 32, 32}, 5);
  coast::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(coast::cross_stylize(zi, zj));
}
BENCHMARK(BM_CrossStylize);

void BM_Softmax(benchmark::State& state) {
  const auto logits = random({4, 4, 32, 32}, 6);
  coast::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(coast::softmax(logits));
}
BENCHMARK(BM_Softmax);

}  // namespace
int main(int argc, char** argv) {
  coast::retain_freed_memory();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
