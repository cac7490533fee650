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
#include <ostream>
#include <vector>

#include "coast/segnet.hpp"
#include "coast/synthetic.hpp"
#include "coast/tensor.hpp"

namespace coast {

struct WarmupConfig {
  double lambda_adv = 0.001;
  std::size_t iterations = 2000;
  std::size_t batch_size = 4;
  double seg_learning_rate = 0.01;
  double disc_learning_rate = 1e-4;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double poly_power = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

// BCE(D(p_src), 1) + BCE(D(p_tgt), 0), each averaged over patches.
Tensor discriminator_loss(const ModelBundle& bundle, const Tensor& p_src, const Tensor& p_tgt, std::size_t domain);

struct GeneratorLoss {
  Tensor total;
  Tensor seg;          // CE(C^{T_i}(Phi(x_src)), y_src)
  Tensor adv;          // BCE(D^{T_i}(C^{T_i}(Phi(x_tgt))), 1)
  Tensor p_src, p_tgt;  // predictions, kept for the discriminator step
};

// seg + lambda_adv * adv. The adversarial term also reaches D's parameters;
// callers step only the segmentation optimizer on it.
GeneratorLoss generator_loss(const ModelBundle& bundle, const Tensor& x_src, const LabelBatch& y_src,
                             const Tensor& x_tgt, std::size_t domain, double lambda_adv,
                             const ForwardContext& src_ctx = {}, const ForwardContext& tgt_ctx = {});

struct WarmupLogRow {
  std::size_t iteration = 0;
  int domain_id = 0;
  double seg_loss = 0.0;
  double adv_loss = 0.0;
  double disc_loss = 0.0;
  double learning_rate = 0.0;
};

// Header iteration,domain_id,seg_loss,adv_loss,disc_loss,learning_rate.
void write_warmup_csv(const std::vector<WarmupLogRow>& log, std::ostream& out);

// For every iteration and target: a generator step on the segmentation
// parameters (C^A also fits the source batch), then a discriminator step.
std::vector<WarmupLogRow> warmup_run(ModelBundle& bundle, const DomainDataset& source,
                                     const std::vector<DomainDataset>& targets, const WarmupConfig& config);

// The same schedule with the adversarial branch removed: every head and C^A
// are fit to source labels only. Targets are never read.
std::vector<WarmupLogRow> source_only_run(ModelBundle& bundle, const DomainDataset& source,
                                          const WarmupConfig& config);

// `batch` indices drawn uniformly with replacement from [0, count).
std::vector<std::size_t> draw_indices(std::size_t count, std::size_t batch, Rng& rng);

}  // namespace coast
