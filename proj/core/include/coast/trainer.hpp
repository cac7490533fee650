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
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coast/metrics.hpp"
#include "coast/segnet.hpp"
#include "coast/self_train.hpp"
#include "coast/synthetic.hpp"
#include "coast/tensor.hpp"
#include "coast/warmup.hpp"

namespace coast {

struct AugmentConfig {
  bool flip = false;
  bool crop = false;
  std::size_t crop_size = 24;
  bool photometric = false;
  double brightness = 0.1;  // additive, uniform in [-b, b]
  double contrast = 0.1;    // multiplicative around 0.5, 1 +- c
};

struct TrainConfig {
  std::size_t iterations = 2000;
  std::size_t batch_size = 4;
  double learning_rate = 1e-4;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double poly_power = 0.9;
  std::size_t refresh_period = 200;  // n_b
  double lambda = 1.0;
  double gamma = 1.0;
  KdMode kd_mode = KdMode::Soft;

  // self_train_only switches off the three components below it.
  bool self_train_only = false;
  bool use_crossdonorm = true;
  bool use_consistency = true;
  bool use_rectification = true;

  bool detach_style = false;
  bool share_stylized_predictions = true;
  AugmentConfig augment;
  std::uint64_t seed = 0;

  std::size_t log_every = 1;
  std::size_t checkpoint_every = 0;  // 0 writes only the final checkpoint
  std::filesystem::path checkpoint_dir;

  void validate() const;
  bool crossdonorm_on() const { return use_crossdonorm && !self_train_only; }
  bool consistency_on() const { return use_consistency && !self_train_only; }
  bool rectification_on() const { return use_rectification && !self_train_only; }
};

// One source batch with labels and one batch per target with its pseudo-labels.
struct TrainBatch {
  Tensor source_images;
  LabelBatch source_labels;
  std::vector<Tensor> target_images;
  std::vector<LabelBatch> target_labels;
};

struct LossBreakdown {
  std::size_t num_targets = 0;
  double seg_source = 0.0;
  std::vector<double> kd;                         // per target
  std::vector<double> pl_rectified;               // per target
  std::vector<std::vector<double>> pl_sty;        // [i][j], zero on the diagonal
  std::vector<std::vector<double>> cst;           // [i][j], zero on the diagonal
  std::vector<double> mean_rect_weight;           // per target, 1 when rectification is off
  double kd_coefficient = 0.0;                    // 1/M
  double pair_coefficient = 0.0;                  // lambda/(M-1), 0 when M = 1
  double total = 0.0;

  // Recombines the parts with the stored coefficients.
  double reconstruct() const;
};

// Detached quantities captured on one call and replayed on later calls, so
// the objective becomes a fixed function of the parameters for finite
// differences.
struct FrozenTerms {
  bool replay = false;
  std::vector<Tensor> kd_features;
  std::vector<Tensor> teachers;
  std::vector<Tensor> weights;
};

struct ObjectiveResult {
  Tensor total;
  LossBreakdown breakdown;
};

// Without an rng the forward passes run in eval mode.
ObjectiveResult total_objective(const ModelBundle& bundle, const TrainBatch& batch, const TrainConfig& config,
                                Rng* rng = nullptr, FrozenTerms* frozen = nullptr);

// Flip and crop act on images and labels alike; photometric jitter only on images.
void augment_batch(Tensor& images, LabelBatch& labels, const AugmentConfig& config, Rng& rng);

struct SelfTrainOutputs {
  std::ostream* metrics_csv = nullptr;
  // Called after every optimizer step with the completed iteration count.
  std::function<void(std::size_t, const ModelBundle&, const LossBreakdown&)> on_step;
};

inline constexpr const char* kMetricsCsvHeader =
    "iteration,domain,loss_total,loss_seg,loss_kd,loss_pl,loss_pl_sty,loss_cst,mean_rect_weight";

// Stage 2: SGD on total_objective with pseudo-label refreshes every n_b
// iterations. Returns the breakdown of the last step.
std::optional<LossBreakdown> selftrain_run(ModelBundle& bundle, const DomainDataset& source,
                                           const std::vector<DomainDataset>& targets, PseudoLabelBank& bank,
                                           const TrainConfig& config, const SelfTrainOutputs& outputs = {});

struct Variant {
  std::string name;
  bool self_train_only = false;
  bool use_crossdonorm = false;
  bool use_consistency = false;
  bool use_rectification = false;

  TrainConfig apply(TrainConfig base) const;
};

// (i) pseudo-labels only, (ii) +CrossDoNorm, (iii) +consistency,
// (iv) +rectification without consistency, (v) full.
std::vector<Variant> ablation_variants();

struct AblationConfig {
  BenchmarkConfig data;
  ModelConfig model;
  WarmupConfig warmup;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<Variant> variants = ablation_variants();
  bool run_source_only = true;
};

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  double avg_miou = 0.0;
  std::vector<double> target_miou;
  double unseen_miou = 0.0;
  double seconds = 0.0;  // wall time of this stage; the first stage of a seed includes data generation
};

struct AblationResult {
  std::vector<AblationRow> variants;   // one per variant and seed
  std::vector<AblationRow> baselines;  // "source_only" and "warmup" per seed
};

// Seeds data, model and both stages from each seed; every variant starts
// from the same warm-up checkpoint. Scores use C^A on the labeled target
// evaluation splits and the unseen domain.
AblationResult run_ablation_suite(const AblationConfig& config, std::ostream* progress = nullptr);

// variant,seed,avg_miou,target_1_miou..target_M_miou,unseen_miou
void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& out);

// Median across seeds of the given variant's avg (or unseen) mIoU.
double median_score(const std::vector<AblationRow>& rows, const std::string& variant, bool unseen = false);

// Evaluates labeled target split i with C^A, or with C^{T_i} when
// `domain_heads` is set.
MetricsReport evaluate_targets(const ModelBundle& bundle, const std::vector<DomainDataset>& target_eval,
                               bool domain_heads = false);

}  // namespace coast
