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
#include <vector>

#include "coast/segnet.hpp"
#include "coast/synthetic.hpp"
#include "coast/tensor.hpp"

namespace coast {

// Hard pseudo-labels per target domain and sample, refreshed from the
// domain-specific classifiers.
class PseudoLabelBank {
 public:
  PseudoLabelBank() = default;

  bool empty() const { return labels_.empty(); }
  std::size_t num_domains() const { return labels_.size(); }
  std::size_t size(std::size_t domain) const { return labels_.at(domain).size(); }
  const std::vector<std::uint8_t>& at(std::size_t domain, std::size_t sample) const;
  long long last_refresh_iteration() const { return last_refresh_; }

  // Gathers [B,H,W] labels for the given samples of one domain.
  LabelBatch gather(std::size_t domain, const std::vector<std::size_t>& samples) const;

  // True when a refresh is due at `iteration` for a period of n_b.
  bool due(std::size_t iteration, std::size_t refresh_period) const;

  // Replaces the whole bank; stamps the iteration.
  void assign(std::vector<std::vector<std::vector<std::uint8_t>>> labels, std::size_t height, std::size_t width,
              long long iteration);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  bool operator==(const PseudoLabelBank&) const = default;

 private:
  std::vector<std::vector<std::vector<std::uint8_t>>> labels_;
  std::size_t height_ = 0, width_ = 0;
  long long last_refresh_ = -1;
};

// Argmax of C^{T_i}(Phi(x)) in eval mode for every sample of every target.
void refresh_pseudo_labels(const ModelBundle& bundle, const std::vector<DomainDataset>& targets,
                           PseudoLabelBank& bank, std::size_t iteration, std::size_t batch_size = 32);

// Same label-file format as the datasets, plus a manifest per domain.
void export_bank(const PseudoLabelBank& bank, const std::vector<DomainDataset>& targets,
                 const std::filesystem::path& dir);

struct RectificationWeights {
  Tensor w;  // [N,H,W], detached, every entry in (0,1]
  double gamma = 1.0;
};

// w = 1/(M-1) * sum_j exp(-gamma * KL(p_i || p_{i->j})), KL taken per pixel.
RectificationWeights rectification_weight(const Tensor& p_i, const std::vector<Tensor>& cross_preds,
                                          double gamma);

// Pixel-weighted cross-entropy of a prediction against pseudo-labels; the
// weights never receive gradient.
Tensor rectified_pl_loss(const Tensor& p_i, const LabelBatch& pseudo_labels, const Tensor& w);

// Cross-domain counterpart: the stylized prediction p_{i->j} supervised by
// domain i's pseudo-labels and weights.
Tensor rectified_cross_pl_loss(const Tensor& p_i_to_j, const LabelBatch& pseudo_labels_i, const Tensor& w_i);

// KL(p_{i->j} || p_i) with p_i detached as the teacher.
Tensor consistency_loss(const Tensor& p_i_to_j, const Tensor& p_i);

enum class KdMode { Soft, Hard };

// Soft: KL(p_agnostic || teacher) with the teacher detached.
// Hard: cross-entropy of p_agnostic against the teacher's argmax labels.
Tensor kd_loss(const Tensor& p_agnostic, const Tensor& teacher, KdMode mode);

}  // namespace coast
