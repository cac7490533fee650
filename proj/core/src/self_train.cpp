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

#include "coast/self_train.hpp"

#include <cmath>
#include <fstream>

#include "coast/errors.hpp"
#include "coast/losses.hpp"
#include "coast/ops.hpp"
#include "json.hpp"

namespace coast {

const std::vector<std::uint8_t>& PseudoLabelBank::at(std::size_t domain, std::size_t sample) const {
  return labels_.at(domain).at(sample);
}

LabelBatch PseudoLabelBank::gather(std::size_t domain, const std::vector<std::size_t>& samples) const {
  LabelBatch out{samples.size(), height_, width_, {}};
  out.values.reserve(out.pixels());
  for (auto s : samples) {
    const auto& grid = at(domain, s);
    out.values.insert(out.values.end(), grid.begin(), grid.end());
  }
  return out;
}

bool PseudoLabelBank::due(std::size_t iteration, std::size_t refresh_period) const {
  if (last_refresh_ < 0) return true;
  return refresh_period > 0 && static_cast<long long>(iteration) - last_refresh_ >= static_cast<long long>(refresh_period);
}

void PseudoLabelBank::assign(std::vector<std::vector<std::vector<std::uint8_t>>> labels, std::size_t height,
                             std::size_t width, long long iteration) {
  for (const auto& domain : labels) {
    for (const auto& grid : domain) {
      if (grid.size() != height * width) throw InvalidShape("pseudo-label grid does not match sample size");
    }
  }
  labels_ = std::move(labels);
  height_ = height;
  width_ = width;
  last_refresh_ = iteration;
}

void refresh_pseudo_labels(const ModelBundle& bundle, const std::vector<DomainDataset>& targets,
                           PseudoLabelBank& bank, std::size_t iteration, std::size_t batch_size) {
  if (targets.size() != bundle.num_targets()) throw InvalidArgument("refresh: one dataset per target head expected");
  NoGradGuard no_grad;
  std::vector<std::vector<std::vector<std::uint8_t>>> labels(targets.size());
  std::size_t height = 0, width = 0;
  for (std::size_t d = 0; d < targets.size(); ++d) {
    const auto& ds = targets[d];
    height = ds.height;
    width = ds.width;
    const std::size_t hw = ds.height * ds.width;
    for (std::size_t start = 0; start < ds.size(); start += batch_size) {
      std::vector<std::size_t> idx;
      for (std::size_t n = start; n < std::min(start + batch_size, ds.size()); ++n) idx.push_back(n);
      const LabelBatch pl = argmax_classes(bundle.forward(ds.images(idx), Head::domain(d)));
      for (std::size_t b = 0; b < idx.size(); ++b) {
        labels[d].emplace_back(pl.values.begin() + static_cast<std::ptrdiff_t>(b * hw),
                               pl.values.begin() + static_cast<std::ptrdiff_t>((b + 1) * hw));
      }
    }
  }
  bank.assign(std::move(labels), height, width, static_cast<long long>(iteration));
}

void export_bank(const PseudoLabelBank& bank, const std::vector<DomainDataset>& targets,
                 const std::filesystem::path& dir) {
  for (std::size_t d = 0; d < bank.num_domains(); ++d) {
    const auto sub = dir / ("target_" + std::to_string(d + 1));
    std::filesystem::create_directories(sub);
    nlohmann::json manifest{{"format", "coast-pseudo-labels"},
                            {"version", 1},
                            {"domain_id", targets.at(d).domain_id},
                            {"height", bank.height()},
                            {"width", bank.width()},
                            {"refresh_iteration", bank.last_refresh_iteration()},
                            {"samples", nlohmann::json::array()}};
    char name[32];
    for (std::size_t n = 0; n < bank.size(d); ++n) {
      std::snprintf(name, sizeof name, "lbl_%05zu.u8", n);
      write_label_file(sub / name, bank.at(d, n));
      manifest["samples"].push_back({{"scene_seed", targets.at(d).samples.at(n).scene_seed}, {"labels", name}});
    }
    std::ofstream(sub / "manifest.json") << manifest.dump(2) << '\n';
  }
}

RectificationWeights rectification_weight(const Tensor& p_i, const std::vector<Tensor>& cross_preds, double gamma) {
  if (cross_preds.empty()) throw InvalidArgument("rectification_weight: needs at least one cross prediction");
  if (gamma < 0) throw InvalidArgument("rectification_weight: gamma must be nonnegative");
  NoGradGuard no_grad;
  const Tensor p = p_i.detach();
  std::vector<Scalar> w;
  for (const auto& q : cross_preds) {
    if (q.shape() != p_i.shape()) throw InvalidShape("rectification_weight: prediction shapes differ");
    const Tensor kl = kl_per_pixel(p, q.detach());
    if (w.empty()) w.assign(kl.numel(), Scalar{0});
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += std::exp(-static_cast<Scalar>(gamma) * kl.values()[k]);
  }
  const auto inv = Scalar{1} / static_cast<Scalar>(cross_preds.size());
  for (auto& v : w) v *= inv;
  return {Tensor::from_values({p_i.dim(0), p_i.dim(2), p_i.dim(3)}, std::move(w)), gamma};
}

Tensor rectified_pl_loss(const Tensor& p_i, const LabelBatch& pseudo_labels, const Tensor& w) {
  return cross_entropy(p_i, pseudo_labels, w.defined() ? w.detach() : Tensor{});
}

Tensor rectified_cross_pl_loss(const Tensor& p_i_to_j, const LabelBatch& pseudo_labels_i, const Tensor& w_i) {
  return rectified_pl_loss(p_i_to_j, pseudo_labels_i, w_i);
}

Tensor consistency_loss(const Tensor& p_i_to_j, const Tensor& p_i) { return kl_divergence(p_i_to_j, p_i.detach()); }

Tensor kd_loss(const Tensor& p_agnostic, const Tensor& teacher, KdMode mode) {
  if (p_agnostic.shape() != teacher.shape()) throw InvalidShape("kd_loss: prediction shapes differ");
  switch (mode) {
    case KdMode::Soft:
      return kl_divergence(p_agnostic, teacher.detach());
    case KdMode::Hard:
      return cross_entropy(p_agnostic, argmax_classes(teacher));
  }
  throw InvalidArgument("kd_loss: unknown mode");
}

}  // namespace coast
