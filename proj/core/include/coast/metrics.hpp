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
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "coast/segnet.hpp"
#include "coast/synthetic.hpp"
#include "coast/tensor.hpp"

namespace coast {

// K x K pixel counts indexed [true class][predicted class].
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  std::size_t classes() const { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }
  std::uint64_t total() const;

  // Grids must have equal length; every value must be < K.
  void accumulate(std::span<const std::int32_t> predicted, std::span<const std::int32_t> truth);
  void merge(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

struct IouResult {
  std::vector<std::optional<double>> per_class;  // empty when TP+FP+FN == 0
  double mean = 0.0;                             // over present classes only
};

// IoU_k = TP / (TP + FP + FN). Throws on an empty matrix.
IouResult miou(const ConfusionMatrix& cm);

struct DomainReport {
  std::string domain;
  std::string head;
  IouResult iou;
};

struct MetricsReport {
  std::vector<DomainReport> domains;
  double average_miou() const;
};

// Eval-mode segmentation of a labeled dataset with the given head (the
// domain-agnostic classifier by default, which needs no domain id).
DomainReport evaluate(const ModelBundle& bundle, const DomainDataset& dataset, Head head = Head::agnostic(),
                      std::size_t batch_size = 16);

// Rows (domain, class, iou), then (domain, "mIoU", value) per domain and a
// final ("ALL", "avg_mIoU", value). Absent classes are written as "nan".
void write_report_csv(const MetricsReport& report, std::ostream& out);

// Writes round(255 * (1 - w)) of the per-pixel rectification weight of
// `image` ([1,3,H,W], domain i) as a binary PGM. `style_sources[j]` is an
// image of target j; entry i is ignored. Returns the weight map [1,H,W].
Tensor export_uncertainty_map(const ModelBundle& bundle, const Tensor& image, std::size_t domain,
                              const std::vector<Tensor>& style_sources, double gamma,
                              const std::filesystem::path& path);

}  // namespace coast
