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

#include "coast/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "coast/errors.hpp"
#include "coast/ops.hpp"
#include "coast/self_train.hpp"

namespace coast {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw InvalidArgument("confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

void ConfusionMatrix::accumulate(std::span<const std::int32_t> predicted, std::span<const std::int32_t> truth) {
  if (predicted.size() != truth.size()) throw InvalidShape("accumulate: prediction and truth differ in size");
  const auto k = static_cast<std::int32_t>(classes_);
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (predicted[n] < 0 || predicted[n] >= k || truth[n] < 0 || truth[n] >= k) {
      throw InvalidArgument("accumulate: class id out of range at pixel " + std::to_string(n));
    }
  }
  for (std::size_t n = 0; n < truth.size(); ++n) ++counts_[static_cast<std::size_t>(truth[n]) * classes_ + static_cast<std::size_t>(predicted[n])];
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw InvalidArgument("merge: class counts differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

IouResult miou(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw InvalidArgument("miou: confusion matrix is empty");
  const std::size_t k = cm.classes();
  IouResult out;
  out.per_class.resize(k);
  double acc = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t o = 0; o < k; ++o) {
      row += cm.at(c, o);
      col += cm.at(o, c);
    }
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t denom = row + col - tp;
    if (denom == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(denom);
    out.per_class[c] = iou;
    acc += iou;
    ++present;
  }
  out.mean = acc / static_cast<double>(present);
  return out;
}

double MetricsReport::average_miou() const {
  if (domains.empty()) throw InvalidArgument("average_miou: report has no domains");
  double acc = 0.0;
  for (const auto& d : domains) acc += d.iou.mean;
  return acc / static_cast<double>(domains.size());
}

DomainReport evaluate(const ModelBundle& bundle, const DomainDataset& dataset, Head head, std::size_t batch_size) {
  if (!dataset.labeled()) throw InvalidArgument("evaluate: dataset for domain " + std::to_string(dataset.domain_id) + " has no labels");
  if (batch_size == 0) throw InvalidArgument("evaluate: batch size must be positive");
  NoGradGuard no_grad;
  ConfusionMatrix cm(bundle.config().classes);
  for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t n = start; n < std::min(start + batch_size, dataset.size()); ++n) idx.push_back(n);
    const LabelBatch pred = argmax_classes(bundle.forward(dataset.images(idx), head));
    const LabelBatch truth = dataset.labels(idx);
    cm.accumulate(pred.values, truth.values);
  }
  return {"domain_" + std::to_string(dataset.domain_id), head.name(), miou(cm)};
}

void write_report_csv(const MetricsReport& report, std::ostream& out) {
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "domain,class,iou\n";
  for (const auto& d : report.domains) {
    for (std::size_t c = 0; c < d.iou.per_class.size(); ++c) {
      out << d.domain << ',' << c << ',' << (d.iou.per_class[c] ? num(*d.iou.per_class[c]) : "nan") << '\n';
    }
  }
  for (const auto& d : report.domains) out << d.domain << ",mIoU," << num(d.iou.mean) << '\n';
  out << "ALL,avg_mIoU," << num(report.average_miou()) << '\n';
}

Tensor export_uncertainty_map(const ModelBundle& bundle, const Tensor& image, std::size_t domain,
                              const std::vector<Tensor>& style_sources, double gamma,
                              const std::filesystem::path& path) {
  const std::size_t m = bundle.num_targets();
  if (m < 2) throw InvalidArgument("uncertainty map needs at least two target domains");
  if (domain >= m) throw InvalidArgument("uncertainty map: domain index out of range");
  if (style_sources.size() != m) throw InvalidArgument("uncertainty map: one style source per target expected");
  if (image.rank() != 4 || image.dim(0) != 1) throw InvalidShape("uncertainty map: image must be [1,C,H,W]");
  NoGradGuard no_grad;
  const Tensor p_i = bundle.forward(image, Head::domain(domain));
  std::vector<Tensor> cross;
  for (std::size_t j = 0; j < m; ++j) {
    if (j == domain) continue;
    cross.push_back(bundle.forward(image, Head::domain(j), style_sources[j]));
  }
  const Tensor w = rectification_weight(p_i, cross, gamma).w;
  const std::size_t h = w.dim(1), wd = w.dim(2);
  std::vector<unsigned char> pixels(h * wd);
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    pixels[k] = static_cast<unsigned char>(std::lround(255.0 * (1.0 - static_cast<double>(w.values()[k]))));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "P5\n" << wd << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  return w;
}

}  // namespace coast
