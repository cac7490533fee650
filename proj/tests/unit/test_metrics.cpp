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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "coast/errors.hpp"
#include "coast/metrics.hpp"
#include "coast/self_train.hpp"
#include "helpers.hpp"

using namespace coast;
using namespace coast::test;

namespace {

std::vector<std::int32_t> random_grid(std::size_t n, std::size_t k, std::uint64_t seed) {
  return random_labels(1, k, 1, n, seed).values;
}

// Brute force: per class, count intersection and union pixel by pixel.
std::pair<std::vector<double>, double> iou_oracle(const std::vector<std::int32_t>& pred,
                                                  const std::vector<std::int32_t>& truth, std::size_t k) {
  std::vector<double> ious;
  double sum = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t p = 0; p < pred.size(); ++p) {
      const bool a = pred[p] == std::int32_t(c), b = truth[p] == std::int32_t(c);
      inter += a && b;
      uni += a || b;
    }
    if (uni == 0) {
      ious.push_back(-1);
      continue;
    }
    ious.push_back(double(inter) / double(uni));
    sum += ious.back();
  }
  const auto present = std::count_if(ious.begin(), ious.end(), [](double v) { return v >= 0; });
  return {ious, sum / double(present)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(ConfusionMatrix, PerfectPredictionIsDiagonal) {
  ConfusionMatrix cm(4);
  const auto g = random_grid(64, 4, 1);
  cm.accumulate(g, g);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      if (a != b) {
        EXPECT_EQ(cm.at(a, b), 0u);
      }
    }
  }
  EXPECT_EQ(cm.total(), 64u);
  for (const auto& v : miou(cm).per_class) {
    if (v) {
      EXPECT_EQ(*v, 1.0);
    }
  }
}

TEST(ConfusionMatrix, EmptyGridIsNoOp) {
  ConfusionMatrix cm(3);
  cm.accumulate(std::vector<std::int32_t>{}, std::vector<std::int32_t>{});
  EXPECT_EQ(cm, ConfusionMatrix(3));
  EXPECT_THROW(miou(cm), InvalidArgument);
}

TEST(ConfusionMatrix, RejectsOutOfRangeAndMismatch) {
  ConfusionMatrix cm(3);
  EXPECT_THROW(cm.accumulate(std::vector<std::int32_t>{0, 3}, std::vector<std::int32_t>{0, 1}), InvalidArgument);
  EXPECT_THROW(cm.accumulate(std::vector<std::int32_t>{0, 1}, std::vector<std::int32_t>{-1, 1}), InvalidArgument);
  EXPECT_EQ(cm.total(), 0u);
  EXPECT_THROW(cm.accumulate(std::vector<std::int32_t>{0}, std::vector<std::int32_t>{0, 1}), InvalidShape);
  EXPECT_THROW(cm.merge(ConfusionMatrix(4)), InvalidArgument);
}

TEST(Miou, MatchesBruteForceOnRandomGrids) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t k = 2 + s % 4;
    const auto pred = random_grid(64, k, 2 * s), truth = random_grid(64, k, 2 * s + 1);
    ConfusionMatrix cm(k);
    cm.accumulate(pred, truth);
    std::vector<std::uint64_t> brute(k * k, 0);
    for (std::size_t p = 0; p < 64; ++p) ++brute[truth[p] * k + pred[p]];
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) EXPECT_EQ(cm.at(a, b), brute[a * k + b]);
    }
    const auto [ious, mean] = iou_oracle(pred, truth, k);
    const auto r = miou(cm);
    for (std::size_t c = 0; c < k; ++c) {
      if (ious[c] < 0) {
        EXPECT_FALSE(r.per_class[c].has_value());
      } else {
        EXPECT_EQ(*r.per_class[c], ious[c]);
      }
    }
    EXPECT_EQ(r.mean, mean);
  }
}

TEST(Miou, HandCase) {
  ConfusionMatrix cm(2);
  cm.accumulate(std::vector<std::int32_t>{0, 1, 1, 1}, std::vector<std::int32_t>{0, 0, 1, 1});
  const auto r = miou(cm);
  EXPECT_DOUBLE_EQ(*r.per_class[0], 0.5);
  EXPECT_DOUBLE_EQ(*r.per_class[1], 2.0 / 3.0);
  EXPECT_NEAR(r.mean, 0.5833, 1e-4);
  EXPECT_NEAR(r.mean, 7.0 / 12.0, 1e-9);
}

TEST(Miou, AbsentClassIsExcluded) {
  ConfusionMatrix cm(3);
  cm.accumulate(std::vector<std::int32_t>{0, 1, 1, 1}, std::vector<std::int32_t>{0, 0, 1, 1});
  const auto r = miou(cm);
  EXPECT_FALSE(r.per_class[2].has_value());
  EXPECT_NEAR(r.mean, 7.0 / 12.0, 1e-12);
}

TEST(Miou, InvariantUnderRelabeling) {
  const std::vector<std::int32_t> perm{2, 0, 3, 1};
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto pred = random_grid(64, 4, 100 + s), truth = random_grid(64, 4, 200 + s);
    ConfusionMatrix a(4), b(4);
    a.accumulate(pred, truth);
    for (auto& v : pred) v = perm[v];
    for (auto& v : truth) v = perm[v];
    b.accumulate(pred, truth);
    EXPECT_NEAR(miou(a).mean, miou(b).mean, 1e-15);
  }
}

TEST(ConfusionMatrix, MergeCommutesWithAccumulationOrder) {
  const auto p1 = random_grid(64, 3, 7), t1 = random_grid(64, 3, 8);
  const auto p2 = random_grid(64, 3, 9), t2 = random_grid(64, 3, 10);
  ConfusionMatrix one(3), a(3), b(3);
  one.accumulate(p2, t2);
  one.accumulate(p1, t1);
  a.accumulate(p1, t1);
  b.accumulate(p2, t2);
  ConfusionMatrix ab = a, ba = b;
  ab.merge(b);
  ba.merge(a);
  EXPECT_EQ(ab, ba);
  EXPECT_EQ(ab, one);
  std::vector<std::size_t> order(64);
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  std::vector<std::int32_t> rp, rt;
  for (auto i : order) {
    rp.push_back(p1[i]);
    rt.push_back(t1[i]);
  }
  ConfusionMatrix r(3);
  r.accumulate(rp, rt);
  EXPECT_EQ(r, a);
}

TEST(Evaluate, AgnosticDefaultAndDomainHeads) {
  const Benchmark data = make_benchmark(tiny_data());
  const ModelBundle m(tiny_model());
  const DomainReport unseen = evaluate(m, data.unseen);
  EXPECT_EQ(unseen.head, "agnostic");
  EXPECT_EQ(unseen.domain, "domain_" + std::to_string(data.unseen.domain_id));
  EXPECT_TRUE(std::isfinite(unseen.iou.mean));
  const DomainReport own = evaluate(m, data.target_eval[0], Head::domain(0));
  EXPECT_EQ(own.head, "T1");
  EXPECT_EQ(evaluate(m, data.unseen, Head::agnostic(), 3).iou.mean, unseen.iou.mean);
  EXPECT_THROW(evaluate(m, data.targets[0]), InvalidArgument);
}

TEST(Evaluate, MatchesManualConfusion) {
  const Benchmark data = make_benchmark(tiny_data());
  const ModelBundle m(tiny_model());
  const auto& ds = data.target_eval[1];
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  const auto pred = argmax_classes(m.forward(ds.images(all), Head::agnostic())).values;
  const auto truth = ds.labels(all).values;
  EXPECT_NEAR(evaluate(m, ds).iou.mean, iou_oracle(pred, truth, 3).second, 1e-12);
}

TEST(Report, AverageAndCsv) {
  MetricsReport rep;
  rep.domains.push_back({"domain_1", "agnostic", {{0.5, std::nullopt, 1.0}, 0.75}});
  rep.domains.push_back({"domain_2", "agnostic", {{0.25, 0.5, std::nullopt}, 0.375}});
  EXPECT_DOUBLE_EQ(rep.average_miou(), (0.75 + 0.375) / 2);
  std::ostringstream out;
  write_report_csv(rep, out);
  EXPECT_EQ(out.str(),
            "domain,class,iou\n"
            "domain_1,0,0.5\ndomain_1,1,nan\ndomain_1,2,1\n"
            "domain_2,0,0.25\ndomain_2,1,0.5\ndomain_2,2,nan\n"
            "domain_1,mIoU,0.75\ndomain_2,mIoU,0.375\n"
            "ALL,avg_mIoU,0.5625\n");
  EXPECT_THROW(MetricsReport{}.average_miou(), InvalidArgument);
}

TEST(UncertaintyMap, PgmMatchesRectificationWeights) {
  const Benchmark data = make_benchmark(tiny_data());
  const ModelBundle m(tiny_model());
  const Tensor x = data.targets[0].images({0});
  const std::vector<Tensor> styles{Tensor{}, data.targets[1].images({0})};
  const auto path = std::filesystem::temp_directory_path() / "coast_uncertainty" / "u.pgm";
  const Tensor w = export_uncertainty_map(m, x, 0, styles, 1.0, path);
  const Tensor p0 = m.forward(x, Head::domain(0));
  const Tensor oracle = rectification_weight(p0, {m.forward(x, Head::domain(1), styles[1])}, 1.0).w;
  const std::string bytes = slurp(path);
  const std::string header = "P5\n16 16\n255\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  ASSERT_EQ(bytes.size(), header.size() + 256);
  for (std::size_t k = 0; k < 256; ++k) {
    EXPECT_EQ(w.values()[k], oracle.values()[k]);
    const auto expected = static_cast<unsigned char>(std::lround(255.0 * (1.0 - double(oracle.values()[k]))));
    EXPECT_EQ(static_cast<unsigned char>(bytes[header.size() + k]), expected);
  }
  std::filesystem::remove_all(path.parent_path());
}

TEST(UncertaintyMap, AgreementIsBlack) {
  const Benchmark data = make_benchmark(tiny_data());
  ModelBundle m(tiny_model());
  const auto src = m.classifiers[0].conv;
  std::copy(src.weight.values().begin(), src.weight.values().end(), m.classifiers[1].conv.weight.mutable_values().begin());
  std::copy(src.bias.values().begin(), src.bias.values().end(), m.classifiers[1].conv.bias.mutable_values().begin());
  const Tensor x = data.targets[0].images({1});
  const auto path = std::filesystem::temp_directory_path() / "coast_uncertainty_black.pgm";
  export_uncertainty_map(m, x, 0, {Tensor{}, x}, 1.0, path);
  const std::string bytes = slurp(path);
  const std::string body = bytes.substr(std::string("P5\n16 16\n255\n").size());
  EXPECT_TRUE(std::all_of(body.begin(), body.end(), [](char c) { return c == 0; }));
  std::filesystem::remove(path);
}

TEST(UncertaintyMap, NeedsTwoTargets) {
  const Benchmark data = make_benchmark(tiny_data(1));
  const ModelBundle m(tiny_model(1));
  const Tensor x = data.targets[0].images({0});
  EXPECT_THROW(export_uncertainty_map(m, x, 0, {x}, 1.0, "unused.pgm"), InvalidArgument);
}
