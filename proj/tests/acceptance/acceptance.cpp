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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coast/config.hpp"
#include "coast/crossdonorm.hpp"
#include "coast/gradient_suite.hpp"
#include "coast/losses.hpp"
#include "coast/metrics.hpp"
#include "coast/ops.hpp"
#include "coast/self_train.hpp"
#include "coast/trainer.hpp"
#include "coast/warmup.hpp"
#include "helpers.hpp"

using namespace coast;
using namespace coast::test;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << detail << std::endl;
}

// Population mean and sqrt(var + eps) per (n, c).
std::vector<std::pair<double, double>> stats_oracle(const Tensor& z) {
  std::vector<std::pair<double, double>> out;
  const std::size_t hw = z.dim(2) * z.dim(3);
  for (std::size_t n = 0; n < z.dim(0); ++n) {
    for (std::size_t c = 0; c < z.dim(1); ++c) {
      const Scalar* p = z.values().data() + (n * z.dim(1) + c) * hw;
      double m = 0, v = 0;
      for (std::size_t k = 0; k < hw; ++k) m += p[k];
      m /= static_cast<double>(hw);
      for (std::size_t k = 0; k < hw; ++k) v += (p[k] - m) * (p[k] - m);
      out.emplace_back(m, std::sqrt(v / static_cast<double>(hw) + kStatsEpsilon));
    }
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  double worst = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::abs(double(a.values()[i] - b.values()[i])));
  return worst;
}

void gradient_correctness() {
  const auto t0 = Clock::now();
  double worst = 0;
  std::string worst_name;
  std::size_t checked = 0, skipped = 0, cases = 0;
  bool every_case_checked = true;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    for (const auto& c : run_gradient_suite(seed)) {
      ++cases;
      checked += c.result.checked;
      skipped += c.result.skipped_kinks;
      every_case_checked = every_case_checked && c.result.checked > 0;
      if (c.result.max_relative_error >= worst) {
        worst = c.result.max_relative_error;
        worst_name = c.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  report(1, "gradient correctness", worst <= 1e-4 && secs < 60 && every_case_checked,
         fmt("%zu cases, %zu coordinates (%zu relu-kink skips), max rel err %.3g (%s), %.1f s", cases, checked,
             skipped, worst, worst_name.c_str(), secs));
}

void crossdonorm_contracts() {
  double transfer = 0, identity = 0, round_trip = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Tensor zi = random_tensor({2, 4, 8, 8}, 100 + s, -3, 3);
    // Unit-scale features; the stabilized sigma leaves a residual of about
    // sigma_j * eps / (2 var_i), which grows without bound for near-constant content.
    const Tensor zj = random_tensor({2, 4, 8, 8}, 200 + s, -2 - 0.1 * double(s), 4 + 0.1 * double(s));
    const auto [ij, ji] = cross_stylize(zi, zj);
    const auto si = stats_oracle(zi), sj = stats_oracle(zj), so = stats_oracle(ij), sb = stats_oracle(ji);
    for (std::size_t k = 0; k < si.size(); ++k) {
      transfer = std::max({transfer, std::abs(so[k].first - sj[k].first), std::abs(so[k].second - sj[k].second),
                           std::abs(sb[k].first - si[k].first), std::abs(sb[k].second - si[k].second)});
    }
    identity = std::max(identity, max_abs_diff(cross_stylize(zi, zi).i_to_j, zi));
    const StyleVector own = extract_style(zi);
    identity = std::max(identity, max_abs_diff(apply_style(zi, own, own), zi));
    round_trip = std::max(round_trip, max_abs_diff(apply_style(ij, extract_style(zj), own), zi));
  }
  const Tensor hand = apply_style(Tensor::from_values({1, 1, 1, 2}, {0, 2}),
                                  {Tensor::from_values({1, 1}, {1}), Tensor::from_values({1, 1}, {1})},
                                  {Tensor::from_values({1, 1}, {5}), Tensor::from_values({1, 1}, {3})});
  const double hand_err = std::max(std::abs(hand.values()[0] - 2.0), std::abs(hand.values()[1] - 8.0));
  report(2, "cross-domain normalization contracts",
         transfer <= 1e-5 && identity <= 1e-9 && round_trip <= 1e-6 && hand_err <= 1e-12,
         fmt("stats transfer %.2e on unit-scale features (tol 1e-5), identity %.2e (1e-9), round trip %.2e (1e-6), [0,2]->[%g,%g]",
             transfer, identity, round_trip, double(hand.values()[0]), double(hand.values()[1])));
}

Tensor pixel(std::vector<Scalar> probs) {
  const std::size_t k = probs.size();
  return Tensor::from_values({1, k, 1, 1}, std::move(probs));
}

double weight_of(const Tensor& p, const std::vector<Tensor>& qs, double gamma) {
  return rectification_weight(p, qs, gamma).w.values()[0];
}

void rectification_contracts() {
  bool range = true, unit_iff_zero = true, monotone = true, zero_gamma = true, dominated = true;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Tensor p = softmax(random_tensor({2, 4, 4, 4}, 300 + s, -3, 3));
    const Tensor q1 = softmax(random_tensor({2, 4, 4, 4}, 400 + s, -3, 3));
    const Tensor q2 = softmax(random_tensor({2, 4, 4, 4}, 500 + s, -3, 3));
    const Tensor w = rectification_weight(p, {q1, q2}, 1.0).w;
    for (auto v : w.values()) range = range && v > 0 && v <= 1;
    for (auto v : w.values()) unit_iff_zero = unit_iff_zero && v < 1;
    const Tensor same = rectification_weight(p, {p, p.clone()}, 1.0).w;
    for (auto v : same.values()) unit_iff_zero = unit_iff_zero && v == 1;
    const Tensor w0 = rectification_weight(p, {q1, q2}, 0.0).w;
    for (auto v : w0.values()) zero_gamma = zero_gamma && v == 1;

    // Per-pixel loss through single-pixel weight masks.
    const LabelBatch y = random_labels(2, 4, 4, 4, 600 + s);
    for (std::size_t k = 0; k < w.numel(); ++k) {
      std::vector<Scalar> one(w.numel(), 0), weighted(w.numel(), 0);
      one[k] = 1;
      weighted[k] = w.values()[k];
      const double plain = rectified_pl_loss(p, y, Tensor::from_values(w.shape(), one)).item();
      const double rect = rectified_pl_loss(p, y, Tensor::from_values(w.shape(), weighted)).item();
      dominated = dominated && rect <= plain;
    }
  }
  // One disagreeing pixel among agreeing ones.
  const Tensor base = softmax(random_tensor({1, 3, 2, 2}, 700, -2, 2));
  Tensor moved = base.clone();
  auto mv = moved.mutable_values();
  std::swap(mv[0], mv[4]);
  const Tensor wm = rectification_weight(base, {moved}, 1.0).w;
  unit_iff_zero = unit_iff_zero && wm.values()[0] < 1;
  for (std::size_t k = 1; k < 4; ++k) unit_iff_zero = unit_iff_zero && wm.values()[k] == 1;

  // KL(p || q_t) grows with t for q_t moving away from p along a line.
  const Tensor p = pixel({0.7, 0.2, 0.1});
  const Tensor fixed = pixel({0.5, 0.3, 0.2});
  double previous = 2.0;
  for (int t = 0; t <= 20; ++t) {
    const double a = 0.04 * t;
    const Tensor q = pixel({Scalar(0.7 - 0.6 * a), Scalar(0.2 + 0.3 * a), Scalar(0.1 + 0.3 * a)});
    const double w = weight_of(p, {q, fixed}, 1.0);
    monotone = monotone && w < previous;
    previous = w;
  }
  const double hand = weight_of(pixel({1, 0}), {pixel({0.5, 0.5}), pixel({0.25, 0.75})}, 1.0);
  report(3, "rectification contracts",
         range && unit_iff_zero && monotone && zero_gamma && dominated && std::abs(hand - 0.375) <= 1e-12,
         fmt("range %s, w=1 iff KL=0 %s, monotone %s, gamma=0 %s, rectified<=plain %s, hand case %.12f", range ? "ok" : "bad",
             unit_iff_zero ? "ok" : "bad", monotone ? "ok" : "bad", zero_gamma ? "ok" : "bad",
             dominated ? "ok" : "bad", hand));
}

void objective_composition() {
  double worst = 0;
  bool coefficients = true;
  const ModelBundle m2(tiny_model(2));
  const TrainBatch b2 = micro_batch(2, 800);
  for (const auto& [lambda, gamma] : {std::pair{1.0, 1.0}, std::pair{0.3, 2.5}, std::pair{2.0, 0.5}}) {
    TrainConfig c;
    c.lambda = lambda;
    c.gamma = gamma;
    const auto r = total_objective(m2, b2, c);
    worst = std::max(worst, std::abs(r.total.item() - hand_summed_total(m2, b2, lambda, gamma)));
  }
  for (std::size_t targets : {2u, 3u}) {
    TrainConfig c;
    c.lambda = 0.6;
    const ModelBundle m(tiny_model(targets));
    const auto bd = total_objective(m, micro_batch(targets, 900), c).breakdown;
    const double mm = static_cast<double>(targets);
    coefficients = coefficients && std::abs(bd.kd_coefficient - 1.0 / mm) < 1e-15 &&
                   std::abs(bd.pair_coefficient - 0.6 / (mm - 1)) < 1e-15 && std::abs(bd.reconstruct() - bd.total) < 1e-9;
    for (std::size_t i = 0; i < targets; ++i) coefficients = coefficients && bd.pl_sty[i][i] == 0 && bd.cst[i][i] == 0;
  }
  report(4, "objective composition", worst <= 1e-9 && coefficients,
         fmt("M=2 oracle max |diff| %.2e (tol 1e-9); coefficients 1/M, lambda/(M-1) for M=2,3 %s", worst,
             coefficients ? "ok" : "bad"));
}

// IoU per class from pixel loops, averaged over classes with a nonzero union.
double miou_oracle(const std::vector<std::int32_t>& pred, const std::vector<std::int32_t>& truth, int k) {
  double sum = 0;
  int present = 0;
  for (int c = 0; c < k; ++c) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      tp += pred[i] == c && truth[i] == c;
      fp += pred[i] == c && truth[i] != c;
      fn += pred[i] != c && truth[i] == c;
    }
    if (tp + fp + fn == 0) continue;
    sum += static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    ++present;
  }
  return sum / present;
}

void oracle_metrics() {
  std::size_t exact = 0;
  std::mt19937_64 rng(1234);
  for (int g = 0; g < 100; ++g) {
    const int k = 2 + static_cast<int>(rng() % 5);
    std::vector<std::int32_t> pred(64), truth(64);
    for (auto& v : pred) v = static_cast<std::int32_t>(rng() % k);
    for (auto& v : truth) v = static_cast<std::int32_t>(rng() % k);
    ConfusionMatrix cm(static_cast<std::size_t>(k));
    cm.accumulate(pred, truth);
    exact += miou(cm).mean == miou_oracle(pred, truth, k);
  }
  ConfusionMatrix hand(2);
  hand.accumulate(std::vector<std::int32_t>{0, 1, 1, 1}, std::vector<std::int32_t>{0, 0, 1, 1});
  const double h = miou(hand).mean;
  report(5, "oracle metrics", exact == 100 && std::abs(h - 7.0 / 12.0) <= 1e-9,
         fmt("%zu/100 random 8x8 grids exact, hand case %.10f", exact, h));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void determinism(const RunConfig& desk) {
  const auto root = std::filesystem::temp_directory_path() / "coast_acceptance_determinism";
  std::filesystem::remove_all(root);
  const auto t0 = Clock::now();
  std::vector<std::string> artifacts[2];
  std::vector<std::string> names;
  for (int r = 0; r < 2; ++r) {
    const Benchmark data = make_benchmark(desk.data);
    ModelBundle model(desk.model_for_data());
    WarmupConfig wc = desk.warmup;
    wc.iterations = 20;
    std::ostringstream warm_csv;
    write_warmup_csv(warmup_run(model, data.source, data.targets, wc), warm_csv);
    const auto dir = root / std::to_string(r);
    std::filesystem::create_directories(dir);
    save_checkpoint(model, dir / "warmup.coast");

    TrainConfig tc = desk.train;
    tc.iterations = 20;
    tc.refresh_period = 10;
    tc.checkpoint_every = 10;
    tc.checkpoint_dir = dir;
    PseudoLabelBank bank;
    std::ostringstream train_csv;
    selftrain_run(model, data.source, data.targets, bank, tc, {&train_csv, {}});
    artifacts[r] = {warm_csv.str(), train_csv.str()};
    names = {"warmup metrics", "train metrics"};
    for (const auto& e : std::filesystem::directory_iterator(dir)) names.push_back(e.path().filename().string());
    std::sort(names.begin() + 2, names.end());
    for (std::size_t k = 2; k < names.size(); ++k) artifacts[r].push_back(slurp(dir / names[k]));
  }
  std::size_t equal = 0;
  for (std::size_t k = 0; k < names.size(); ++k) equal += k < artifacts[1].size() && artifacts[0][k] == artifacts[1][k];
  const bool pass = artifacts[0].size() == artifacts[1].size() && equal == names.size() && names.size() >= 5;
  report(8, "determinism", pass,
         fmt("%zu/%zu artifacts bitwise identical (2 metrics CSVs, %zu checkpoints), %.1f s", equal, names.size(),
             names.size() - 2, seconds_since(t0)));
  std::filesystem::remove_all(root);
}

double stage_seconds(const std::vector<AblationRow>& rows, const std::string& name) {
  double s = 0;
  for (const auto& r : rows) {
    if (r.variant == name) s += r.seconds;
  }
  return s;
}

void desk_experiment(const RunConfig& desk) {
  AblationConfig cfg = desk.ablation();
  const auto t0 = Clock::now();
  const AblationResult res = run_ablation_suite(cfg, &std::cout);
  const double suite = seconds_since(t0);
  write_ablation_csv(res.baselines, std::cout);
  write_ablation_csv(res.variants, std::cout);

  const double src = median_score(res.baselines, "source_only");
  const double warm = median_score(res.baselines, "warmup");
  const double full = median_score(res.variants, "v");
  const double pipeline = stage_seconds(res.baselines, "source_only") + stage_seconds(res.baselines, "warmup") +
                          stage_seconds(res.variants, "v");
  report(6, "desk experiment",
         full - src >= 0.05 && full - warm >= 0.02 && pipeline <= 600,
         fmt("median avg mIoU source-only %.4f, warm-up %.4f, full %.4f (+%.2f / +%.2f points); "
             "source-only + warm-up + full over 3 seeds %.0f s (limit 600), whole suite %.0f s",
             src, warm, full, 100 * (full - src), 100 * (full - warm), pipeline, suite));

  const double i = median_score(res.variants, "i"), ii = median_score(res.variants, "ii");
  report(7, "ablation ordering", full >= ii - 0.01 && ii >= i - 0.01,
         fmt("median avg mIoU (i) %.4f, (ii) %.4f, (v) %.4f", i, ii, full));

  // Fresh agnostic-head evaluation of the unseen domain, no domain id involved.
  const Benchmark data = make_benchmark(cfg.data);
  const ModelBundle fresh(cfg.model);
  const DomainReport unseen = evaluate(fresh, data.unseen);
  bool finite = std::isfinite(unseen.iou.mean) && unseen.head == Head::agnostic().name();
  for (const auto& r : res.variants) finite = finite && std::isfinite(r.unseen_miou);
  const double src_unseen = median_score(res.baselines, "source_only", true);
  const double full_unseen = median_score(res.variants, "v", true);
  report(9, "unseen-domain transfer", finite && full_unseen >= src_unseen,
         fmt("evaluation via agnostic head finite %s; median unseen mIoU full %.4f vs source-only %.4f",
             finite ? "yes" : "no", full_unseen, src_unseen));
}

}  // namespace

int main(int argc, char** argv) {
  retain_freed_memory();
  try {
    const RunConfig desk = load_run_config(argc > 1 ? argv[1] : COAST_DESK_CONFIG);
    gradient_correctness();
    crossdonorm_contracts();
    rectification_contracts();
    objective_composition();
    oracle_metrics();
    determinism(desk);
    desk_experiment(desk);
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
