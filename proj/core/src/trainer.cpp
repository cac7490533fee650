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

#include "coast/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "coast/errors.hpp"
#include "coast/losses.hpp"
#include "coast/ops.hpp"
#include "coast/optim.hpp"

namespace coast {

void TrainConfig::validate() const {
  if (iterations == 0) throw InvalidArgument("train: iterations must be > 0");
  if (batch_size == 0) throw InvalidArgument("train: batch_size must be > 0");
  if (!(learning_rate > 0)) throw InvalidArgument("train: learning_rate must be > 0");
  if (momentum < 0 || momentum >= 1) throw InvalidArgument("train: momentum must be in [0,1)");
  if (!(lambda >= 0)) throw InvalidArgument("train: lambda must be >= 0");
  if (!(gamma >= 0)) throw InvalidArgument("train: gamma must be >= 0");
  if (refresh_period == 0) throw InvalidArgument("train: refresh_period must be > 0");
  if (log_every == 0) throw InvalidArgument("train: log_every must be > 0");
  if (augment.crop && augment.crop_size == 0) throw InvalidArgument("train: crop_size must be > 0");
  if (augment.brightness < 0 || augment.contrast < 0 || augment.contrast >= 1) {
    throw InvalidArgument("train: jitter ranges must be >= 0 and contrast < 1");
  }
}

double LossBreakdown::reconstruct() const {
  double t = seg_source;
  for (std::size_t i = 0; i < num_targets; ++i) {
    double pair = 0.0;
    for (std::size_t j = 0; j < num_targets; ++j) {
      if (j != i) pair += pl_sty[i][j] + cst[i][j];
    }
    t += kd_coefficient * kd[i] + pl_rectified[i] + pair_coefficient * pair;
  }
  return t;
}

namespace {

double value_of(const Tensor& t) { return static_cast<double>(t.item()); }

}  // namespace

ObjectiveResult total_objective(const ModelBundle& bundle, const TrainBatch& batch, const TrainConfig& config,
                                Rng* rng, FrozenTerms* frozen_terms) {
  const std::size_t m = bundle.num_targets();
  if (!batch.source_images.defined()) throw InvalidArgument("total_objective: missing source batch");
  if (batch.target_images.size() != m || batch.target_labels.size() != m) {
    throw InvalidArgument("total_objective: expected " + std::to_string(m) + " target batches, got " +
                          std::to_string(batch.target_images.size()));
  }
  for (const auto& x : batch.target_images) {
    if (!x.defined()) throw InvalidArgument("total_objective: missing target batch");
  }
  if (frozen_terms && !frozen_terms->replay) *frozen_terms = FrozenTerms{};

  const ForwardContext ctx{rng != nullptr, rng, config.detach_style};
  LossBreakdown bd;
  bd.num_targets = m;
  bd.kd.assign(m, 0.0);
  bd.pl_rectified.assign(m, 0.0);
  bd.pl_sty.assign(m, std::vector<double>(m, 0.0));
  bd.cst.assign(m, std::vector<double>(m, 0.0));
  bd.mean_rect_weight.assign(m, 1.0);
  bd.kd_coefficient = 1.0 / static_cast<double>(m);
  bd.pair_coefficient = m > 1 ? config.lambda / static_cast<double>(m - 1) : 0.0;

  const Tensor zs = bundle.features(batch.source_images, {}, ctx);
  Tensor seg = cross_entropy(bundle.agnostic.probs(zs), batch.source_labels);
  for (std::size_t i = 0; i < m; ++i) seg = seg + cross_entropy(bundle.classifiers[i].probs(zs), batch.source_labels);
  bd.seg_source = value_of(seg);
  Tensor total = seg;

  std::vector<Tensor> z(m), p(m);
  for (std::size_t i = 0; i < m; ++i) {
    z[i] = bundle.features(batch.target_images[i], {}, ctx);
    p[i] = bundle.classifiers[i].probs(z[i]);
  }

  const bool pairs = m > 1;
  const bool rectify = pairs && config.rectification_on();
  const bool sty = pairs && config.crossdonorm_on();
  const bool cst = pairs && config.consistency_on();
  const auto stylized = [&](std::size_t i, std::size_t j) {
    return bundle.forward(batch.target_images[i], Head::domain(j), batch.target_images[j], ctx);
  };
  std::vector<std::vector<Tensor>> cross(m, std::vector<Tensor>(m));
  if (config.share_stylized_predictions && (rectify || sty || cst)) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (j != i) cross[i][j] = stylized(i, j);
      }
    }
  }
  const auto cross_pred = [&](std::size_t i, std::size_t j) {
    return config.share_stylized_predictions ? cross[i][j] : stylized(i, j);
  };

  const auto freeze = [&](std::vector<Tensor> FrozenTerms::*store, std::size_t i, auto make) -> Tensor {
    if (frozen_terms && frozen_terms->replay) return (frozen_terms->*store).at(i);
    Tensor live = make();
    if (frozen_terms) (frozen_terms->*store).push_back(live);
    return live;
  };

  const auto kd_coef = static_cast<Scalar>(bd.kd_coefficient);
  const auto pair_coef = static_cast<Scalar>(bd.pair_coefficient);
  for (std::size_t i = 0; i < m; ++i) {
    Tensor w;
    if (rectify) {
      std::vector<Tensor> preds;
      for (std::size_t j = 0; j < m; ++j) {
        if (j != i) preds.push_back(cross_pred(i, j));
      }
      w = freeze(&FrozenTerms::weights, i, [&] { return rectification_weight(p[i], preds, config.gamma).w; });
      double acc = 0.0;
      for (auto v : w.values()) acc += static_cast<double>(v);
      bd.mean_rect_weight[i] = acc / static_cast<double>(w.numel());
    }

    const Tensor pl = rectified_pl_loss(p[i], batch.target_labels[i], w);
    bd.pl_rectified[i] = value_of(pl);

    const Tensor feats = freeze(&FrozenTerms::kd_features, i, [&] { return z[i].detach(); });
    const Tensor teacher = freeze(&FrozenTerms::teachers, i, [&] { return p[i].detach(); });
    const Tensor kd = kd_loss(bundle.agnostic.probs(feats), teacher, config.kd_mode);
    bd.kd[i] = value_of(kd);
    total = total + kd * kd_coef + pl;

    if (!sty && !cst) continue;
    Tensor pair_sum;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      if (sty) {
        const Tensor l = rectified_cross_pl_loss(cross_pred(i, j), batch.target_labels[i], w);
        bd.pl_sty[i][j] = value_of(l);
        pair_sum = pair_sum.defined() ? pair_sum + l : l;
      }
      if (cst) {
        const Tensor l = consistency_loss(cross_pred(i, j), teacher);
        bd.cst[i][j] = value_of(l);
        pair_sum = pair_sum.defined() ? pair_sum + l : l;
      }
    }
    total = total + pair_sum * pair_coef;
  }
  bd.total = value_of(total);
  return {total, bd};
}

void augment_batch(Tensor& images, LabelBatch& labels, const AugmentConfig& config, Rng& rng) {
  if (images.rank() != 4) throw InvalidShape("augment: images must be [N,C,H,W]");
  const std::size_t n = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
  const bool has_labels = !labels.values.empty();
  if (has_labels && (labels.batch != n || labels.height != h || labels.width != w)) {
    throw InvalidShape("augment: labels do not match images");
  }
  std::size_t oh = h, ow = w;
  if (config.crop) {
    if (config.crop_size > h || config.crop_size > w) throw InvalidShape("augment: crop larger than image");
    oh = ow = config.crop_size;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto src = images.values();
  std::vector<Scalar> out(n * c * oh * ow);
  std::vector<std::int32_t> lab(has_labels ? n * oh * ow : 0);
  for (std::size_t b = 0; b < n; ++b) {
    const bool flip = config.flip && (rng() & 1U);
    std::size_t y0 = 0, x0 = 0;
    if (config.crop) {
      y0 = static_cast<std::size_t>(rng() % (h - oh + 1));
      x0 = static_cast<std::size_t>(rng() % (w - ow + 1));
    }
    double gain = 1.0, shift = 0.0;
    if (config.photometric) {
      gain = 1.0 + config.contrast * (2.0 * unit(rng) - 1.0);
      shift = config.brightness * (2.0 * unit(rng) - 1.0);
    }
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t sy = y0 + y, sx = x0 + (flip ? ow - 1 - x : x);
        for (std::size_t ch = 0; ch < c; ++ch) {
          double v = static_cast<double>(src[((b * c + ch) * h + sy) * w + sx]);
          if (config.photometric) v = std::clamp(0.5 + gain * (v - 0.5) + shift, 0.0, 1.0);
          out[((b * c + ch) * oh + y) * ow + x] = static_cast<Scalar>(v);
        }
        if (has_labels) lab[(b * oh + y) * ow + x] = labels.values[(b * h + sy) * w + sx];
      }
    }
  }
  images = Tensor::from_values({n, c, oh, ow}, std::move(out));
  if (has_labels) labels = LabelBatch{n, oh, ow, std::move(lab)};
}

std::optional<LossBreakdown> selftrain_run(ModelBundle& bundle, const DomainDataset& source,
                                           const std::vector<DomainDataset>& targets, PseudoLabelBank& bank,
                                           const TrainConfig& config, const SelfTrainOutputs& outputs) {
  if (config.iterations == 0) return std::nullopt;
  config.validate();
  const std::size_t m = bundle.num_targets();
  if (targets.size() != m) throw InvalidArgument("self-training: one target dataset per head expected");
  if (!source.labeled()) throw InvalidArgument("self-training needs a labeled source dataset");
  if (config.augment.crop && config.augment.crop_size % bundle.config().encoder.output_stride() != 0) {
    throw InvalidArgument("self-training: crop_size must be a multiple of the encoder output stride");
  }

  SgdMomentum opt(bundle.segmentation_parameters(), config.momentum, config.weight_decay);
  Rng data_rng(mix_seed(config.seed, 1)), aug_rng(mix_seed(config.seed, 2)), drop_rng(mix_seed(config.seed, 3));
  if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);
  if (outputs.metrics_csv) *outputs.metrics_csv << kMetricsCsvHeader << '\n';

  std::optional<LossBreakdown> last;
  char buf[512];
  for (std::size_t it = 0; it < config.iterations; ++it) {
    if (bank.due(it, config.refresh_period)) refresh_pseudo_labels(bundle, targets, bank, it);

    TrainBatch batch;
    const auto sidx = draw_indices(source.size(), config.batch_size, data_rng);
    batch.source_images = source.images(sidx);
    batch.source_labels = source.labels(sidx);
    augment_batch(batch.source_images, batch.source_labels, config.augment, aug_rng);
    for (std::size_t i = 0; i < m; ++i) {
      const auto idx = draw_indices(targets[i].size(), config.batch_size, data_rng);
      Tensor x = targets[i].images(idx);
      LabelBatch y = bank.gather(i, idx);
      augment_batch(x, y, config.augment, aug_rng);
      batch.target_images.push_back(std::move(x));
      batch.target_labels.push_back(std::move(y));
    }

    opt.zero_grad();
    ObjectiveResult step;
    try {
      step = total_objective(bundle, batch, config, &drop_rng);
    } catch (const NormalizationError& e) {
      // Softmax outputs only fail normalization once NaN or inf has entered.
      throw NonFiniteError("self-training produced non-finite predictions at iteration " + std::to_string(it) +
                           ": " + e.what());
    }
    auto& [total, bd] = step;
    if (!std::isfinite(bd.total)) {
      throw NonFiniteError("self-training loss is not finite at iteration " + std::to_string(it) +
                           " (seg " + std::to_string(bd.seg_source) + ", last finite total " +
                           (last ? std::to_string(last->total) : std::string("n/a")) + ")");
    }
    total.backward();
    opt.step(poly_learning_rate(config.learning_rate, it, config.iterations, config.poly_power));

    if (outputs.metrics_csv && it % config.log_every == 0) {
      for (std::size_t i = 0; i < m; ++i) {
        double sty = 0.0, cst = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          sty += bd.pl_sty[i][j];
          cst += bd.cst[i][j];
        }
        std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", it,
                      targets[i].domain_id, bd.total, bd.seg_source, bd.kd[i], bd.pl_rectified[i], sty, cst,
                      bd.mean_rect_weight[i]);
        *outputs.metrics_csv << buf;
      }
    }
    if (!config.checkpoint_dir.empty() && config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0) {
      std::snprintf(buf, sizeof buf, "ckpt_%06zu.coast", it + 1);
      save_checkpoint(bundle, config.checkpoint_dir / buf);
    }
    if (outputs.on_step) outputs.on_step(it + 1, bundle, bd);
    last = std::move(bd);
  }
  bundle.zero_grad();
  if (!config.checkpoint_dir.empty()) save_checkpoint(bundle, config.checkpoint_dir / "final.coast");
  return last;
}

TrainConfig Variant::apply(TrainConfig base) const {
  base.self_train_only = self_train_only;
  base.use_crossdonorm = use_crossdonorm;
  base.use_consistency = use_consistency;
  base.use_rectification = use_rectification;
  return base;
}

std::vector<Variant> ablation_variants() {
  return {
      {"i", true, false, false, false},
      {"ii", false, true, false, false},
      {"iii", false, true, true, false},
      {"iv", false, true, false, true},
      {"v", false, true, true, true},
  };
}

MetricsReport evaluate_targets(const ModelBundle& bundle, const std::vector<DomainDataset>& target_eval,
                               bool domain_heads) {
  MetricsReport report;
  for (std::size_t i = 0; i < target_eval.size(); ++i) {
    report.domains.push_back(evaluate(bundle, target_eval[i], domain_heads ? Head::domain(i) : Head::agnostic()));
  }
  return report;
}

namespace {

AblationRow score(const std::string& name, std::uint64_t seed, const ModelBundle& bundle, const Benchmark& bench) {
  AblationRow row{name, seed, 0.0, {}, 0.0};
  const MetricsReport report = evaluate_targets(bundle, bench.target_eval);
  for (const auto& d : report.domains) row.target_miou.push_back(d.iou.mean);
  row.avg_miou = report.average_miou();
  row.unseen_miou = evaluate(bundle, bench.unseen).iou.mean;
  return row;
}

}  // namespace

AblationResult run_ablation_suite(const AblationConfig& config, std::ostream* progress) {
  if (config.seeds.empty()) throw InvalidArgument("ablation: at least one seed is required");
  AblationResult result;
  const auto clock = std::chrono::steady_clock::now;
  const auto report = [&](AblationRow& row, std::chrono::steady_clock::time_point t0) {
    const double secs = std::chrono::duration<double>(clock() - t0).count();
    row.seconds = secs;
    if (!progress) return;
    char buf[160];
    std::snprintf(buf, sizeof buf, "seed %llu %-12s avg_mIoU %.4f unseen %.4f (%.1fs)\n",
                  static_cast<unsigned long long>(row.seed), row.variant.c_str(), row.avg_miou, row.unseen_miou, secs);
    *progress << buf << std::flush;
  };
  for (const auto seed : config.seeds) {
    auto t0 = clock();
    BenchmarkConfig data = config.data;
    data.seed = seed;
    const Benchmark bench = make_benchmark(data);
    ModelConfig model = config.model;
    model.classes = data.classes;
    model.num_targets = data.num_targets;
    model.seed = mix_seed(config.model.seed, seed);
    const ModelBundle init(model);
    WarmupConfig wc = config.warmup;
    wc.seed = mix_seed(config.warmup.seed, seed);

    if (config.run_source_only) {
      ModelBundle so = init.clone();
      source_only_run(so, bench.source, wc);
      result.baselines.push_back(score("source_only", seed, so, bench));
      report(result.baselines.back(), t0);
      t0 = clock();
    }
    ModelBundle warm = init.clone();
    warmup_run(warm, bench.source, bench.targets, wc);
    result.baselines.push_back(score("warmup", seed, warm, bench));
    report(result.baselines.back(), t0);

    for (const auto& v : config.variants) {
      t0 = clock();
      TrainConfig tc = v.apply(config.train);
      tc.seed = mix_seed(config.train.seed, seed);
      tc.checkpoint_dir.clear();
      ModelBundle b = warm.clone();
      PseudoLabelBank bank;
      selftrain_run(b, bench.source, bench.targets, bank, tc);
      result.variants.push_back(score(v.name, seed, b, bench));
      report(result.variants.back(), t0);
    }
  }
  return result;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& out) {
  const std::size_t m = rows.empty() ? 0 : rows.front().target_miou.size();
  out << "variant,seed,avg_miou";
  for (std::size_t i = 0; i < m; ++i) out << ",target_" << i + 1 << "_miou";
  out << ",unseen_miou\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.variant << ',' << r.seed;
    std::snprintf(buf, sizeof buf, ",%.17g", r.avg_miou);
    out << buf;
    for (auto v : r.target_miou) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", r.unseen_miou);
    out << buf;
  }
}

double median_score(const std::vector<AblationRow>& rows, const std::string& variant, bool unseen) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.variant == variant) v.push_back(unseen ? r.unseen_miou : r.avg_miou);
  }
  if (v.empty()) throw InvalidArgument("median_score: no rows for variant " + variant);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace coast
