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

#include "coast/warmup.hpp"

#include <cmath>
#include <cstdio>

#include "coast/errors.hpp"
#include "coast/losses.hpp"
#include "coast/ops.hpp"
#include "coast/optim.hpp"

namespace coast {

void WarmupConfig::validate() const {
  if (!(lambda_adv >= 0)) throw InvalidArgument("warmup: lambda_adv must be >= 0");
  if (iterations == 0) throw InvalidArgument("warmup: iterations must be > 0");
  if (batch_size == 0) throw InvalidArgument("warmup: batch_size must be > 0");
  if (!(seg_learning_rate > 0) || !(disc_learning_rate > 0)) throw InvalidArgument("warmup: learning rates must be > 0");
  if (momentum < 0 || momentum >= 1) throw InvalidArgument("warmup: momentum must be in [0,1)");
  if (poly_power < 0) throw InvalidArgument("warmup: poly_power must be >= 0");
}

Tensor discriminator_loss(const ModelBundle& bundle, const Tensor& p_src, const Tensor& p_tgt, std::size_t domain) {
  require_normalized(p_src, "discriminator_loss source");
  require_normalized(p_tgt, "discriminator_loss target");
  return bce_with_logits(bundle.discriminate(p_src, domain), 1) + bce_with_logits(bundle.discriminate(p_tgt, domain), 0);
}

GeneratorLoss generator_loss(const ModelBundle& bundle, const Tensor& x_src, const LabelBatch& y_src,
                             const Tensor& x_tgt, std::size_t domain, double lambda_adv,
                             const ForwardContext& src_ctx, const ForwardContext& tgt_ctx) {
  if (domain >= bundle.num_targets()) throw InvalidArgument("generator_loss: unknown domain " + std::to_string(domain));
  if (lambda_adv < 0) throw InvalidArgument("generator_loss: lambda_adv must be >= 0");
  GeneratorLoss out;
  out.p_src = bundle.forward(x_src, Head::domain(domain), {}, src_ctx);
  out.seg = cross_entropy(out.p_src, y_src);
  out.p_tgt = bundle.forward(x_tgt, Head::domain(domain), {}, tgt_ctx);
  out.adv = bce_with_logits(bundle.discriminate(out.p_tgt, domain), 1);
  out.total = out.seg + out.adv * static_cast<Scalar>(lambda_adv);
  return out;
}

void write_warmup_csv(const std::vector<WarmupLogRow>& log, std::ostream& out) {
  out << "iteration,domain_id,seg_loss,adv_loss,disc_loss,learning_rate\n";
  char buf[256];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g,%.17g,%.17g\n", r.iteration, r.domain_id, r.seg_loss,
                  r.adv_loss, r.disc_loss, r.learning_rate);
    out << buf;
  }
}

std::vector<std::size_t> draw_indices(std::size_t count, std::size_t batch, Rng& rng) {
  if (count == 0) throw InvalidArgument("cannot draw from an empty dataset");
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = static_cast<std::size_t>(rng() % count);
  return idx;
}

namespace {

void require_finite(double v, const char* what, std::size_t iteration, int domain_id) {
  if (!std::isfinite(v)) {
    throw NonFiniteError(std::string("warm-up ") + what + " is not finite at iteration " + std::to_string(iteration) +
                         " for domain " + std::to_string(domain_id));
  }
}

std::vector<WarmupLogRow> run(ModelBundle& bundle, const DomainDataset& source,
                              const std::vector<DomainDataset>* targets, const WarmupConfig& config) {
  if (config.iterations == 0) return {};
  config.validate();
  if (!source.labeled()) throw InvalidArgument("warm-up needs a labeled source dataset");
  const std::size_t m = bundle.num_targets();
  if (targets && targets->size() != m) throw InvalidArgument("warm-up: one target dataset per head expected");

  SgdMomentum seg_opt(bundle.segmentation_parameters(), config.momentum, config.weight_decay);
  Adam disc_opt(bundle.discriminator_parameters());
  Rng src_rng(mix_seed(config.seed, 1));
  std::vector<Rng> tgt_rngs;
  for (std::size_t i = 0; i < m; ++i) tgt_rngs.emplace_back(mix_seed(config.seed, 10 + i));

  std::vector<WarmupLogRow> log;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const double lr = poly_learning_rate(config.seg_learning_rate, it, config.iterations, config.poly_power);
    const double dlr = poly_learning_rate(config.disc_learning_rate, it, config.iterations, config.poly_power);
    for (std::size_t i = 0; i < m; ++i) {
      const auto sidx = draw_indices(source.size(), config.batch_size, src_rng);
      const Tensor xs = source.images(sidx);
      const LabelBatch ys = source.labels(sidx);
      const ForwardContext sctx{true, &src_rng};
      WarmupLogRow row{it, targets ? (*targets)[i].domain_id : static_cast<int>(i + 1), 0, 0, 0, lr};

      seg_opt.zero_grad();
      disc_opt.zero_grad();
      const Tensor zs = bundle.features(xs, {}, sctx);
      const Tensor p_src = bundle.classifier(Head::domain(i)).probs(zs);
      Tensor gen = cross_entropy(p_src, ys);
      row.seg_loss = static_cast<double>(gen.item());
      gen = gen + cross_entropy(bundle.agnostic.probs(zs), ys);
      Tensor p_tgt;
      if (targets) {
        const auto& tds = (*targets)[i];
        const Tensor xt = tds.images(draw_indices(tds.size(), config.batch_size, tgt_rngs[i]));
        p_tgt = bundle.forward(xt, Head::domain(i), {}, ForwardContext{true, &tgt_rngs[i]});
        const Tensor adv = bce_with_logits(bundle.discriminate(p_tgt, i), 1);
        row.adv_loss = static_cast<double>(adv.item());
        gen = gen + adv * static_cast<Scalar>(config.lambda_adv);
      }
      require_finite(static_cast<double>(gen.item()), "generator loss", it, row.domain_id);
      gen.backward();
      seg_opt.step(lr);

      if (targets) {
        disc_opt.zero_grad();
        const Tensor dl = discriminator_loss(bundle, p_src.detach(), p_tgt.detach(), i);
        row.disc_loss = static_cast<double>(dl.item());
        require_finite(row.disc_loss, "discriminator loss", it, row.domain_id);
        dl.backward();
        disc_opt.step(dlr);
      }
      log.push_back(row);
    }
  }
  bundle.zero_grad();
  return log;
}

}  // namespace

std::vector<WarmupLogRow> warmup_run(ModelBundle& bundle, const DomainDataset& source,
                                     const std::vector<DomainDataset>& targets, const WarmupConfig& config) {
  if (targets.empty()) throw InvalidArgument("warm-up needs at least one target domain");
  return run(bundle, source, &targets, config);
}

std::vector<WarmupLogRow> source_only_run(ModelBundle& bundle, const DomainDataset& source,
                                          const WarmupConfig& config) {
  return run(bundle, source, nullptr, config);
}

}  // namespace coast
