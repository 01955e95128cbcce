#include "beambind/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "beambind/errors.hpp"
#include "beambind/rng.hpp"

namespace bb {

CeResult cross_entropy(const ForwardTrace& trace, const PointCloud& cloud, const Taxonomy& tax) {
  if (trace.logits.rows != cloud.size()) {
    throw DataError("trace and cloud disagree on point count");
  }
  CeResult res;
  res.d_logits = Mat(trace.logits.rows, trace.logits.cols);
  if (cloud.size() == 0) return res;

  const Mat probs = softmax(trace.logits);
  std::vector<std::size_t> targets(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::uint32_t lbl = cloud.label[i];
    if (!tax.knows(lbl)) {
      throw DataError("cloud label " + std::to_string(lbl) + " is not in the taxonomy");
    }
    if (tax.is_ignored(lbl)) {
      targets[i] = static_cast<std::size_t>(-1);
      continue;
    }
    targets[i] = tax.evaluated_index(lbl);
    ++res.contributing;
  }
  if (res.contributing == 0) return res;

  const double inv_m = 1.0 / static_cast<double>(res.contributing);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (targets[i] == static_cast<std::size_t>(-1)) continue;
    const double* p = probs.row(i);
    double* d = res.d_logits.row(i);
    res.loss -= std::log(std::max(p[targets[i]], 1e-300));
    for (std::size_t c = 0; c < trace.logits.cols; ++c) {
      d[c] = (p[c] - (c == targets[i] ? 1.0 : 0.0)) * inv_m;
    }
  }
  res.loss *= inv_m;
  return res;
}

namespace {

Mat scaled(const Mat& m, double s) {
  Mat out = m;
  for (double& x : out.v) x *= s;
  return out;
}

std::vector<double> per_point_ce_loss(const ForwardTrace& trace, const PointCloud& cloud,
                                      const Taxonomy& tax) {
  const Mat probs = softmax(trace.logits);
  std::vector<double> loss(cloud.size(), 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::uint32_t lbl = cloud.label[i];
    if (tax.is_ignored(lbl)) continue;
    loss[i] = -std::log(std::max(probs.at(i, tax.evaluated_index(lbl)), 1e-300));
  }
  return loss;
}

}  // namespace

BatchGrads compute_batch(const NetParams& params, const PrototypeBank& bank,
                         PrototypeBank* mutable_bank, const std::vector<PointCloud>& batch,
                         const TrainConfig& cfg, const Taxonomy& tax, std::uint64_t step) {
  if (batch.empty()) throw ConfigError("train step needs a non-empty batch");

  BatchGrads out;
  out.grads = zero_grads_like(params);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const PointCloud clean = assign_beams_if_missing(batch[s], cfg.beams);
    const ForwardTrace tr_clean = forward(params, clean);
    const CeResult ce_clean = cross_entropy(tr_clean, clean, tax);

    // Corruption is data generation: the drop selection is not differentiated
    // even when guided by the clean forward pass.
    std::vector<double> guide;
    if (cfg.corrupt.drop_policy == DropPolicy::kLossGuided) {
      guide = cfg.guidance == GuidanceSource::kEntropy
                  ? softmax_entropy(tr_clean.logits)
                  : per_point_ce_loss(tr_clean, clean, tax);
    }
    CorruptConfig ccfg = cfg.corrupt;
    ccfg.seed = mix_seed(cfg.corrupt.seed, step, s);
    const PointCloud aug = corrupt(clean, ccfg, guide.empty() ? nullptr : &guide);

    const ForwardTrace tr_aug = forward(params, aug);
    const CeResult ce_aug = cross_entropy(tr_aug, aug, tax);

    const PrototypeBank* fb_bank = mutable_bank ? mutable_bank : &bank;
    FbResult fb;
    if (cfg.fb_before_bank_update) {
      fb = fb_loss(*fb_bank, tax, tr_aug, aug, cfg.fb_variant, cfg.fb_literal_eq3);
      if (mutable_bank) update_bank(*mutable_bank, tr_clean, clean, tax);
    } else {
      if (mutable_bank) update_bank(*mutable_bank, tr_clean, clean, tax);
      fb = fb_loss(*fb_bank, tax, tr_aug, aug, cfg.fb_variant, cfg.fb_literal_eq3);
    }

    const BfdResult bfd =
        bfd_loss(tr_clean, clean, tr_aug, aug, tax, cfg.bfd_mode, cfg.bfd_freeze_clean);

    Cotangents cot_clean;
    cot_clean.d_logits = ce_clean.d_logits;
    cot_clean.d_features = scaled(bfd.d_clean_features, cfg.weights.bfd);
    Cotangents cot_aug;
    cot_aug.d_logits = scaled(ce_aug.d_logits, cfg.weights.aug);
    cot_aug.d_projections = scaled(fb.d_projections, cfg.weights.fb);
    cot_aug.d_features = scaled(bfd.d_aug_features, cfg.weights.bfd);

    const Grads g_clean = backward(params, tr_clean, cot_clean);
    const Grads g_aug = backward(params, tr_aug, cot_aug);
    add_scaled(out.grads, g_clean, inv_b);
    add_scaled(out.grads, g_aug, inv_b);

    out.losses.clean += ce_clean.loss * inv_b;
    out.losses.aug += ce_aug.loss * inv_b;
    out.losses.fb += fb.loss * inv_b;
    out.losses.bfd += bfd.loss * inv_b;
  }

  out.losses.total = out.losses.clean + cfg.weights.aug * out.losses.aug +
                     cfg.weights.fb * out.losses.fb + cfg.weights.bfd * out.losses.bfd;
  return out;
}

LossBreakdown train_step(NetParams& params, PrototypeBank& bank,
                         const std::vector<PointCloud>& batch, const TrainConfig& cfg,
                         const Taxonomy& tax, std::uint64_t step) {
  BatchGrads bg = compute_batch(params, bank, &bank, batch, cfg, tax, step);
  if (!std::isfinite(bg.losses.total)) {
    std::ostringstream ss;
    ss << "non-finite loss at step " << step << " (clean=" << bg.losses.clean
       << " aug=" << bg.losses.aug << " fb=" << bg.losses.fb << " bfd=" << bg.losses.bfd << ")";
    throw NumericError(ss.str());
  }
  sgd_step(params, bg.grads, cfg.learning_rate, cfg.weight_decay);
  return bg.losses;
}

TrainResult train(const TrainConfig& cfg, const std::vector<PointCloud>& train_clouds,
                  const Taxonomy& tax, const std::vector<PointCloud>* eval_clouds) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (train_clouds.empty()) throw ConfigError("training needs at least one scan");
  validate(cfg.corrupt);

  NetConfig net_cfg = cfg.net;
  net_cfg.n_classes = static_cast<int>(tax.n_evaluated());
  net_cfg.n_beams = cfg.beams.n_beams;

  TrainResult result;
  result.params = init_params(net_cfg, cfg.seed);
  result.bank = make_bank(tax, net_cfg.proj_dim, cfg.ema_momentum);

  // Beam assignment does not depend on training state; do it once.
  std::vector<PointCloud> scans;
  scans.reserve(train_clouds.size());
  for (const auto& c : train_clouds) scans.push_back(assign_beams_if_missing(c, cfg.beams));

  TrainConfig step_cfg = cfg;
  step_cfg.net = net_cfg;

  std::vector<std::size_t> order(scans.size());
  std::iota(order.begin(), order.end(), 0);

  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 0x5F0Full, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    LossBreakdown epoch_losses;
    std::size_t steps_in_epoch = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<PointCloud> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(scans[order[i]]);
      const LossBreakdown losses =
          train_step(result.params, result.bank, batch, step_cfg, tax, step++);
      epoch_losses.clean += losses.clean;
      epoch_losses.aug += losses.aug;
      epoch_losses.fb += losses.fb;
      epoch_losses.bfd += losses.bfd;
      epoch_losses.total += losses.total;
      ++steps_in_epoch;
    }
    const double inv = 1.0 / static_cast<double>(steps_in_epoch);
    epoch_losses.clean *= inv;
    epoch_losses.aug *= inv;
    epoch_losses.fb *= inv;
    epoch_losses.bfd *= inv;
    epoch_losses.total *= inv;

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.losses = epoch_losses;
    const bool do_eval =
        eval_clouds && !eval_clouds->empty() &&
        (epoch == cfg.epochs || (cfg.eval_every > 0 && epoch % cfg.eval_every == 0));
    if (do_eval) {
      const EvalReport rep = evaluate(result.params, *eval_clouds, tax, cfg.beams);
      entry.eval = EvalSummary{rep.miou, rep.things_miou, rep.stuff_miou};
    }
    result.log.push_back(entry);
  }
  return result;
}

}  // namespace bb
