#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "beambind/beams.hpp"
#include "beambind/corrupt.hpp"
#include "beambind/distill.hpp"
#include "beambind/eval.hpp"
#include "beambind/featnet.hpp"
#include "beambind/point_cloud.hpp"
#include "beambind/prototypes.hpp"
#include "beambind/taxonomy.hpp"

namespace bb {

struct LossWeights {
  double aug = 0.5;
  double fb = 0.5;
  double bfd = 0.1;
};

enum class GuidanceSource { kEntropy, kLoss };

struct TrainConfig {
  int epochs = 1;
  int batch_size = 1;  // scans per optimizer step
  double learning_rate = 0.24;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;

  NetConfig net;          // n_classes filled from the taxonomy by train()
  BeamConfig beams;
  CorruptConfig corrupt;
  LossWeights weights;

  FbVariant fb_variant = FbVariant::kSuperclass;
  bool fb_literal_eq3 = false;
  BfdMode bfd_mode = BfdMode::kBeamWiseThings;
  bool bfd_freeze_clean = false;
  double ema_momentum = 0.9;
  // Default pipeline order is bank update first, then FB against the
  // updated bank; setting this computes FB before the update.
  bool fb_before_bank_update = false;
  GuidanceSource guidance = GuidanceSource::kEntropy;

  int eval_every = 0;  // epochs between eval passes; 0 = final epoch only
};

struct LossBreakdown {
  double clean = 0.0;
  double aug = 0.0;
  double fb = 0.0;
  double bfd = 0.0;
  double total = 0.0;
};

struct CeResult {
  double loss = 0.0;
  Mat d_logits;
  std::size_t contributing = 0;
};

// Mean softmax cross-entropy over non-ignored points (zero when none).
CeResult cross_entropy(const ForwardTrace& trace, const PointCloud& cloud, const Taxonomy& tax);

// Per-scan corruption seeds derive from (corrupt.seed, step, scan position).
struct BatchGrads {
  LossBreakdown losses;  // means over the batch
  Grads grads;
};

// Loss and gradient assembly over one batch of clean scans. With
// mutable_bank set the bank receives its per-scan EMA updates while the
// batch is processed; pass nullptr to probe against a frozen bank.
BatchGrads compute_batch(const NetParams& params, const PrototypeBank& bank,
                         PrototypeBank* mutable_bank, const std::vector<PointCloud>& batch,
                         const TrainConfig& cfg, const Taxonomy& tax, std::uint64_t step);

// Full step: compute_batch with bank updates, then an SGD update on the
// mean gradients. Throws NumericError with the component losses on a
// non-finite total.
LossBreakdown train_step(NetParams& params, PrototypeBank& bank,
                         const std::vector<PointCloud>& batch, const TrainConfig& cfg,
                         const Taxonomy& tax, std::uint64_t step);

struct EvalSummary {
  double miou = 0.0;
  std::optional<double> things_miou;
  std::optional<double> stuff_miou;
};

struct TrainLogEntry {
  int epoch = 0;
  LossBreakdown losses;  // mean over the epoch's steps
  std::optional<EvalSummary> eval;
};

struct TrainResult {
  NetParams params;
  PrototypeBank bank;
  std::vector<TrainLogEntry> log;
};

// Deterministic for a fixed config: fixed shuffling, fixed reduction orders.
TrainResult train(const TrainConfig& cfg, const std::vector<PointCloud>& train_clouds,
                  const Taxonomy& tax, const std::vector<PointCloud>* eval_clouds = nullptr);

}  // namespace bb
