#pragma once

#include <cstdint>
#include <vector>

#include "beambind/point_cloud.hpp"

namespace bb {

enum class DropPolicy { kNone, kUniform, kBeamBurst, kLossGuided };

struct CorruptConfig {
  double jitter_sigma = 0.0;     // meters
  double jitter_fraction = 1.0;  // probability a point is jittered
  DropPolicy drop_policy = DropPolicy::kNone;
  double drop_rate = 0.0;        // [0, 1)
  int beam_burst_span = 8;       // consecutive-azimuth run length
  std::uint64_t seed = 0;
};

void validate(const CorruptConfig& cfg);

// Adds i.i.d. Gaussian noise (std = jitter_sigma) to the xyz of a random
// subset of points (jitter_fraction); everything else is carried through.
// Deterministic per cfg.seed.
PointCloud jitter(const PointCloud& cloud, const CorruptConfig& cfg);

// Returns the surviving sub-cloud; survivors keep all fields, and their
// origin_index rows still point into the input's parent cloud. loss-guided
// removes the top drop_rate*N points by guidance score; beam-burst removes
// whole consecutive-azimuth runs inside randomly chosen beams until the
// target rate is met; uniform drops each point independently.
PointCloud drop(const PointCloud& cloud, const CorruptConfig& cfg,
                const std::vector<double>* guidance = nullptr);

// jitter followed by drop, the augmentation used by the training pipeline.
PointCloud corrupt(const PointCloud& cloud, const CorruptConfig& cfg,
                   const std::vector<double>* guidance = nullptr);

}  // namespace bb
