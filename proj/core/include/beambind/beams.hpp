#pragma once

#include <vector>

#include "beambind/point_cloud.hpp"

namespace bb {

enum class BeamMethod { kUniformPitch, kSortedCluster, kPassthrough };

struct BeamConfig {
  int n_beams = 64;
  BeamMethod method = BeamMethod::kSortedCluster;
  double pitch_min_deg = -25.0;  // uniform-pitch bin range
  double pitch_max_deg = 3.0;
};

// Returns a copy of the cloud with beam ∈ [0, n_beams) on every point;
// xyz/intensity/label/origin_index are untouched. uniform-pitch bins the
// elevation angle into equal-width bins (out-of-range pitches clamp to the
// end bins); sorted-cluster runs deterministic 1-D k-means on pitch with
// farthest-point initialization and numbers clusters by ascending center;
// passthrough validates the existing assignment.
PointCloud assign_beams(const PointCloud& cloud, const BeamConfig& cfg);

PointCloud assign_beams_if_missing(const PointCloud& cloud, const BeamConfig& cfg);

// Deterministic weighted 1-D k-means used by sorted-cluster; exposed for
// tests. Values need not be sorted. Returns one cluster index per value,
// with clusters numbered by ascending center; ties in the nearest-center
// rule break toward the lower cluster.
std::vector<int> cluster_1d(const std::vector<double>& values, int k);

}  // namespace bb
