#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "beambind/featnet.hpp"
#include "beambind/point_cloud.hpp"
#include "beambind/taxonomy.hpp"

namespace bb {

// (class, beam) group index. beam == kCollapsedBeam marks per-class groups
// with the beam dimension collapsed.
struct GroupKey {
  std::uint32_t class_id = 0;
  std::int32_t beam = 0;
  auto operator<=>(const GroupKey&) const = default;
};

inline constexpr std::int32_t kCollapsedBeam = -1;

struct GroupStat {
  std::vector<double> mean;  // feature-space mean, dim D
  std::size_t count = 0;
};

// Arithmetic mean of per-point features (pre-projector) over every nonempty
// (class, beam) group whose class is in `classes`. Group sums accumulate in
// origin_index order, so the result is permutation invariant. Requires beams
// assigned.
std::map<GroupKey, GroupStat> beam_class_means(const ForwardTrace& trace, const PointCloud& cloud,
                                               const std::set<std::uint32_t>& classes);

enum class BfdMode { kBeamWiseThings, kBeamWiseAll, kPointWiseThings, kBeamAllThings };

struct BfdResult {
  double loss = 0.0;
  Mat d_clean_features;  // one row per clean point
  Mat d_aug_features;    // one row per augmented point
  std::size_t groups_used = 0;
};

// Beam-wise modes sum squared distances between clean and augmented group
// means over groups nonempty in both branches; point-wise matches surviving
// augmented points against their clean counterparts via origin_index;
// beam-all collapses the beam dimension. Gradients flow into both branches
// unless freeze_clean is set (teacher-style distillation).
BfdResult bfd_loss(const ForwardTrace& trace_clean, const PointCloud& cloud_clean,
                   const ForwardTrace& trace_aug, const PointCloud& cloud_aug, const Taxonomy& tax,
                   BfdMode mode, bool freeze_clean = false);

}  // namespace bb
