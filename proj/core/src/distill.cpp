#include "beambind/distill.hpp"

#include <algorithm>

#include "beambind/errors.hpp"

namespace bb {
namespace {

// Member rows per group, sorted by origin_index for an order-free sum.
std::map<GroupKey, std::vector<std::size_t>> group_rows(const PointCloud& cloud,
                                                        const std::set<std::uint32_t>& classes,
                                                        bool collapse_beam) {
  std::map<GroupKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!classes.count(cloud.label[i])) continue;
    const std::int32_t beam = collapse_beam ? kCollapsedBeam : cloud.beam[i];
    if (!collapse_beam && beam < 0) throw DataError("beam-wise grouping needs beams assigned");
    groups[GroupKey{cloud.label[i], beam}].push_back(i);
  }
  for (auto& [key, rows] : groups) {
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return cloud.origin_index[a] < cloud.origin_index[b];
    });
  }
  return groups;
}

std::vector<double> mean_rows(const Mat& m, const std::vector<std::size_t>& rows) {
  std::vector<double> mean(m.cols, 0.0);
  for (std::size_t r : rows) {
    const double* src = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) mean[c] += src[c];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& x : mean) x *= inv;
  return mean;
}

std::set<std::uint32_t> class_filter(const Taxonomy& tax, bool things_only) {
  std::set<std::uint32_t> out;
  for (std::uint32_t id : things_only ? tax.things_classes() : tax.evaluated_ids()) {
    out.insert(id);
  }
  return out;
}

}  // namespace

std::map<GroupKey, GroupStat> beam_class_means(const ForwardTrace& trace, const PointCloud& cloud,
                                               const std::set<std::uint32_t>& classes) {
  if (trace.features.rows != cloud.size()) {
    throw DataError("trace and cloud disagree on point count");
  }
  std::map<GroupKey, GroupStat> out;
  for (const auto& [key, rows] : group_rows(cloud, classes, /*collapse_beam=*/false)) {
    out[key] = GroupStat{mean_rows(trace.features, rows), rows.size()};
  }
  return out;
}

BfdResult bfd_loss(const ForwardTrace& trace_clean, const PointCloud& cloud_clean,
                   const ForwardTrace& trace_aug, const PointCloud& cloud_aug, const Taxonomy& tax,
                   BfdMode mode, bool freeze_clean) {
  if (trace_clean.features.rows != cloud_clean.size() ||
      trace_aug.features.rows != cloud_aug.size()) {
    throw DataError("trace and cloud disagree on point count");
  }
  const std::size_t n_clean = cloud_clean.size();
  for (std::uint32_t o : cloud_aug.origin_index) {
    if (o >= n_clean) {
      throw DataError("augmented cloud origin_index " + std::to_string(o) +
                      " is outside the clean cloud");
    }
  }
  const std::size_t dim = trace_clean.features.cols;

  BfdResult res;
  res.d_clean_features = Mat(cloud_clean.size(), dim);
  res.d_aug_features = Mat(cloud_aug.size(), dim);

  if (mode == BfdMode::kPointWiseThings) {
    const std::set<std::uint32_t> things = class_filter(tax, true);
    // Terms accumulate in origin order for permutation-stable sums.
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < cloud_aug.size(); ++i) {
      if (things.count(cloud_aug.label[i])) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cloud_aug.origin_index[a] < cloud_aug.origin_index[b];
    });
    for (std::size_t i : order) {
      const std::size_t o = cloud_aug.origin_index[i];
      const double* fc = trace_clean.features.row(o);
      const double* fa = trace_aug.features.row(i);
      double* dc = res.d_clean_features.row(o);
      double* da = res.d_aug_features.row(i);
      for (std::size_t c = 0; c < dim; ++c) {
        const double diff = fc[c] - fa[c];
        res.loss += diff * diff;
        dc[c] += 2.0 * diff;
        da[c] -= 2.0 * diff;
      }
      ++res.groups_used;
    }
  } else {
    const bool things_only = mode != BfdMode::kBeamWiseAll;
    const bool collapse = mode == BfdMode::kBeamAllThings;
    const std::set<std::uint32_t> classes = class_filter(tax, things_only);

    const auto clean_groups = group_rows(cloud_clean, classes, collapse);
    const auto aug_groups = group_rows(cloud_aug, classes, collapse);

    // Groups empty in either branch contribute no term.
    for (const auto& [key, clean_rows] : clean_groups) {
      auto it = aug_groups.find(key);
      if (it == aug_groups.end()) continue;
      const auto& aug_rows = it->second;

      const std::vector<double> u = mean_rows(trace_clean.features, clean_rows);
      const std::vector<double> w = mean_rows(trace_aug.features, aug_rows);

      std::vector<double> diff(dim);
      for (std::size_t c = 0; c < dim; ++c) {
        diff[c] = u[c] - w[c];
        res.loss += diff[c] * diff[c];
      }
      const double inv_clean = 1.0 / static_cast<double>(clean_rows.size());
      const double inv_aug = 1.0 / static_cast<double>(aug_rows.size());
      for (std::size_t r : clean_rows) {
        double* d = res.d_clean_features.row(r);
        for (std::size_t c = 0; c < dim; ++c) d[c] += 2.0 * diff[c] * inv_clean;
      }
      for (std::size_t r : aug_rows) {
        double* d = res.d_aug_features.row(r);
        for (std::size_t c = 0; c < dim; ++c) d[c] -= 2.0 * diff[c] * inv_aug;
      }
      ++res.groups_used;
    }
  }

  if (freeze_clean) {
    std::fill(res.d_clean_features.v.begin(), res.d_clean_features.v.end(), 0.0);
  }
  return res;
}

}  // namespace bb
