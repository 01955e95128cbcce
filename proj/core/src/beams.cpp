#include "beambind/beams.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "beambind/errors.hpp"

namespace bb {
namespace {

// Works on distinct values with multiplicities, so the result is invariant
// under any permutation of the input.
struct DistinctValues {
  std::vector<double> value;
  std::vector<std::size_t> weight;
};

DistinctValues collapse(const std::vector<double>& values) {
  std::map<double, std::size_t> counts;
  for (double v : values) ++counts[v];
  DistinctValues out;
  out.value.reserve(counts.size());
  out.weight.reserve(counts.size());
  for (const auto& [v, w] : counts) {
    out.value.push_back(v);
    out.weight.push_back(w);
  }
  return out;
}

// Farthest-point seeding starting from the minimum value; distance ties pick
// the smallest value.
std::vector<double> seed_centers(const DistinctValues& dv, int k) {
  std::vector<double> centers{dv.value.front()};
  std::vector<double> dist(dv.value.size());
  while (static_cast<int>(centers.size()) < k) {
    double best_d = -1.0;
    double best_v = dv.value.front();
    for (std::size_t i = 0; i < dv.value.size(); ++i) {
      double d = std::abs(dv.value[i] - centers.front());
      for (double c : centers) d = std::min(d, std::abs(dv.value[i] - c));
      if (d > best_d) {
        best_d = d;
        best_v = dv.value[i];
      }
    }
    centers.push_back(best_v);
  }
  std::sort(centers.begin(), centers.end());
  return centers;
}

int nearest_center(const std::vector<double>& centers, double v) {
  int best = 0;
  double best_d = std::abs(v - centers[0]);
  for (int j = 1; j < static_cast<int>(centers.size()); ++j) {
    const double d = std::abs(v - centers[j]);
    if (d < best_d) {  // ties keep the lower cluster
      best_d = d;
      best = j;
    }
  }
  return best;
}

}  // namespace

std::vector<int> cluster_1d(const std::vector<double>& values, int k) {
  if (k < 1) throw ConfigError("cluster_1d needs k >= 1");
  if (values.empty()) return {};

  const DistinctValues dv = collapse(values);
  std::vector<double> centers = seed_centers(dv, k);

  std::vector<int> assign(dv.value.size(), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < dv.value.size(); ++i) {
      const int a = nearest_center(centers, dv.value[i]);
      if (a != assign[i]) {
        assign[i] = a;
        changed = true;
      }
    }
    std::vector<double> sum(centers.size(), 0.0);
    std::vector<std::size_t> cnt(centers.size(), 0);
    for (std::size_t i = 0; i < dv.value.size(); ++i) {
      sum[assign[i]] += dv.value[i] * static_cast<double>(dv.weight[i]);
      cnt[assign[i]] += dv.weight[i];
    }
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (cnt[j] > 0) centers[j] = sum[j] / static_cast<double>(cnt[j]);
    }
    // Centers stay sorted in 1-D Lloyd iterations started from sorted seeds.
    if (!changed && iter > 0) break;
  }

  std::map<double, int> cluster_of_value;
  for (std::size_t i = 0; i < dv.value.size(); ++i) cluster_of_value[dv.value[i]] = assign[i];
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(cluster_of_value.at(v));
  return out;
}

PointCloud assign_beams(const PointCloud& cloud, const BeamConfig& cfg) {
  check_consistent(cloud);
  if (cfg.n_beams < 1) throw ConfigError("n_beams must be >= 1");

  PointCloud out = cloud;
  const std::size_t n = cloud.size();

  if (cfg.method == BeamMethod::kPassthrough) {
    for (std::size_t i = 0; i < n; ++i) {
      if (cloud.beam[i] < 0 || cloud.beam[i] >= cfg.n_beams) {
        throw DataError("passthrough beam assignment needs beam ids in [0, n_beams) on every "
                        "point");
      }
    }
    return out;
  }

  if (n == 0) return out;

  bool any_off_origin = false;
  std::vector<double> pitch(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = cloud.xyz[i];
    if (p[0] != 0.f || p[1] != 0.f || p[2] != 0.f) any_off_origin = true;
    pitch[i] = point_pitch(p);
  }
  if (!any_off_origin) {
    throw DataError("cannot assign beams: every point sits at the sensor origin");
  }

  if (cfg.method == BeamMethod::kUniformPitch) {
    if (!(cfg.pitch_min_deg < cfg.pitch_max_deg)) {
      throw ConfigError("uniform-pitch needs pitch_min_deg < pitch_max_deg");
    }
    const double lo = cfg.pitch_min_deg * kDegToRad;
    const double hi = cfg.pitch_max_deg * kDegToRad;
    const double width = (hi - lo) / cfg.n_beams;
    for (std::size_t i = 0; i < n; ++i) {
      int bin = static_cast<int>(std::floor((pitch[i] - lo) / width));
      bin = std::clamp(bin, 0, cfg.n_beams - 1);
      out.beam[i] = bin;
    }
    return out;
  }

  const std::vector<int> clusters = cluster_1d(pitch, cfg.n_beams);
  for (std::size_t i = 0; i < n; ++i) out.beam[i] = clusters[i];
  return out;
}

PointCloud assign_beams_if_missing(const PointCloud& cloud, const BeamConfig& cfg) {
  if (cloud.has_beams()) return cloud;
  return assign_beams(cloud, cfg);
}

}  // namespace bb
