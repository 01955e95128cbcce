#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "beambind/errors.hpp"

namespace bb {

inline constexpr std::uint32_t kUnlabeledId = 0;
inline constexpr std::int32_t kNoBeam = -1;

// Per-point scan data. All arrays share the same length. `origin_index`
// is the row in the parent clean cloud (identity for clean clouds); it is
// what keeps clean/augmented branches in correspondence after corruption.
struct PointCloud {
  std::vector<std::array<float, 3>> xyz;
  std::vector<float> intensity;
  std::vector<std::uint32_t> label;
  std::vector<std::int32_t> beam;  // kNoBeam until assigned
  std::vector<std::uint32_t> origin_index;

  std::size_t size() const { return xyz.size(); }
  bool empty() const { return xyz.empty(); }

  bool has_beams() const {
    for (std::int32_t b : beam) {
      if (b < 0) return false;
    }
    return beam.size() == xyz.size();
  }

  void reserve(std::size_t n) {
    xyz.reserve(n);
    intensity.reserve(n);
    label.reserve(n);
    beam.reserve(n);
    origin_index.reserve(n);
  }

  void push_point(const std::array<float, 3>& p, float inten, std::uint32_t lbl,
                  std::int32_t beam_id, std::uint32_t origin) {
    xyz.push_back(p);
    intensity.push_back(inten);
    label.push_back(lbl);
    beam.push_back(beam_id);
    origin_index.push_back(origin);
  }
};

inline void check_consistent(const PointCloud& cloud) {
  const std::size_t n = cloud.xyz.size();
  if (cloud.intensity.size() != n || cloud.label.size() != n || cloud.beam.size() != n ||
      cloud.origin_index.size() != n) {
    throw DataError("point cloud per-point arrays disagree in length");
  }
}

// Makes a clean cloud skeleton with identity origin indices and no beams.
inline PointCloud make_clean_cloud(std::size_t n) {
  PointCloud c;
  c.xyz.resize(n, {0.f, 0.f, 0.f});
  c.intensity.resize(n, 0.f);
  c.label.resize(n, kUnlabeledId);
  c.beam.resize(n, kNoBeam);
  c.origin_index.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.origin_index[i] = static_cast<std::uint32_t>(i);
  return c;
}

inline double point_range(const std::array<float, 3>& p) {
  return std::sqrt(double(p[0]) * p[0] + double(p[1]) * p[1] + double(p[2]) * p[2]);
}

// Elevation angle above the sensor's horizontal plane, radians.
inline double point_pitch(const std::array<float, 3>& p) {
  const double horiz = std::sqrt(double(p[0]) * p[0] + double(p[1]) * p[1]);
  return std::atan2(double(p[2]), horiz);
}

inline double point_azimuth(const std::array<float, 3>& p) {
  return std::atan2(double(p[1]), double(p[0]));
}

inline constexpr double kDegToRad = 0.017453292519943295;
inline constexpr double kRadToDeg = 57.29577951308232;

}  // namespace bb
