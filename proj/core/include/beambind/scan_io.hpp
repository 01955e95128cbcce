#pragma once

#include <filesystem>
#include <optional>

#include "beambind/point_cloud.hpp"

namespace bb {

// On-disk layout: scans are little-endian float32 quadruples (x, y, z,
// intensity); labels are one little-endian uint32 per point with the
// semantic id in the low 16 bits. Without a label file every point gets
// the unlabeled sentinel. origin_index comes back as 0..N-1, beams unset.
PointCloud read_scan(const std::filesystem::path& scan_path,
                     const std::optional<std::filesystem::path>& label_path = std::nullopt);

// Inverse encoding of read_scan; label words carry the id in the low 16
// bits and zeros above. The label file is written only when a path is given.
void write_scan(const PointCloud& cloud, const std::filesystem::path& scan_path,
                const std::optional<std::filesystem::path>& label_path = std::nullopt);

}  // namespace bb
