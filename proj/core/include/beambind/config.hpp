#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beambind/point_cloud.hpp"
#include "beambind/synth.hpp"
#include "beambind/taxonomy.hpp"
#include "beambind/trainer.hpp"

namespace bb {

// One dataset side of an experiment: either a directory of .bin/.label
// scans or a scene spec generating `count` seeded scenes.
struct DataSource {
  std::optional<std::filesystem::path> scan_dir;
  std::optional<std::filesystem::path> scene_spec;
  int scene_count = 0;
  std::uint64_t scene_seed_base = 0;
  // Corruption applied after loading/generation (e.g. a corrupted test set).
  std::optional<CorruptConfig> corrupt;
};

struct ExperimentManifest {
  std::string taxonomy;  // preset name or file path
  DataSource train;
  std::optional<DataSource> eval;
  TrainConfig train_cfg;
  std::filesystem::path output_dir = "run";
};

BeamConfig beam_config_from(const nlohmann::json& doc);
CorruptConfig corrupt_config_from(const nlohmann::json& doc);
TrainConfig train_config_from(const nlohmann::json& doc);

// Parses and validates a manifest; referenced files must exist.
ExperimentManifest load_manifest(const std::filesystem::path& path);

// Loads every scan (sorted by filename) from a directory of .bin files;
// sidecar .label files are picked up when present.
std::vector<PointCloud> load_scan_dir(const std::filesystem::path& dir);

// Materializes a data source; scene sources synthesize scenes with seeds
// scene_seed_base + i, and the optional per-source corruption is applied.
std::vector<PointCloud> load_data_source(const DataSource& src, const Taxonomy& tax);

}  // namespace bb
