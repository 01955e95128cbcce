#include "beambind/config.hpp"

#include <algorithm>

#include "beambind/corrupt.hpp"
#include "beambind/errors.hpp"
#include "beambind/rng.hpp"
#include "beambind/scan_io.hpp"
#include "beambind/toml.hpp"

namespace bb {
namespace {

using nlohmann::json;

double num_or(const json& t, const char* key, double fallback) {
  if (!t.contains(key)) return fallback;
  return t[key].get<double>();
}

std::int64_t int_or(const json& t, const char* key, std::int64_t fallback) {
  if (!t.contains(key)) return fallback;
  return t[key].get<std::int64_t>();
}

std::string str_or(const json& t, const char* key, const std::string& fallback) {
  if (!t.contains(key)) return fallback;
  return t[key].get<std::string>();
}

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

}  // namespace

BeamConfig beam_config_from(const json& doc) {
  BeamConfig cfg;
  cfg.n_beams = static_cast<int>(int_or(doc, "n_beams", cfg.n_beams));
  const std::string method = str_or(doc, "method", "sorted-cluster");
  if (method == "uniform-pitch") {
    cfg.method = BeamMethod::kUniformPitch;
  } else if (method == "sorted-cluster") {
    cfg.method = BeamMethod::kSortedCluster;
  } else if (method == "passthrough") {
    cfg.method = BeamMethod::kPassthrough;
  } else {
    bad_field("beams.method", "must be uniform-pitch, sorted-cluster or passthrough");
  }
  cfg.pitch_min_deg = num_or(doc, "pitch_min_deg", cfg.pitch_min_deg);
  cfg.pitch_max_deg = num_or(doc, "pitch_max_deg", cfg.pitch_max_deg);
  if (cfg.n_beams < 1) bad_field("beams.n_beams", "must be >= 1");
  return cfg;
}

CorruptConfig corrupt_config_from(const json& doc) {
  CorruptConfig cfg;
  cfg.jitter_sigma = num_or(doc, "jitter_sigma", 0.0);
  cfg.jitter_fraction = num_or(doc, "jitter_fraction", 1.0);
  const std::string policy = str_or(doc, "drop_policy", "none");
  if (policy == "none") {
    cfg.drop_policy = DropPolicy::kNone;
  } else if (policy == "uniform") {
    cfg.drop_policy = DropPolicy::kUniform;
  } else if (policy == "beam-burst") {
    cfg.drop_policy = DropPolicy::kBeamBurst;
  } else if (policy == "loss-guided") {
    cfg.drop_policy = DropPolicy::kLossGuided;
  } else {
    bad_field("corrupt.drop_policy", "must be none, uniform, beam-burst or loss-guided");
  }
  cfg.drop_rate = num_or(doc, "drop_rate", 0.0);
  cfg.beam_burst_span = static_cast<int>(int_or(doc, "beam_burst_span", cfg.beam_burst_span));
  cfg.seed = static_cast<std::uint64_t>(int_or(doc, "seed", 0));
  validate(cfg);
  return cfg;
}

TrainConfig train_config_from(const json& doc) {
  TrainConfig cfg;
  const json train = doc.contains("train") ? doc["train"] : json::object();
  cfg.epochs = static_cast<int>(int_or(train, "epochs", 1));
  cfg.batch_size = static_cast<int>(int_or(train, "batch_size", 1));
  cfg.learning_rate = num_or(train, "learning_rate", 0.24);
  cfg.weight_decay = num_or(train, "weight_decay", 1e-4);
  cfg.seed = static_cast<std::uint64_t>(int_or(train, "seed", 0));
  cfg.ema_momentum = num_or(train, "ema_momentum", 0.9);
  cfg.eval_every = static_cast<int>(int_or(train, "eval_every", 0));
  cfg.fb_before_bank_update = train.contains("fb_before_bank_update") &&
                              train["fb_before_bank_update"].get<bool>();
  cfg.fb_literal_eq3 = train.contains("fb_literal_eq3") && train["fb_literal_eq3"].get<bool>();
  cfg.bfd_freeze_clean =
      train.contains("bfd_freeze_clean") && train["bfd_freeze_clean"].get<bool>();

  const std::string variant = str_or(train, "fb_variant", "superclass");
  if (variant == "superclass") {
    cfg.fb_variant = FbVariant::kSuperclass;
  } else if (variant == "classwise") {
    cfg.fb_variant = FbVariant::kClasswise;
  } else if (variant == "coarse") {
    cfg.fb_variant = FbVariant::kCoarse;
  } else {
    bad_field("train.fb_variant", "must be superclass, classwise or coarse");
  }

  const std::string mode = str_or(train, "bfd_mode", "beam-wise-things");
  if (mode == "beam-wise-things") {
    cfg.bfd_mode = BfdMode::kBeamWiseThings;
  } else if (mode == "beam-wise-all") {
    cfg.bfd_mode = BfdMode::kBeamWiseAll;
  } else if (mode == "point-wise-things") {
    cfg.bfd_mode = BfdMode::kPointWiseThings;
  } else if (mode == "beam-all-things") {
    cfg.bfd_mode = BfdMode::kBeamAllThings;
  } else {
    bad_field("train.bfd_mode",
              "must be beam-wise-things, beam-wise-all, point-wise-things or beam-all-things");
  }

  const std::string guidance = str_or(train, "guidance", "entropy");
  if (guidance == "entropy") {
    cfg.guidance = GuidanceSource::kEntropy;
  } else if (guidance == "loss") {
    cfg.guidance = GuidanceSource::kLoss;
  } else {
    bad_field("train.guidance", "must be entropy or loss");
  }

  if (doc.contains("net")) {
    const json& net = doc["net"];
    cfg.net.hidden = static_cast<int>(int_or(net, "hidden", cfg.net.hidden));
    cfg.net.feature_dim = static_cast<int>(int_or(net, "feature_dim", cfg.net.feature_dim));
    cfg.net.g_hidden = static_cast<int>(int_or(net, "g_hidden", cfg.net.g_hidden));
    cfg.net.proj_dim = static_cast<int>(int_or(net, "proj_dim", cfg.net.proj_dim));
    cfg.net.coord_scale = num_or(net, "coord_scale", cfg.net.coord_scale);
  }
  if (doc.contains("weights")) {
    const json& w = doc["weights"];
    cfg.weights.aug = num_or(w, "aug", cfg.weights.aug);
    cfg.weights.fb = num_or(w, "fb", cfg.weights.fb);
    cfg.weights.bfd = num_or(w, "bfd", cfg.weights.bfd);
    if (cfg.weights.aug < 0 || cfg.weights.fb < 0 || cfg.weights.bfd < 0) {
      bad_field("weights", "loss weights must be >= 0");
    }
  }
  if (doc.contains("beams")) cfg.beams = beam_config_from(doc["beams"]);
  if (doc.contains("corrupt")) cfg.corrupt = corrupt_config_from(doc["corrupt"]);

  if (cfg.epochs < 1) bad_field("train.epochs", "must be >= 1");
  if (cfg.batch_size < 1) bad_field("train.batch_size", "must be >= 1");
  return cfg;
}

namespace {

DataSource data_source_from(const json& doc, const std::filesystem::path& base,
                            const std::string& which) {
  DataSource src;
  if (doc.contains("scan_dir")) {
    src.scan_dir = base / doc["scan_dir"].get<std::string>();
    if (!std::filesystem::is_directory(*src.scan_dir)) {
      bad_field(which + ".scan_dir", "directory does not exist: " + src.scan_dir->string());
    }
  }
  if (doc.contains("scene_spec")) {
    src.scene_spec = base / doc["scene_spec"].get<std::string>();
    if (!std::filesystem::exists(*src.scene_spec)) {
      bad_field(which + ".scene_spec", "file does not exist: " + src.scene_spec->string());
    }
    src.scene_count = static_cast<int>(int_or(doc, "count", 1));
    src.scene_seed_base = static_cast<std::uint64_t>(int_or(doc, "seed_base", 0));
    if (src.scene_count < 1) bad_field(which + ".count", "must be >= 1");
  }
  if (!src.scan_dir && !src.scene_spec) {
    bad_field(which, "needs scan_dir or scene_spec");
  }
  if (src.scan_dir && src.scene_spec) {
    bad_field(which, "scan_dir and scene_spec are mutually exclusive");
  }
  if (doc.contains("corrupt")) src.corrupt = corrupt_config_from(doc["corrupt"]);
  return src;
}

}  // namespace

ExperimentManifest load_manifest(const std::filesystem::path& path) {
  const json doc = toml::parse_file(path);
  const std::filesystem::path base = path.parent_path();

  ExperimentManifest m;
  if (!doc.contains("experiment")) throw ConfigError("manifest needs an [experiment] section");
  const json& exp = doc["experiment"];
  if (!exp.contains("taxonomy")) bad_field("experiment.taxonomy", "is required");
  m.taxonomy = exp["taxonomy"].get<std::string>();
  if (!is_taxonomy_preset(m.taxonomy)) {
    const auto tax_path = base / m.taxonomy;
    if (!std::filesystem::exists(tax_path)) {
      bad_field("experiment.taxonomy", "neither a preset nor an existing file: " + m.taxonomy);
    }
    m.taxonomy = tax_path.string();
  }
  m.output_dir = base / str_or(exp, "output_dir", "run");

  if (!doc.contains("data") || !doc["data"].contains("train")) {
    throw ConfigError("manifest needs a [data.train] section");
  }
  m.train = data_source_from(doc["data"]["train"], base, "data.train");
  if (doc["data"].contains("eval")) {
    m.eval = data_source_from(doc["data"]["eval"], base, "data.eval");
  }
  m.train_cfg = train_config_from(doc);
  return m;
}

std::vector<PointCloud> load_scan_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> bins;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      bins.push_back(entry.path());
    }
  }
  std::sort(bins.begin(), bins.end());
  if (bins.empty()) throw DataError("no .bin scans in " + dir.string());

  std::vector<PointCloud> clouds;
  clouds.reserve(bins.size());
  for (const auto& bin : bins) {
    std::filesystem::path label = bin;
    label.replace_extension(".label");
    if (std::filesystem::exists(label)) {
      clouds.push_back(read_scan(bin, label));
    } else {
      clouds.push_back(read_scan(bin));
    }
  }
  return clouds;
}

std::vector<PointCloud> load_data_source(const DataSource& src, const Taxonomy& tax) {
  std::vector<PointCloud> clouds;
  if (src.scan_dir) {
    clouds = load_scan_dir(*src.scan_dir);
  } else {
    SceneSpec spec = load_scene_spec(*src.scene_spec, tax);
    clouds.reserve(src.scene_count);
    for (int i = 0; i < src.scene_count; ++i) {
      spec.seed = src.scene_seed_base + static_cast<std::uint64_t>(i);
      clouds.push_back(synth_scene(spec));
    }
  }
  if (src.corrupt) {
    CorruptConfig cfg = *src.corrupt;
    for (std::size_t i = 0; i < clouds.size(); ++i) {
      cfg.seed = mix_seed(src.corrupt->seed, 0xEBA1ull, i);
      clouds[i] = corrupt(clouds[i], cfg);
    }
  }
  return clouds;
}

}  // namespace bb
