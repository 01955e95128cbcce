#include "beambind/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "beambind/errors.hpp"
#include "beambind/rng.hpp"
#include "beambind/toml.hpp"

namespace bb {
namespace {

constexpr double kNoHit = std::numeric_limits<double>::infinity();

// Nearest intersection parameter t of the ray t*dir (t > 0) with the
// primitive, or kNoHit. dir is unit length.
double intersect(const Primitive& prim, const std::array<double, 3>& dir) {
  switch (prim.kind) {
    case Primitive::Kind::kHorizRect: {
      if (dir[2] == 0.0) return kNoHit;
      const double t = prim.z / dir[2];
      if (t <= 0) return kNoHit;
      const double px = t * dir[0], py = t * dir[1];
      if (std::abs(px) > prim.half_extent || std::abs(py) > prim.half_extent) return kNoHit;
      return t;
    }
    case Primitive::Kind::kHorizBand: {
      if (dir[2] == 0.0) return kNoHit;
      const double t = prim.z / dir[2];
      if (t <= 0) return kNoHit;
      const double r = std::hypot(t * dir[0], t * dir[1]);
      if (r < prim.r0 || r > prim.r1) return kNoHit;
      return t;
    }
    case Primitive::Kind::kVertRectX: {
      if (dir[0] == 0.0) return kNoHit;
      const double t = prim.plane_coord / dir[0];
      if (t <= 0) return kNoHit;
      const double py = t * dir[1], pz = t * dir[2];
      if (std::abs(py) > prim.span || pz < prim.z0 || pz > prim.z1) return kNoHit;
      return t;
    }
    case Primitive::Kind::kVertRectY: {
      if (dir[1] == 0.0) return kNoHit;
      const double t = prim.plane_coord / dir[1];
      if (t <= 0) return kNoHit;
      const double px = t * dir[0], pz = t * dir[2];
      if (std::abs(px) > prim.span || pz < prim.z0 || pz > prim.z1) return kNoHit;
      return t;
    }
    case Primitive::Kind::kBox: {
      // Slab test in the box frame (translate, then rotate by -yaw).
      const double c = std::cos(-prim.yaw), s = std::sin(-prim.yaw);
      const double ox = -prim.center[0], oy = -prim.center[1], oz = -prim.center[2];
      const std::array<double, 3> o{c * ox - s * oy, s * ox + c * oy, oz};
      const std::array<double, 3> d{c * dir[0] - s * dir[1], s * dir[0] + c * dir[1], dir[2]};
      double t0 = 0.0, t1 = kNoHit;
      for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
          if (std::abs(o[a]) > prim.half[a]) return kNoHit;
          continue;
        }
        double ta = (-prim.half[a] - o[a]) / d[a];
        double tb = (prim.half[a] - o[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return kNoHit;
      }
      return t0 > 0 ? t0 : kNoHit;
    }
    case Primitive::Kind::kCylinder: {
      const double ox = -prim.center[0], oy = -prim.center[1];
      const double a = dir[0] * dir[0] + dir[1] * dir[1];
      double t_side = kNoHit;
      if (a > 0) {
        const double b = 2.0 * (ox * dir[0] + oy * dir[1]);
        const double cq = ox * ox + oy * oy - prim.radius * prim.radius;
        const double disc = b * b - 4 * a * cq;
        if (disc >= 0) {
          const double sq = std::sqrt(disc);
          for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
            if (t > 0 && t < t_side) {
              const double pz = t * dir[2];
              if (pz >= prim.z0 && pz <= prim.z1) t_side = t;
            }
          }
        }
      }
      // End caps.
      double t_cap = kNoHit;
      if (dir[2] != 0.0) {
        for (double zc : {prim.z0, prim.z1}) {
          const double t = zc / dir[2];
          if (t > 0 && t < t_cap) {
            const double px = t * dir[0] + ox, py = t * dir[1] + oy;
            if (px * px + py * py <= prim.radius * prim.radius) t_cap = t;
          }
        }
      }
      return std::min(t_side, t_cap);
    }
    case Primitive::Kind::kSphere: {
      const double ox = -prim.center[0], oy = -prim.center[1], oz = -prim.center[2];
      const double b = 2.0 * (ox * dir[0] + oy * dir[1] + oz * dir[2]);
      const double cq = ox * ox + oy * oy + oz * oz - prim.radius * prim.radius;
      const double disc = b * b - 4 * cq;
      if (disc < 0) return kNoHit;
      const double sq = std::sqrt(disc);
      const double t0 = (-b - sq) / 2, t1 = (-b + sq) / 2;
      if (t0 > 0) return t0;
      if (t1 > 0) return t1;
      return kNoHit;
    }
  }
  return kNoHit;
}

void validate_spec(const SceneSpec& spec) {
  if (spec.pitch_deg.empty()) throw ConfigError("scene spec needs at least one beam");
  for (std::size_t i = 1; i < spec.pitch_deg.size(); ++i) {
    if (!(spec.pitch_deg[i] > spec.pitch_deg[i - 1])) {
      throw ConfigError("beam pitch angles must be strictly increasing");
    }
  }
  if (spec.n_azimuth < 1) throw ConfigError("n_azimuth must be >= 1");
  if (!(spec.max_range > spec.min_range) || spec.min_range < 0) {
    throw ConfigError("scene range interval is empty");
  }
}

}  // namespace

SceneGeometry build_scene_geometry(const SceneSpec& spec) {
  validate_spec(spec);
  SceneGeometry geo;

  for (const auto& s : spec.surfaces) {
    Primitive p;
    p.class_id = s.class_id;
    p.intensity = s.intensity;
    switch (s.kind) {
      case SceneSpec::Surface::Kind::kGround:
        p.kind = Primitive::Kind::kHorizRect;
        p.z = s.z;
        p.half_extent = s.half_extent;
        geo.primitives.push_back(p);
        break;
      case SceneSpec::Surface::Kind::kBand:
        p.kind = Primitive::Kind::kHorizBand;
        p.z = s.z;
        p.r0 = s.r0;
        p.r1 = s.r1;
        geo.primitives.push_back(p);
        break;
      case SceneSpec::Surface::Kind::kWalls: {
        p.z0 = s.base_z;
        p.z1 = s.base_z + s.height;
        p.span = s.distance;
        for (double side : {+1.0, -1.0}) {
          p.kind = Primitive::Kind::kVertRectX;
          p.plane_coord = side * s.distance;
          geo.primitives.push_back(p);
          p.kind = Primitive::Kind::kVertRectY;
          geo.primitives.push_back(p);
        }
        break;
      }
    }
  }

  // All placement randomness is drawn here, in template order, so the
  // geometry is a pure function of the spec.
  std::mt19937_64 rng(mix_seed(spec.seed, 0xA110C8ull));
  int object_ordinal = 0;
  for (const auto& tpl : spec.objects) {
    std::uniform_int_distribution<int> count_dist(tpl.count_min, tpl.count_max);
    const int count = count_dist(rng);
    for (int i = 0; i < count; ++i) {
      std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * M_PI);
      std::uniform_real_distribution<double> radius_dist(tpl.r_min, tpl.r_max);
      std::uniform_real_distribution<double> jitter_dist(1.0 - tpl.size_jitter,
                                                         1.0 + tpl.size_jitter);
      const double ang = angle_dist(rng);
      const double rad = radius_dist(rng);
      const double yaw = angle_dist(rng);
      std::array<double, 3> dims = tpl.size;
      for (auto& d : dims) d *= jitter_dist(rng);

      Primitive p;
      p.class_id = tpl.class_id;
      p.intensity = tpl.intensity;
      p.object_index = object_ordinal++;
      const double cx = rad * std::cos(ang), cy = rad * std::sin(ang);
      switch (tpl.shape) {
        case SceneSpec::ObjectTemplate::Shape::kBox:
          p.kind = Primitive::Kind::kBox;
          p.center = {cx, cy, tpl.base_z + dims[2] / 2};
          p.half = {dims[0] / 2, dims[1] / 2, dims[2] / 2};
          p.yaw = yaw;
          break;
        case SceneSpec::ObjectTemplate::Shape::kCylinder:
          p.kind = Primitive::Kind::kCylinder;
          p.center = {cx, cy, 0};
          p.radius = dims[0];
          p.z0 = tpl.base_z;
          p.z1 = tpl.base_z + dims[1];
          break;
        case SceneSpec::ObjectTemplate::Shape::kSphere:
          p.kind = Primitive::Kind::kSphere;
          p.radius = dims[0];
          p.center = {cx, cy, tpl.base_z + dims[0]};
          break;
      }
      geo.primitives.push_back(p);
    }
  }
  return geo;
}

PointCloud synth_scene(const SceneSpec& spec, std::vector<std::string>* warnings) {
  const SceneGeometry geo = build_scene_geometry(spec);
  std::mt19937_64 noise_rng(mix_seed(spec.seed, 0x10153ull));
  std::uniform_real_distribution<double> noise_dist(-spec.intensity_noise, spec.intensity_noise);

  std::vector<int> hits_per_object;
  for (const auto& p : geo.primitives) {
    if (p.object_index >= 0) {
      hits_per_object.resize(std::max<std::size_t>(hits_per_object.size(), p.object_index + 1), 0);
    }
  }

  PointCloud cloud;
  const int n_beams = spec.n_beams();
  for (int b = 0; b < n_beams; ++b) {
    const double pitch = spec.pitch_deg[b] * kDegToRad;
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    for (int k = 0; k < spec.n_azimuth; ++k) {
      const double az = -M_PI + 2.0 * M_PI * k / spec.n_azimuth;
      const std::array<double, 3> dir{cp * std::cos(az), cp * std::sin(az), sp};

      double best_t = kNoHit;
      const Primitive* best = nullptr;
      for (const auto& prim : geo.primitives) {
        const double t = intersect(prim, dir);
        if (t >= spec.min_range && t <= spec.max_range && t < best_t) {
          best_t = t;
          best = &prim;
        }
      }
      if (!best) continue;
      if (best->object_index >= 0) ++hits_per_object[best->object_index];
      const double noisy =
          std::clamp(best->intensity + noise_dist(noise_rng), 0.0, 1.0);
      cloud.push_point({static_cast<float>(best_t * dir[0]), static_cast<float>(best_t * dir[1]),
                        static_cast<float>(best_t * dir[2])},
                       static_cast<float>(noisy), best->class_id, b,
                       static_cast<std::uint32_t>(cloud.size()));
    }
  }

  if (warnings) {
    for (const auto& prim : geo.primitives) {
      if (prim.object_index >= 0 && hits_per_object[prim.object_index] == 0) {
        warnings->push_back("object class " + std::to_string(prim.class_id) + " at (" +
                            std::to_string(prim.center[0]) + ", " +
                            std::to_string(prim.center[1]) + ") is outside all beam coverage");
      }
    }
  }
  return cloud;
}

namespace {

std::uint32_t resolve_class(const nlohmann::json& v, const Taxonomy& tax) {
  std::uint32_t id;
  if (v.is_string()) {
    auto found = tax.id_of(v.get<std::string>());
    if (!found) throw ConfigError("scene references unknown class '" + v.get<std::string>() + "'");
    id = *found;
  } else {
    id = v.get<std::uint32_t>();
    if (!tax.knows(id)) {
      throw ConfigError("scene references unknown class id " + std::to_string(id));
    }
  }
  return id;
}

double get_num(const nlohmann::json& t, const char* key, double fallback) {
  if (!t.contains(key)) return fallback;
  return t[key].get<double>();
}

}  // namespace

SceneSpec scene_spec_from_config(const nlohmann::json& doc, const Taxonomy& tax) {
  SceneSpec spec;
  if (doc.contains("pitch_deg")) {
    for (const auto& v : doc["pitch_deg"]) spec.pitch_deg.push_back(v.get<double>());
    if (doc.contains("n_beams") &&
        doc["n_beams"].get<int>() != static_cast<int>(spec.pitch_deg.size())) {
      throw ConfigError("n_beams disagrees with the pitch_deg list length");
    }
  } else {
    const int n = doc.contains("n_beams") ? doc["n_beams"].get<int>() : 64;
    if (n < 1) throw ConfigError("n_beams must be >= 1");
    const double lo = get_num(doc, "pitch_min_deg", -25.0);
    const double hi = get_num(doc, "pitch_max_deg", 3.0);
    if (!(lo < hi) && n > 1) throw ConfigError("pitch range is empty");
    for (int i = 0; i < n; ++i) {
      spec.pitch_deg.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    }
  }
  spec.n_azimuth = doc.contains("n_azimuth") ? doc["n_azimuth"].get<int>() : 720;
  spec.min_range = get_num(doc, "min_range", 0.5);
  spec.max_range = get_num(doc, "max_range", 80.0);
  spec.intensity_noise = get_num(doc, "intensity_noise", 0.05);
  spec.seed = doc.contains("seed") ? doc["seed"].get<std::uint64_t>() : 0;

  if (doc.contains("surface")) {
    for (const auto& s : doc["surface"]) {
      SceneSpec::Surface surf;
      const std::string kind = s.at("kind").get<std::string>();
      surf.class_id = resolve_class(s.at("class"), tax);
      surf.intensity = get_num(s, "intensity", 0.3);
      if (kind == "ground") {
        surf.kind = SceneSpec::Surface::Kind::kGround;
        surf.z = get_num(s, "z", 0.0);
        surf.half_extent = get_num(s, "half_extent", 40.0);
      } else if (kind == "band") {
        surf.kind = SceneSpec::Surface::Kind::kBand;
        surf.z = get_num(s, "z", 0.0);
        surf.r0 = get_num(s, "r0", 0.0);
        surf.r1 = get_num(s, "r1", 0.0);
      } else if (kind == "walls") {
        surf.kind = SceneSpec::Surface::Kind::kWalls;
        surf.distance = get_num(s, "distance", 30.0);
        surf.base_z = get_num(s, "base_z", 0.0);
        surf.height = get_num(s, "height", 4.0);
      } else {
        throw ConfigError("unknown surface kind '" + kind + "'");
      }
      spec.surfaces.push_back(surf);
    }
  }

  if (doc.contains("object")) {
    for (const auto& o : doc["object"]) {
      SceneSpec::ObjectTemplate tpl;
      const std::string shape = o.at("shape").get<std::string>();
      if (shape == "box") {
        tpl.shape = SceneSpec::ObjectTemplate::Shape::kBox;
      } else if (shape == "cylinder") {
        tpl.shape = SceneSpec::ObjectTemplate::Shape::kCylinder;
      } else if (shape == "sphere") {
        tpl.shape = SceneSpec::ObjectTemplate::Shape::kSphere;
      } else {
        throw ConfigError("unknown object shape '" + shape + "'");
      }
      tpl.class_id = resolve_class(o.at("class"), tax);
      tpl.intensity = get_num(o, "intensity", 0.6);
      if (o.contains("size")) {
        const auto& sz = o["size"];
        for (std::size_t i = 0; i < sz.size() && i < 3; ++i) tpl.size[i] = sz[i].get<double>();
      }
      tpl.size_jitter = get_num(o, "size_jitter", 0.0);
      if (tpl.size_jitter < 0 || tpl.size_jitter >= 1) {
        throw ConfigError("size_jitter must be in [0, 1)");
      }
      if (o.contains("count")) {
        const auto& c = o["count"];
        if (c.is_array()) {
          tpl.count_min = c.at(0).get<int>();
          tpl.count_max = c.at(1).get<int>();
        } else {
          tpl.count_min = tpl.count_max = c.get<int>();
        }
      }
      if (tpl.count_min < 0 || tpl.count_max < tpl.count_min) {
        throw ConfigError("object count range is invalid");
      }
      if (o.contains("placement_radius")) {
        const auto& r = o["placement_radius"];
        tpl.r_min = r.at(0).get<double>();
        tpl.r_max = r.at(1).get<double>();
      }
      tpl.base_z = get_num(o, "base_z", 0.0);
      spec.objects.push_back(tpl);
    }
  }

  // Surfaces and objects validated; beams validated by the geometry builder.
  validate_spec(spec);
  return spec;
}

SceneSpec load_scene_spec(const std::filesystem::path& path, const Taxonomy& tax) {
  return scene_spec_from_config(toml::parse_file(path), tax);
}

}  // namespace bb
