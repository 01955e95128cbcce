#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beambind/point_cloud.hpp"
#include "beambind/taxonomy.hpp"

namespace bb {

// Desk-scale scene description. Scenes are ray-cast from a sensor at the
// origin over a uniform azimuth grid; the generating beam index of every
// point is recorded in the cloud as ground truth.
struct SceneSpec {
  std::vector<double> pitch_deg;  // strictly increasing, one per beam
  int n_azimuth = 720;
  double min_range = 0.5;
  double max_range = 80.0;
  double intensity_noise = 0.05;
  std::uint64_t seed = 0;

  struct Surface {
    enum class Kind { kGround, kBand, kWalls };
    Kind kind = Kind::kGround;
    std::uint32_t class_id = 0;
    double intensity = 0.3;
    double z = 0.0;           // plane height (ground, band)
    double half_extent = 0;   // ground square half size
    double r0 = 0, r1 = 0;    // band annulus radii
    double distance = 0;      // walls: |x| and |y| of the four planes
    double base_z = 0;        // walls: bottom height
    double height = 0;        // walls: vertical extent above base_z
  };

  struct ObjectTemplate {
    enum class Shape { kBox, kCylinder, kSphere };
    Shape shape = Shape::kBox;
    std::uint32_t class_id = 0;
    double intensity = 0.6;
    std::array<double, 3> size{1, 1, 1};  // box LxWxH; cylinder [r,h]; sphere [r]
    double size_jitter = 0.0;             // relative, per dimension
    int count_min = 1, count_max = 1;
    double r_min = 5.0, r_max = 20.0;  // placement annulus
    double base_z = 0.0;               // resting height
  };

  std::vector<Surface> surfaces;
  std::vector<ObjectTemplate> objects;

  int n_beams() const { return static_cast<int>(pitch_deg.size()); }
};

// One ray-castable solid placed in the scene.
struct Primitive {
  enum class Kind { kHorizRect, kHorizBand, kVertRectX, kVertRectY, kBox, kCylinder, kSphere };
  Kind kind;
  std::uint32_t class_id = 0;
  double intensity = 0.5;
  int object_index = -1;  // instance ordinal; -1 for surfaces

  double z = 0;                       // plane height
  double half_extent = 0;             // horiz rect
  double r0 = 0, r1 = 0;              // band
  double plane_coord = 0;             // wall position on its axis
  double span = 0;                    // wall half width along the free axis
  double z0 = 0, z1 = 0;              // vertical extent (walls, box, cylinder)
  std::array<double, 3> center{0, 0, 0};
  std::array<double, 3> half{0, 0, 0};  // box half sizes
  double yaw = 0;                       // box rotation about z
  double radius = 0;                    // cylinder/sphere
};

struct SceneGeometry {
  std::vector<Primitive> primitives;
};

// Deterministic instancing of the spec's templates; all randomness (counts,
// poses, sizes) is consumed here in template order.
SceneGeometry build_scene_geometry(const SceneSpec& spec);

// Casts all beams over the azimuth grid against the instanced geometry.
// Deterministic for a fixed seed. Objects never hit by any beam produce a
// warning entry, not an error.
PointCloud synth_scene(const SceneSpec& spec, std::vector<std::string>* warnings = nullptr);

// Parses and validates a scene spec; class references (names or ids) are
// resolved against the taxonomy.
SceneSpec scene_spec_from_config(const nlohmann::json& doc, const Taxonomy& tax);
SceneSpec load_scene_spec(const std::filesystem::path& path, const Taxonomy& tax);

}  // namespace bb
