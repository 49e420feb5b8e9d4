#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "beltpick/bvh.hpp"
#include "beltpick/camera_belt.hpp"
#include "beltpick/mesh.hpp"

namespace beltpick {

// Uniform density used for builtin asset masses and for reconstructed
// component masses: 0.3 g/cm^3.
inline constexpr double kDefaultDensityKgPerMm3 = 0.3e-6;

struct ObjectAsset {
  std::string id;
  std::shared_ptr<const TriMesh> mesh;  // local frame, outward-oriented
  double mass_kg = 0.0;
  bool transparent = false;
  MassProperties mass_props;  // local frame
  // Where it came from: "builtin" or an OBJ path. Carried into manifests.
  std::string source = "builtin";
};

ObjectAsset make_asset(std::string id, TriMesh mesh, double mass_kg, bool transparent, std::string source = "builtin");

class AssetLibrary {
 public:
  void add(ObjectAsset asset);
  const ObjectAsset& get(const std::string& id) const;
  bool contains(const std::string& id) const { return assets_.count(id) > 0; }
  std::vector<std::string> ids() const;  // sorted
  std::size_t size() const { return assets_.size(); }

 private:
  std::map<std::string, std::shared_ptr<const ObjectAsset>> assets_;
  friend class Scene;
};

/// Boxes, upright cylinders and spheres between 40 and 150 mm; every asset is
/// convex, watertight, and weighs volume x 0.3 g/cm^3. Ids prefixed "glass_"
/// are transparent.
AssetLibrary builtin_assets();

struct ObjectInstance {
  std::string asset_id;
  RigidPose pose;  // local-to-world
  std::uint32_t instance_id = 0;
};

/// An instance with its world-space geometry and acceleration structure.
struct PlacedObject {
  ObjectInstance instance;
  std::shared_ptr<const ObjectAsset> asset;
  std::shared_ptr<const TriMesh> mesh;  // world frame
  std::shared_ptr<const Bvh> bvh;
  Aabb bounds;
  Vec3 center_of_mass;
};

/// The belt is the plane z = 0 restricted to this rectangle.
struct BeltSurface {
  double x_min = -1500.0;
  double x_max = 2500.0;
  double y_min = -250.0;
  double y_max = 250.0;

  bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }
};

/// Immutable after construction; all queries are thread-safe.
class Scene {
 public:
  Scene() = default;
  Scene(std::vector<ObjectInstance> instances, const AssetLibrary& assets, BeltSurface belt = {});

  const std::vector<PlacedObject>& objects() const { return objects_; }
  const BeltSurface& belt() const { return belt_; }
  const PlacedObject* find(std::uint32_t instance_id) const;
  std::vector<ObjectInstance> instances() const;
  bool empty() const { return objects_.empty(); }

  Scene translated(const Vec3& offset) const;
  Scene without(std::uint32_t instance_id) const;

  // Verifies instance invariants: unique ids, valid poses, resting on z = 0
  // within 0.1 mm, and pairwise non-interpenetration.
  void validate() const;

 private:
  std::vector<PlacedObject> objects_;
  BeltSurface belt_;
};

// True when the two placed meshes cross or one encloses the other.
bool objects_interpenetrate(const PlacedObject& a, const PlacedObject& b);

struct RandomizationSpec {
  int count_min = 3;
  int count_max = 5;
  Vec2 region_lo{30.0, -170.0};  // object footprints stay inside this rectangle
  Vec2 region_hi{470.0, 170.0};
  double yaw_min = 0.0;
  double yaw_max = 2.0 * M_PI;
  double min_clearance = 0.0;  // mm between footprint boxes; 0 = exact test only
  std::vector<std::string> asset_ids;  // empty = whole library
  Vec3 camera_position_jitter = Vec3::Zero();  // +- per axis, mm
  Vec3 camera_target_jitter = Vec3::Zero();
  std::uint64_t seed = 0;

  void validate(const BeltSurface& belt) const;
};

inline constexpr int kMaxPlacementAttempts = 1000;

/// Rejection-sampled, yaw-only placement resting on the belt. Deterministic in
/// (spec, assets, seed). Throws kPlacementFailure.
Scene generate_scene(const RandomizationSpec& spec, const AssetLibrary& assets, std::uint64_t seed,
                     const BeltSurface& belt = {});

// Jitters each camera's eye and aim point by the spec's ranges.
std::array<RigidPose, 2> jitter_rig(const std::array<RigidPose, 2>& rig, const Vec3& target,
                                    const RandomizationSpec& spec, std::uint64_t seed);

Scene scene_at_time(const Scene& scene, const BeltConfig& belt, double dt);

}  // namespace beltpick
