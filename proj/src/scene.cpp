#include "beltpick/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "beltpick/error.hpp"
#include "beltpick/rng.hpp"

namespace beltpick {

ObjectAsset make_asset(std::string id, TriMesh mesh, double mass_kg, bool transparent, std::string source) {
  if (!(mass_kg > 0.0)) throw Error(Errc::kInvalidArgument, "asset '" + id + "' needs a positive mass");
  mesh.validate_and_classify();
  orient_outward(mesh);
  ObjectAsset asset;
  asset.id = std::move(id);
  asset.mass_props = mass_properties(mesh);
  asset.mesh = std::make_shared<const TriMesh>(std::move(mesh));
  asset.mass_kg = mass_kg;
  asset.transparent = transparent;
  asset.source = std::move(source);
  return asset;
}

void AssetLibrary::add(ObjectAsset asset) {
  const std::string id = asset.id;
  if (id.empty()) throw Error(Errc::kInvalidArgument, "asset id must not be empty");
  assets_[id] = std::make_shared<const ObjectAsset>(std::move(asset));
}

const ObjectAsset& AssetLibrary::get(const std::string& id) const {
  auto it = assets_.find(id);
  if (it == assets_.end()) throw Error(Errc::kInvalidArgument, "unknown asset '" + id + "'");
  return *it->second;
}

std::vector<std::string> AssetLibrary::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, asset] : assets_) out.push_back(id);
  return out;
}

AssetLibrary builtin_assets() {
  AssetLibrary lib;
  auto add = [&](const std::string& id, TriMesh mesh, bool transparent) {
    mesh.validate_and_classify();
    const double volume = mass_properties(mesh).volume;
    lib.add(make_asset(id, std::move(mesh), volume * kDefaultDensityKgPerMm3, transparent));
  };
  add("box_60", make_box(Vec3(60, 60, 60)), false);
  add("box_80x60x40", make_box(Vec3(80, 60, 40)), false);
  add("box_100x70x50", make_box(Vec3(100, 70, 50)), false);
  add("plate_120x80x20", make_box(Vec3(120, 80, 20)), false);
  add("cyl_r30_h80", make_cylinder(30, 80, 48), false);
  add("cyl_r40_h50", make_cylinder(40, 50, 48), false);
  add("sphere_r40", make_icosphere(40, 4), false);
  add("glass_box_70x50x60", make_box(Vec3(70, 50, 60)), true);
  add("glass_cyl_r30_h90", make_cylinder(30, 90, 48), true);
  add("glass_sphere_r35", make_icosphere(35, 4), true);
  return lib;
}

namespace {

PlacedObject place(const ObjectInstance& inst, std::shared_ptr<const ObjectAsset> asset) {
  PlacedObject obj;
  obj.instance = inst;
  obj.mesh = std::make_shared<const TriMesh>(asset->mesh->transformed(inst.pose));
  obj.bvh = std::make_shared<const Bvh>(obj.mesh);
  obj.bounds = obj.mesh->bounds();
  obj.center_of_mass = inst.pose.to_world(asset->mass_props.centroid);
  obj.asset = std::move(asset);
  return obj;
}

bool point_inside(const PlacedObject& obj, const Vec3& p) {
  if (!obj.mesh->watertight || !obj.bounds.contains(p)) return false;
  // Skewed direction keeps the parity ray off edges of axis-aligned meshes.
  const Ray ray{p, Vec3(0.5773, 0.5774, 0.5775).normalized()};
  return obj.bvh->count_crossings(ray) % 2 == 1;
}

}  // namespace

Scene::Scene(std::vector<ObjectInstance> instances, const AssetLibrary& assets, BeltSurface belt) : belt_(belt) {
  objects_.reserve(instances.size());
  for (const auto& inst : instances) {
    inst.pose.validate();
    auto it = assets.assets_.find(inst.asset_id);
    if (it == assets.assets_.end()) throw Error(Errc::kInvalidArgument, "unknown asset '" + inst.asset_id + "'");
    objects_.push_back(place(inst, it->second));
  }
  std::set<std::uint32_t> ids;
  for (const auto& obj : objects_) {
    if (obj.instance.instance_id == 0) throw Error(Errc::kInvalidArgument, "instance id 0 is reserved for the belt");
    if (!ids.insert(obj.instance.instance_id).second) throw Error(Errc::kInvalidArgument, "duplicate instance id");
  }
}

const PlacedObject* Scene::find(std::uint32_t instance_id) const {
  for (const auto& obj : objects_)
    if (obj.instance.instance_id == instance_id) return &obj;
  return nullptr;
}

std::vector<ObjectInstance> Scene::instances() const {
  std::vector<ObjectInstance> out;
  out.reserve(objects_.size());
  for (const auto& obj : objects_) out.push_back(obj.instance);
  return out;
}

Scene Scene::translated(const Vec3& offset) const {
  Scene out;
  out.belt_ = belt_;
  out.objects_.reserve(objects_.size());
  for (const auto& obj : objects_) {
    ObjectInstance inst = obj.instance;
    inst.pose.center += offset;
    PlacedObject moved;
    moved.instance = inst;
    moved.asset = obj.asset;
    moved.mesh = std::make_shared<const TriMesh>(obj.mesh->translated(offset));
    moved.bvh = std::make_shared<const Bvh>(moved.mesh);
    moved.bounds = moved.mesh->bounds();
    moved.center_of_mass = obj.center_of_mass + offset;
    out.objects_.push_back(std::move(moved));
  }
  return out;
}

Scene Scene::without(std::uint32_t instance_id) const {
  Scene out = *this;
  std::erase_if(out.objects_, [&](const PlacedObject& o) { return o.instance.instance_id == instance_id; });
  return out;
}

bool objects_interpenetrate(const PlacedObject& a, const PlacedObject& b) {
  if (!a.bounds.overlaps(b.bounds)) return false;
  const TriMesh& ma = *a.mesh;
  const TriMesh& mb = *b.mesh;
  for (std::size_t i = 0; i < ma.triangles.size(); ++i) {
    const std::array<Vec3, 3> ta = {ma.corner(i, 0), ma.corner(i, 1), ma.corner(i, 2)};
    Aabb box;
    for (const Vec3& v : ta) box.extend(v);
    if (!box.overlaps(b.bounds)) continue;
    bool hit = false;
    b.bvh->visit_overlapping(box, [&](std::uint32_t face) {
      if (hit) return;
      const std::array<Vec3, 3> tb = {mb.corner(face, 0), mb.corner(face, 1), mb.corner(face, 2)};
      hit = triangles_intersect(ta, tb);
    });
    if (hit) return true;
  }
  return point_inside(b, ma.vertices.front()) || point_inside(a, mb.vertices.front());
}

void Scene::validate() const {
  for (const auto& obj : objects_) {
    obj.instance.pose.validate();
    if (std::abs(obj.bounds.lo.z()) > 0.1)
      throw Error(Errc::kInvariantViolation,
                  "instance " + std::to_string(obj.instance.instance_id) + " does not rest on the belt");
  }
  for (std::size_t i = 0; i < objects_.size(); ++i)
    for (std::size_t j = i + 1; j < objects_.size(); ++j)
      if (objects_interpenetrate(objects_[i], objects_[j]))
        throw Error(Errc::kInvariantViolation, "instances " + std::to_string(objects_[i].instance.instance_id) +
                                                   " and " + std::to_string(objects_[j].instance.instance_id) +
                                                   " interpenetrate");
}

void RandomizationSpec::validate(const BeltSurface& belt) const {
  if (count_min < 1 || count_max < count_min) throw Error(Errc::kInvalidArgument, "empty object count range");
  if (!(region_lo.x() < region_hi.x() && region_lo.y() < region_hi.y()))
    throw Error(Errc::kInvalidArgument, "empty placement region");
  if (!belt.contains(region_lo.x(), region_lo.y()) || !belt.contains(region_hi.x(), region_hi.y()))
    throw Error(Errc::kInvalidArgument, "placement region leaves the belt");
  if (!(yaw_min <= yaw_max)) throw Error(Errc::kInvalidArgument, "empty yaw range");
  if (min_clearance < 0.0) throw Error(Errc::kInvalidArgument, "negative clearance");
  if ((camera_position_jitter.array() < 0.0).any() || (camera_target_jitter.array() < 0.0).any())
    throw Error(Errc::kInvalidArgument, "negative camera jitter");
}

Scene generate_scene(const RandomizationSpec& spec, const AssetLibrary& assets, std::uint64_t seed,
                     const BeltSurface& belt) {
  spec.validate(belt);
  const std::vector<std::string> pool = spec.asset_ids.empty() ? assets.ids() : spec.asset_ids;
  if (pool.empty()) throw Error(Errc::kInvalidArgument, "asset list is empty");
  for (const auto& id : pool) assets.get(id);

  SplitMix64 rng(derive_seed(seed, 0x5CE7E));
  const int count = spec.count_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.count_max - spec.count_min + 1)));

  std::vector<ObjectInstance> instances;
  std::vector<PlacedObject> placed;
  for (int i = 0; i < count; ++i) {
    const ObjectAsset& asset = assets.get(pool[rng.below(pool.size())]);
    bool ok = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !ok; ++attempt) {
      const double yaw = rng.uniform(spec.yaw_min, spec.yaw_max);
      const double ux = rng.uniform();
      const double uy = rng.uniform();
      const RigidPose rot = RigidPose::from_yaw(yaw, Vec3::Zero());
      Aabb local;
      for (const Vec3& v : asset.mesh->vertices) local.extend(rot.to_world(v));
      const Vec3 half = local.extent() / 2.0;
      const double x_lo = spec.region_lo.x() + half.x();
      const double x_hi = spec.region_hi.x() - half.x();
      const double y_lo = spec.region_lo.y() + half.y();
      const double y_hi = spec.region_hi.y() - half.y();
      if (x_lo > x_hi || y_lo > y_hi) continue;
      const Vec3 center(x_lo + ux * (x_hi - x_lo), y_lo + uy * (y_hi - y_lo), 0.0);
      const Vec3 translation(center.x() - local.center().x(), center.y() - local.center().y(), -local.lo.z());

      ObjectInstance inst;
      inst.asset_id = asset.id;
      inst.pose = RigidPose::from_yaw(yaw, translation);
      inst.instance_id = static_cast<std::uint32_t>(i + 1);
      const Scene single({inst}, assets, belt);
      const PlacedObject& candidate = single.objects().front();

      ok = std::none_of(placed.begin(), placed.end(), [&](const PlacedObject& other) {
        if (spec.min_clearance > 0.0) {
          const Aabb a = candidate.bounds.inflated(spec.min_clearance);
          return a.overlaps(other.bounds);
        }
        return objects_interpenetrate(candidate, other);
      });
      if (ok) {
        instances.push_back(inst);
        placed.push_back(candidate);
      }
    }
    if (!ok)
      throw Error(Errc::kPlacementFailure, "object " + std::to_string(i + 1) + " (" + asset.id + ") not placed in " +
                                                std::to_string(kMaxPlacementAttempts) + " attempts");
  }
  return Scene(std::move(instances), assets, belt);
}

std::array<RigidPose, 2> jitter_rig(const std::array<RigidPose, 2>& rig, const Vec3& target,
                                    const RandomizationSpec& spec, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0xCA3E7A));
  std::array<RigidPose, 2> out;
  for (std::size_t c = 0; c < rig.size(); ++c) {
    Vec3 eye = rig[c].center;
    Vec3 aim = target;
    for (int a = 0; a < 3; ++a) eye[a] += rng.uniform(-1.0, 1.0) * spec.camera_position_jitter[a];
    for (int a = 0; a < 3; ++a) aim[a] += rng.uniform(-1.0, 1.0) * spec.camera_target_jitter[a];
    out[c] = RigidPose::look_at(eye, aim);
  }
  return out;
}

Scene scene_at_time(const Scene& scene, const BeltConfig& belt, double dt) {
  if (dt == 0.0 || belt.speed == 0.0) return scene;
  return scene.translated(belt.speed * dt * belt.direction);
}

}  // namespace beltpick
