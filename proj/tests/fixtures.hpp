#pragma once

#include <string>
#include <vector>

#include "beltpick/scene.hpp"

namespace beltpick::test {

struct Placement {
  std::string asset;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

// Objects resting on the belt at the given footprint centers, ids from 1.
inline Scene place(const AssetLibrary& lib, const std::vector<Placement>& items) {
  std::vector<ObjectInstance> instances;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const ObjectAsset& asset = lib.get(items[i].asset);
    const RigidPose rot = RigidPose::from_yaw(items[i].yaw, Vec3::Zero());
    Aabb box;
    for (const Vec3& v : asset.mesh->vertices) box.extend(rot.to_world(v));
    ObjectInstance inst;
    inst.asset_id = items[i].asset;
    inst.pose = RigidPose::from_yaw(items[i].yaw, Vec3(items[i].x - box.center().x(), items[i].y - box.center().y(), -box.lo.z()));
    inst.instance_id = static_cast<std::uint32_t>(i + 1);
    instances.push_back(inst);
  }
  return Scene(std::move(instances), lib);
}

inline AssetLibrary library_with(const std::string& id, TriMesh mesh, double mass_kg, bool transparent = false) {
  AssetLibrary lib;
  mesh.validate_and_classify();
  lib.add(make_asset(id, std::move(mesh), mass_kg, transparent));
  return lib;
}

}  // namespace beltpick::test
