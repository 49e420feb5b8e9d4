#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "beltpick/camera_belt.hpp"
#include "beltpick/raster.hpp"
#include "beltpick/scene.hpp"

namespace beltpick {

struct SceneHit {
  double t = 0.0;
  std::uint32_t instance_id = 0;  // 0 for the belt
  std::int64_t face = -1;         // -1 for the belt
  Vec3 normal = Vec3::UnitZ();    // geometric, unit, facing the ray origin
  Vec3 barycentric = Vec3::Zero();
  bool belt = false;
};

std::optional<SceneHit> raycast(const Scene& scene, const Ray& ray,
                                double t_max = std::numeric_limits<double>::infinity());

// Same contract restricted to a single object; the belt is ignored.
std::optional<SceneHit> raycast_object(const PlacedObject& object, const Ray& ray,
                                       double t_max = std::numeric_limits<double>::infinity());

// Reference implementation without acceleration: every triangle of every
// object is tested. Kept in the library so tools can cross-check the BVH.
std::optional<SceneHit> raycast_brute_force(const Scene& scene, const Ray& ray,
                                            double t_max = std::numeric_limits<double>::infinity());

enum class NormalFrame { kWorld, kCamera };

struct RenderedView {
  DepthMap depth;
  NormalMap normals;
  InstanceMask mask;
};

// One ray per pixel center; depth is camera-frame z, 0 on a miss.
RenderedView render_view(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose,
                         NormalFrame frame = NormalFrame::kWorld);

DepthMap render_depth(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose);
NormalMap render_normals(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose,
                         NormalFrame frame = NormalFrame::kWorld);
InstanceMask render_instance_mask(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose);

// Camera-frame depth of the first mesh hit through pixel (u, v). Hits on
// faces turned away from the camera count as no surface, so a ray entering
// an open mesh through its boundary does not see the inside.
std::optional<double> mesh_depth_at(const Bvh& mesh, const CameraIntrinsics& intr, const RigidPose& pose, int u,
                                    int v);

// Depth of a bare mesh (no belt), e.g. a reconstruction.
DepthMap render_mesh_depth(const Bvh& mesh, const CameraIntrinsics& intr, const RigidPose& pose);

}  // namespace beltpick
