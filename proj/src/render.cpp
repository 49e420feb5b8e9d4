#include "beltpick/render.hpp"

#include <cmath>

#include "beltpick/parallel.hpp"

namespace beltpick {

namespace {

SceneHit make_object_hit(const PlacedObject& obj, const Ray& ray, const BvhHit& hit) {
  SceneHit out;
  out.t = hit.t;
  out.instance_id = obj.instance.instance_id;
  out.face = hit.face;
  out.barycentric = Vec3(1.0 - hit.b1 - hit.b2, hit.b1, hit.b2);
  Vec3 n = obj.mesh->face_normal(hit.face);
  if (n.dot(ray.dir) > 0.0) n = -n;
  out.normal = n;
  return out;
}

std::optional<SceneHit> hit_belt(const BeltSurface& belt, const Ray& ray, double t_max) {
  if (ray.dir.z() == 0.0) return std::nullopt;
  const double t = -ray.origin.z() / ray.dir.z();
  if (!(t > 1e-9) || t > t_max) return std::nullopt;
  const Vec3 p = ray.origin + t * ray.dir;
  if (!belt.contains(p.x(), p.y())) return std::nullopt;
  SceneHit out;
  out.t = t;
  out.belt = true;
  out.normal = ray.dir.z() < 0.0 ? Vec3::UnitZ() : Vec3(-Vec3::UnitZ());
  return out;
}

}  // namespace

std::optional<SceneHit> raycast_object(const PlacedObject& object, const Ray& ray, double t_max) {
  if (!std::isfinite(object.bounds.ray_entry(ray, t_max))) return std::nullopt;
  const auto hit = object.bvh->raycast(ray, t_max);
  if (!hit) return std::nullopt;
  return make_object_hit(object, ray, *hit);
}

std::optional<SceneHit> raycast(const Scene& scene, const Ray& ray, double t_max) {
  std::optional<SceneHit> best;
  double best_t = t_max;
  for (const auto& obj : scene.objects()) {
    if (obj.bounds.ray_entry(ray, best_t) > best_t) continue;
    const auto hit = obj.bvh->raycast(ray, best_t);
    if (hit && (!best || hit->t < best_t)) {
      best = make_object_hit(obj, ray, *hit);
      best_t = hit->t;
    }
  }
  if (auto belt = hit_belt(scene.belt(), ray, best_t); belt && (!best || belt->t < best_t)) best = belt;
  return best;
}

std::optional<SceneHit> raycast_brute_force(const Scene& scene, const Ray& ray, double t_max) {
  std::optional<SceneHit> best;
  double best_t = t_max;
  for (const auto& obj : scene.objects()) {
    const TriMesh& mesh = *obj.mesh;
    std::optional<BvhHit> obj_best;
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
      const auto hit = intersect_ray_triangle(ray, mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2), best_t);
      if (hit && (!obj_best || hit->t < obj_best->t)) obj_best = BvhHit{hit->t, static_cast<std::uint32_t>(f), hit->b1, hit->b2};
    }
    if (obj_best && (!best || obj_best->t < best_t)) {
      best = make_object_hit(obj, ray, *obj_best);
      best_t = obj_best->t;
    }
  }
  if (auto belt = hit_belt(scene.belt(), ray, best_t); belt && (!best || belt->t < best_t)) best = belt;
  return best;
}

RenderedView render_view(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose, NormalFrame frame) {
  intr.validate();
  RenderedView out{DepthMap(intr.width, intr.height, kInvalidDepth), NormalMap(intr.width, intr.height),
                   InstanceMask(intr.width, intr.height, 0)};
  const Vec3 axis = pose.rotation.col(2);
  parallel_for(static_cast<std::size_t>(intr.height), [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const int v = static_cast<int>(row);
      for (int u = 0; u < intr.width; ++u) {
        const Ray ray{pose.center, pixel_ray(intr, pose, Vec2(u, v))};
        const auto hit = raycast(scene, ray);
        if (!hit) continue;
        out.depth(u, v) = hit->t * ray.dir.dot(axis);
        out.normals.normal(u, v) = frame == NormalFrame::kWorld ? hit->normal : Vec3(pose.rotation.transpose() * hit->normal);
        out.normals.valid(u, v) = 1;
        out.mask(u, v) = hit->instance_id;
      }
    }
  });
  return out;
}

DepthMap render_depth(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose) {
  return render_view(scene, intr, pose).depth;
}

NormalMap render_normals(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose, NormalFrame frame) {
  return render_view(scene, intr, pose, frame).normals;
}

InstanceMask render_instance_mask(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose) {
  return render_view(scene, intr, pose).mask;
}

std::optional<double> mesh_depth_at(const Bvh& mesh, const CameraIntrinsics& intr, const RigidPose& pose, int u,
                                    int v) {
  const Ray ray{pose.center, pixel_ray(intr, pose, Vec2(u, v))};
  const auto hit = mesh.raycast(ray);
  if (!hit || mesh.mesh().face_normal(hit->face).dot(ray.dir) >= 0.0) return std::nullopt;
  return hit->t * ray.dir.dot(pose.rotation.col(2));
}

DepthMap render_mesh_depth(const Bvh& mesh, const CameraIntrinsics& intr, const RigidPose& pose) {
  intr.validate();
  DepthMap depth(intr.width, intr.height, kInvalidDepth);
  parallel_for(static_cast<std::size_t>(intr.height), [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const int v = static_cast<int>(row);
      for (int u = 0; u < intr.width; ++u) {
        const Ray ray{pose.center, pixel_ray(intr, pose, Vec2(u, v))};
        if (!std::isfinite(mesh.bounds().ray_entry(ray, std::numeric_limits<double>::infinity()))) continue;
        if (const auto d = mesh_depth_at(mesh, intr, pose, u, v)) depth(u, v) = *d;
      }
    }
  });
  return depth;
}

}  // namespace beltpick
