#include "beltpick/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "beltpick/bvh.hpp"
#include "beltpick/error.hpp"
#include "beltpick/parallel.hpp"
#include "beltpick/render.hpp"
#include "beltpick/rng.hpp"

namespace beltpick {

void GridSpec::validate() const {
  if (!(voxel_size > 0.0)) throw Error(Errc::kInvalidArgument, "voxel size must be positive");
  if (!(truncation >= voxel_size)) throw Error(Errc::kInvalidArgument, "truncation must be >= voxel size");
  for (int d : dims)
    if (d < 2) throw Error(Errc::kInvalidArgument, "grid needs at least 2 voxels per axis");
  if (!origin.allFinite()) throw Error(Errc::kInvalidArgument, "grid origin not finite");
}

Aabb GridSpec::bounds() const {
  const Vec3 half = Vec3::Constant(voxel_size / 2.0);
  return {origin - half, center(dims[0] - 1, dims[1] - 1, dims[2] - 1) + half};
}

void TsdfVolume::validate() const {
  spec.validate();
  if (values.size() != spec.count() || weights.size() != spec.count())
    throw Error(Errc::kDimensionMismatch, "volume payload does not match grid dims");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(std::abs(values[i]) <= 1.0)) throw Error(Errc::kInvariantViolation, "TSDF value outside [-1,1]");
    if (!(weights[i] >= 0.0)) throw Error(Errc::kInvariantViolation, "negative weight");
    if (weights[i] == 0.0 && values[i] != 1.0) throw Error(Errc::kInvariantViolation, "unobserved voxel must hold 1");
  }
}

void integrate(TsdfVolume& volume, const DepthMap& depth, const Raster<std::uint8_t>& valid,
               const CameraIntrinsics& intr, const RigidPose& pose) {
  intr.validate();
  if (!depth.same_shape(intr.width, intr.height) || !valid.same_shape(depth))
    throw Error(Errc::kDimensionMismatch, "depth/mask size does not match intrinsics");
  const GridSpec& spec = volume.spec;
  const double mu = spec.truncation;
  parallel_for(spec.count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const Vec3 c = pose.to_local(spec.center(idx));
      if (!(c.z() > 0.0)) continue;
      const double uf = intr.fx * c.x() / c.z() + intr.cx;
      const double vf = intr.fy * c.y() / c.z() + intr.cy;
      const int u = static_cast<int>(std::floor(uf + 0.5));
      const int v = static_cast<int>(std::floor(vf + 0.5));
      if (!depth.inside(u, v) || !valid(u, v)) continue;
      const double d = depth(u, v);
      if (!(d > 0.0)) continue;
      const double sdf = d - c.z();
      if (!(sdf > -mu)) continue;
      const double tsdf = std::clamp(sdf / mu, -1.0, 1.0);
      const double w = volume.weights[idx];
      volume.values[idx] = (w * volume.values[idx] + tsdf) / (w + 1.0);
      volume.weights[idx] = w + 1.0;
    }
  });
}

TsdfVolume fuse(const CaptureWindow& window, const DepthProvider& provider, const GridSpec& spec) {
  spec.validate();
  TsdfVolume volume(spec);
  for (const CaptureView& view : window.views) {
    const DepthFrame frame = provider(view);
    integrate(volume, frame.depth, frame.valid, view.intrinsics, view.pose);
  }
  return volume;
}

DepthProvider stored_depth_provider() {
  return [](const CaptureView& view) {
    if (!view.depth) throw Error(Errc::kInvalidArgument, "view carries no depth raster");
    DepthFrame frame{*view.depth, Raster<std::uint8_t>(view.depth->width(), view.depth->height(), 0)};
    for (std::size_t i = 0; i < frame.depth.size(); ++i) frame.valid[i] = frame.depth[i] > 0.0 ? 1 : 0;
    return frame;
  };
}

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0 && affine_scale_sigma >= 0.0 && affine_shift_sigma >= 0.0))
    throw Error(Errc::kInvalidArgument, "noise sigmas must be >= 0");
  if (!(transparent_dropout >= 0.0 && transparent_dropout <= 1.0))
    throw Error(Errc::kInvalidArgument, "dropout probability outside [0,1]");
}

DepthFrame noisy_depth(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose,
                       std::uint64_t capture_key, const NoiseSpec& noise) {
  return apply_depth_noise(render_view(scene, intr, pose), scene, capture_key, noise);
}

DepthFrame apply_depth_noise(const RenderedView& view, const Scene& scene, std::uint64_t capture_key,
                             const NoiseSpec& noise) {
  noise.validate();
  DepthFrame frame{view.depth, Raster<std::uint8_t>(view.depth.width(), view.depth.height(), 0)};
  SplitMix64 rng(derive_seed(noise.seed, capture_key));
  const double a = noise.affine_scale_sigma > 0.0 ? 1.0 + noise.affine_scale_sigma * rng.gaussian() : 1.0;
  const double b = noise.affine_shift_sigma > 0.0 ? noise.affine_shift_sigma * rng.gaussian() : 0.0;
  for (std::size_t i = 0; i < frame.depth.size(); ++i) {
    double d = frame.depth[i];
    if (!(d > 0.0)) continue;
    d = a * d + b;
    if (noise.sigma > 0.0) d += noise.sigma * rng.gaussian();
    if (noise.transparent_dropout > 0.0 && view.mask[i] != 0) {
      const PlacedObject* obj = scene.find(view.mask[i]);
      if (obj != nullptr && obj->asset->transparent && rng.uniform() < noise.transparent_dropout) d = 0.0;
    }
    frame.depth[i] = d > 0.0 ? d : kInvalidDepth;
    frame.valid[i] = d > 0.0 ? 1 : 0;
  }
  return frame;
}

DepthProvider make_noisy_provider(std::shared_ptr<const Scene> scene, const NoiseSpec& noise) {
  noise.validate();
  return [scene = std::move(scene), noise](const CaptureView& view) {
    return noisy_depth(*scene, view.intrinsics, view.pose, view.capture_key, noise);
  };
}

DepthMap render_depth_from_mesh(const TriMesh& mesh, const CameraIntrinsics& intr, const RigidPose& pose) {
  if (mesh.triangles.empty()) return DepthMap(intr.width, intr.height, kInvalidDepth);
  const Bvh bvh(std::make_shared<const TriMesh>(mesh));
  return render_mesh_depth(bvh, intr, pose);
}

GtTsdfResult gt_tsdf(const Scene& scene, const GridSpec& spec, bool allow_fallback) {
  spec.validate();
  GtTsdfResult result{TsdfVolume(spec), false};
  for (const auto& obj : scene.objects()) {
    if (!obj.mesh->watertight) {
      if (!allow_fallback)
        throw Error(Errc::kNonWatertight, "instance " + std::to_string(obj.instance.instance_id) + " is open");
      result.used_fallback = true;
    }
  }
  const double mu = spec.truncation;
  const Vec3 parity_dir = Vec3(0.5773, 0.5774, 0.5775).normalized();
  TsdfVolume& vol = result.volume;
  parallel_for(spec.count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const Vec3 x = spec.center(idx);
      double best_d2 = std::numeric_limits<double>::infinity();
      bool inside = false;
      bool have_surface = false;
      // Belt plane (a half-space below z = 0).
      if (scene.belt().contains(x.x(), x.y())) {
        best_d2 = x.z() * x.z();
        inside = x.z() < 0.0;
        have_surface = true;
      }
      for (const auto& obj : scene.objects()) {
        const bool closed = obj.mesh->watertight;
        if (closed && obj.bounds.contains(x) && obj.bvh->count_crossings(Ray{x, parity_dir}) % 2 == 1) inside = true;
        if (obj.bounds.distance_sq(x) > best_d2) {
          continue;
        }
        const auto cp = obj.bvh->closest_point(x, best_d2);
        if (!cp) continue;
        if (!have_surface || cp->distance_sq < best_d2) {
          best_d2 = cp->distance_sq;
          have_surface = true;
          if (!closed) inside = (x - cp->point).dot(obj.mesh->face_normal(cp->face)) < 0.0;
        }
      }
      const double dist = have_surface ? std::sqrt(best_d2) : mu;
      vol.values[idx] = std::clamp((inside ? -dist : dist) / mu, -1.0, 1.0);
      vol.weights[idx] = 1.0;
    }
  });
  return result;
}

TsdfVolume sphere_tsdf(const GridSpec& spec, const Vec3& center, double radius) {
  spec.validate();
  TsdfVolume vol(spec);
  for (std::size_t idx = 0; idx < spec.count(); ++idx) {
    const double sdf = (spec.center(idx) - center).norm() - radius;
    vol.values[idx] = std::clamp(sdf / spec.truncation, -1.0, 1.0);
    vol.weights[idx] = 1.0;
  }
  return vol;
}

}  // namespace beltpick
