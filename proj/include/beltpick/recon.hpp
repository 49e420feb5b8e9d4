#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "beltpick/camera_belt.hpp"
#include "beltpick/mesh.hpp"
#include "beltpick/raster.hpp"
#include "beltpick/render.hpp"
#include "beltpick/scene.hpp"

namespace beltpick {

/// Voxel grid over the reconstruction zone. Voxel (i, j, k) is centered at
/// origin + voxel_size * (i, j, k); linear index is x-fastest.
struct GridSpec {
  Vec3 origin{5.0, -195.0, 5.0};
  double voxel_size = 10.0;
  std::array<int, 3> dims{50, 40, 30};
  double truncation = 30.0;

  void validate() const;
  std::size_t count() const { return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  std::array<int, 3> coords(std::size_t idx) const {
    return {static_cast<int>(idx % dims[0]), static_cast<int>((idx / dims[0]) % dims[1]),
            static_cast<int>(idx / (static_cast<std::size_t>(dims[0]) * dims[1]))};
  }
  bool inside(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  Vec3 center(int i, int j, int k) const { return origin + voxel_size * Vec3(i, j, k); }
  Vec3 center(std::size_t idx) const {
    const auto c = coords(idx);
    return center(c[0], c[1], c[2]);
  }
  // Box spanned by the voxel cells (half a voxel beyond the outer centers).
  Aabb bounds() const;

  bool operator==(const GridSpec& o) const {
    return origin == o.origin && voxel_size == o.voxel_size && dims == o.dims && truncation == o.truncation;
  }
};

/// Normalized truncated signed distance, negative inside. Unobserved voxels
/// have weight 0 and value 1.
struct TsdfVolume {
  GridSpec spec;
  std::vector<double> values;
  std::vector<double> weights;

  TsdfVolume() = default;
  explicit TsdfVolume(const GridSpec& grid)
      : spec(grid), values(grid.count(), 1.0), weights(grid.count(), 0.0) {}

  double value(int i, int j, int k) const { return values[spec.index(i, j, k)]; }
  double weight(int i, int j, int k) const { return weights[spec.index(i, j, k)]; }
  bool observed(std::size_t idx) const { return weights[idx] > 0.0; }

  void validate() const;
};

struct DepthFrame {
  DepthMap depth;
  Raster<std::uint8_t> valid;
};

// Produces depth for a view of a capture window (its intrinsics and, for
// windows, belt-corrected pose). Stands in for a learned depth estimator.
using DepthProvider = std::function<DepthFrame(const CaptureView&)>;

/// Projective fusion of one depth image: nearest-pixel lookup, unit weights,
/// voxels more than one truncation behind the surface are left untouched.
void integrate(TsdfVolume& volume, const DepthMap& depth, const Raster<std::uint8_t>& valid,
               const CameraIntrinsics& intr, const RigidPose& pose);

// Integrates every view of the window in order.
TsdfVolume fuse(const CaptureWindow& window, const DepthProvider& provider, const GridSpec& spec);

// Reads the depth stored on each view (throws kInvalidArgument when absent).
DepthProvider stored_depth_provider();

struct NoiseSpec {
  double sigma = 0.0;               // per-pixel gaussian, mm
  double affine_scale_sigma = 0.0;  // per-view d' = a*d + b, a ~ 1 + N(0, s)
  double affine_shift_sigma = 0.0;  // b ~ N(0, s) mm
  double transparent_dropout = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Ground-truth render followed by per-view affine distortion, per-pixel
/// gaussian noise and dropout on transparent objects, in that order. The noise
/// stream is keyed on (seed, capture_key).
DepthFrame noisy_depth(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose,
                       std::uint64_t capture_key, const NoiseSpec& noise);

// Same noise model applied to an existing ground-truth render of `scene`.
DepthFrame apply_depth_noise(const RenderedView& view, const Scene& scene, std::uint64_t capture_key,
                             const NoiseSpec& noise);

// Renders `scene` from each view's pose; the scene must already be expressed
// in the window's content frame.
DepthProvider make_noisy_provider(std::shared_ptr<const Scene> scene, const NoiseSpec& noise);

/// Zero level set extraction. Only cells whose eight corners are observed
/// emit triangles; vertices are shared between neighbouring cells, and
/// ambiguous faces always separate the inside corners so adjacent cells agree.
/// Throws kEmptySurface.
TriMesh marching_cubes(const TsdfVolume& volume, double iso = 0.0);

DepthMap render_depth_from_mesh(const TriMesh& mesh, const CameraIntrinsics& intr, const RigidPose& pose);

struct GtTsdfResult {
  TsdfVolume volume;
  bool used_fallback = false;  // some object was open; its sign came from face normals
};

/// Exact truncated signed distance to the scene (objects and belt plane).
/// Inside/outside by ray parity; throws kNonWatertight on open meshes unless
/// `allow_fallback`, in which case the nearest face's normal decides the sign.
GtTsdfResult gt_tsdf(const Scene& scene, const GridSpec& spec, bool allow_fallback = false);

// Analytic sphere field, handy for tests and calibration runs.
TsdfVolume sphere_tsdf(const GridSpec& spec, const Vec3& center, double radius);

}  // namespace beltpick
