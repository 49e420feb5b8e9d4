#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beltpick/camera_belt.hpp"
#include "beltpick/raster.hpp"
#include "beltpick/render.hpp"
#include "beltpick/scene.hpp"

namespace beltpick {

/// Suction cup geometry and the limits of the analytic scoring model.
struct SuctionCupSpec {
  double cup_radius = 10.0;        // mm
  int ring_samples = 24;
  double flexibility = 5.0;        // max rim deviation before the seal breaks, mm
  double collision_radius = 12.0;  // mm
  double collision_height = 30.0;  // mm
  double torque_limit = 100.0;     // N*mm
  double gravity = 9810.0;         // mm/s^2, acting along -z
  double standoff = 20.0;          // ring ray start height above the contact point, mm

  void validate() const;
};

struct SuctionCandidate {
  Vec3 point;
  Vec3 direction;  // unit, pointing out of the surface
  std::uint32_t instance_id = 0;
};

struct SuctionLabel {
  double seal = 0.0;
  double wrench = 0.0;
  double collision = 0.0;
  double overall = 0.0;
};

// Product of the three component scores; throws kOutOfRange when a component
// leaves its domain ([0,1] for seal and wrench, {0,1} for collision).
double compose_score(double seal, double wrench, double collision);

std::vector<SuctionCandidate> sample_candidates(const Scene& scene, int per_object, std::uint64_t seed);

/// Ring-deviation seal model. Rays are cast along -d from `standoff` above the
/// contact point, one through the center and `ring_samples` on the rim circle,
/// against the candidate's own object only. A miss within standoff +
/// flexibility means the rim cannot close: 0. Otherwise the largest
/// deviation of any hit distance (center included) from the rim mean is
/// compared against the flexibility.
/// `ring_phase` rotates the rim samples about d (radians).
double seal_score(const Scene& scene, const SuctionCandidate& cand, const SuctionCupSpec& cup, double ring_phase = 0.0);

// Gravity torque about the contact point against the cup's torque limit.
double wrench_from_lever(const Vec3& center_of_mass, const Vec3& point, double mass_kg, const SuctionCupSpec& cup);
double wrench_score(const Scene& scene, const SuctionCandidate& cand, const SuctionCupSpec& cup);

// 1 when the cup body (a cylinder along d) clears every other object and the
// belt half-space z < 0; the candidate's own object is exempt.
double collision_score(const Scene& scene, const SuctionCandidate& cand, const SuctionCupSpec& cup);

SuctionLabel label_candidate(const Scene& scene, const SuctionCandidate& cand, const SuctionCupSpec& cup);

struct AnnotationRecord {
  std::string scene_id;
  std::uint32_t instance_id = 0;
  Vec3 point;
  Vec3 direction;
  SuctionLabel label;
};

struct AnnotationSet {
  std::string scene_id;
  std::vector<AnnotationRecord> records;
};

AnnotationSet annotate_scene(const Scene& scene, const SuctionCupSpec& cup, int per_object, std::uint64_t seed,
                             const std::string& scene_id = "scene");

/// Seal score at every `stride`-th pixel on an object, filled in between by
/// bilinear interpolation over sampled neighbours on the same object. Belt and
/// background pixels are invalid.
SealMap render_seal_map(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose,
                        const SuctionCupSpec& cup, int stride);

// Same, reusing a world-normal render of `scene` from this camera.
SealMap render_seal_map(const Scene& scene, const RenderedView& view, const CameraIntrinsics& intr,
                        const RigidPose& pose, const SuctionCupSpec& cup, int stride);

// World-frame surface normals (belt included).
NormalMap render_normal_map(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose);

}  // namespace beltpick
