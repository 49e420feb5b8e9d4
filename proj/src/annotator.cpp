#include "beltpick/annotator.hpp"

#include <algorithm>
#include <cmath>

#include "beltpick/error.hpp"
#include "beltpick/parallel.hpp"
#include "beltpick/render.hpp"
#include "beltpick/rng.hpp"

namespace beltpick {

void SuctionCupSpec::validate() const {
  if (!(cup_radius > 0 && flexibility > 0 && collision_radius > 0 && collision_height > 0 && torque_limit > 0 &&
        gravity > 0 && standoff > 0))
    throw Error(Errc::kInvalidArgument, "suction cup parameters must be positive");
  if (ring_samples < 8) throw Error(Errc::kInvalidArgument, "ring_samples must be >= 8");
  if (collision_radius < cup_radius) throw Error(Errc::kInvalidArgument, "collision radius smaller than cup radius");
}

double compose_score(double seal, double wrench, double collision) {
  if (!(seal >= 0.0 && seal <= 1.0)) throw Error(Errc::kOutOfRange, "seal score outside [0,1]");
  if (!(wrench >= 0.0 && wrench <= 1.0)) throw Error(Errc::kOutOfRange, "wrench score outside [0,1]");
  if (collision != 0.0 && collision != 1.0) throw Error(Errc::kOutOfRange, "collision score must be 0 or 1");
  return seal * wrench * collision;
}

std::vector<SuctionCandidate> sample_candidates(const Scene& scene, int per_object, std::uint64_t seed) {
  if (per_object < 1) throw Error(Errc::kInvalidArgument, "need at least one candidate per object");
  std::vector<SuctionCandidate> out;
  out.reserve(scene.objects().size() * static_cast<std::size_t>(per_object));
  for (const auto& obj : scene.objects()) {
    const TriMesh& mesh = *obj.mesh;
    std::vector<double> cdf(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) cdf[f] = (total += mesh.face_area(f));
    SplitMix64 rng(derive_seed(seed, obj.instance.instance_id));
    for (int i = 0; i < per_object; ++i) {
      const double r = rng.uniform() * total;
      const auto f = static_cast<std::size_t>(
          std::min<std::ptrdiff_t>(std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin(),
                                   static_cast<std::ptrdiff_t>(cdf.size()) - 1));
      const double s = std::sqrt(rng.uniform());
      const double u2 = rng.uniform();
      const double b1 = s * (1.0 - u2);
      const double b2 = s * u2;
      const Vec3 p = (1.0 - s) * mesh.corner(f, 0) + b1 * mesh.corner(f, 1) + b2 * mesh.corner(f, 2);
      out.push_back({p, mesh.face_normal(f), obj.instance.instance_id});
    }
  }
  return out;
}

double seal_score(const Scene& scene, const SuctionCandidate& cand, const SuctionCupSpec& cup, double ring_phase) {
  const PlacedObject* obj = scene.find(cand.instance_id);
  if (obj == nullptr) return 0.0;
  const Vec3 d = cand.direction.normalized();
  Vec3 u;
  Vec3 v;
  orthonormal_basis(d, u, v);
  const double reach = cup.standoff + cup.flexibility;
  const Vec3 top = cand.point + cup.standoff * d;

  const auto center = raycast_object(*obj, Ray{top, -d}, reach);
  if (!center) return 0.0;

  std::vector<double> ring(static_cast<std::size_t>(cup.ring_samples));
  double mean = 0.0;
  for (int i = 0; i < cup.ring_samples; ++i) {
    const double theta = ring_phase + 2.0 * M_PI * i / cup.ring_samples;
    const Vec3 origin = top + cup.cup_radius * (std::cos(theta) * u + std::sin(theta) * v);
    const auto hit = raycast_object(*obj, Ray{origin, -d}, reach);
    if (!hit) return 0.0;
    ring[static_cast<std::size_t>(i)] = hit->t;
    mean += hit->t;
  }
  mean /= cup.ring_samples;
  double deviation = std::abs(center->t - mean);
  for (double t : ring) deviation = std::max(deviation, std::abs(t - mean));
  return std::max(0.0, 1.0 - deviation / cup.flexibility);
}

double wrench_from_lever(const Vec3& center_of_mass, const Vec3& point, double mass_kg, const SuctionCupSpec& cup) {
  const Vec3 weight(0.0, 0.0, -mass_kg * cup.gravity * 1e-3);  // N
  const double torque = (center_of_mass - point).cross(weight).norm();
  return std::max(0.0, 1.0 - torque / cup.torque_limit);
}

double wrench_score(const Scene& scene, const SuctionCandidate& cand, const SuctionCupSpec& cup) {
  const PlacedObject* obj = scene.find(cand.instance_id);
  if (obj == nullptr) return 0.0;
  return wrench_from_lever(obj->center_of_mass, cand.point, obj->asset->mass_kg, cup);
}

double collision_score(const Scene& scene, const SuctionCandidate& cand, const SuctionCupSpec& cup) {
  const Cylinder cyl{cand.point, cand.direction.normalized(), cup.collision_radius, cup.collision_height};
  if (cyl.min_z() < 0.0) return 0.0;
  const Aabb box = cyl.bounds();
  for (const auto& obj : scene.objects()) {
    if (obj.instance.instance_id == cand.instance_id || !obj.bounds.overlaps(box)) continue;
    const TriMesh& mesh = *obj.mesh;
    bool hit = false;
    obj.bvh->visit_overlapping(box, [&](std::uint32_t f) {
      if (!hit) hit = triangle_intersects_cylinder(mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2), cyl);
    });
    if (hit) return 0.0;
  }
  return 1.0;
}

SuctionLabel label_candidate(const Scene& scene, const SuctionCandidate& cand, const SuctionCupSpec& cup) {
  SuctionLabel label;
  label.seal = seal_score(scene, cand, cup);
  label.wrench = wrench_score(scene, cand, cup);
  label.collision = collision_score(scene, cand, cup);
  label.overall = compose_score(label.seal, label.wrench, label.collision);
  return label;
}

AnnotationSet annotate_scene(const Scene& scene, const SuctionCupSpec& cup, int per_object, std::uint64_t seed,
                             const std::string& scene_id) {
  cup.validate();
  const auto candidates = sample_candidates(scene, per_object, seed);
  AnnotationSet set;
  set.scene_id = scene_id;
  set.records.resize(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& c = candidates[i];
      set.records[i] = {scene_id, c.instance_id, c.point, c.direction, label_candidate(scene, c, cup)};
    }
  });
  return set;
}

SealMap render_seal_map(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose,
                        const SuctionCupSpec& cup, int stride) {
  return render_seal_map(scene, render_view(scene, intr, pose, NormalFrame::kWorld), intr, pose, cup, stride);
}

SealMap render_seal_map(const Scene& scene, const RenderedView& view, const CameraIntrinsics& intr,
                        const RigidPose& pose, const SuctionCupSpec& cup, int stride) {
  if (stride < 1) throw Error(Errc::kInvalidArgument, "stride must be >= 1");
  cup.validate();
  if (!view.depth.same_shape(intr.width, intr.height))
    throw Error(Errc::kDimensionMismatch, "render does not match intrinsics");
  const int w = intr.width;
  const int h = intr.height;

  auto evaluate = [&](int u, int v) {
    const SuctionCandidate cand{backproject(intr, pose, Vec2(u, v), view.depth(u, v)), view.normals.normal(u, v),
                                view.mask(u, v)};
    return seal_score(scene, cand, cup);
  };

  // Values on the sampling lattice; NaN where the lattice pixel is not on an object.
  const int gw = (w - 1) / stride + 1;
  const int gh = (h - 1) / stride + 1;
  Raster<double> lattice(gw, gh, std::numeric_limits<double>::quiet_NaN());
  parallel_for(static_cast<std::size_t>(gh), [&](std::size_t begin, std::size_t end) {
    for (std::size_t gv = begin; gv < end; ++gv)
      for (int gu = 0; gu < gw; ++gu) {
        const int u = gu * stride;
        const int v = static_cast<int>(gv) * stride;
        if (view.mask(u, v) != 0) lattice(gu, static_cast<int>(gv)) = evaluate(u, v);
      }
  });

  SealMap out(w, h);
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const int v = static_cast<int>(row);
      for (int u = 0; u < w; ++u) {
        const std::uint32_t id = view.mask(u, v);
        if (id == 0) continue;
        const int gu = u / stride;
        const int gv = v / stride;
        double value;
        if (u % stride == 0 && v % stride == 0) {
          value = lattice(gu, gv);
        } else {
          const double fu = static_cast<double>(u - gu * stride) / stride;
          const double fv = static_cast<double>(v - gv * stride) / stride;
          double acc = 0.0;
          double wsum = 0.0;
          for (int k = 0; k < 4; ++k) {
            const int cu = gu + (k & 1);
            const int cv = gv + (k >> 1);
            if (cu >= gw || cv >= gh) continue;
            const double sample = lattice(cu, cv);
            if (std::isnan(sample) || view.mask(cu * stride, cv * stride) != id) continue;
            const double wgt = ((k & 1) ? fu : 1.0 - fu) * ((k >> 1) ? fv : 1.0 - fv);
            acc += wgt * sample;
            wsum += wgt;
          }
          value = wsum > 0.0 ? acc / wsum : evaluate(u, v);
        }
        out.value(u, v) = value;
        out.valid(u, v) = 1;
      }
    }
  });
  return out;
}

NormalMap render_normal_map(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose) {
  return render_normals(scene, intr, pose, NormalFrame::kWorld);
}

}  // namespace beltpick
