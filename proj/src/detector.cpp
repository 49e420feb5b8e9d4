#include "beltpick/detector.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "beltpick/bvh.hpp"
#include "beltpick/error.hpp"
#include "beltpick/parallel.hpp"

namespace beltpick {

namespace {

constexpr int kNeighbors[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};

// Distance from q to a solid finite cylinder.
double distance_to_cylinder(const Vec3& q, const Cylinder& cyl) {
  const Vec3 rel = q - cyl.base;
  const double s = rel.dot(cyl.axis);
  const double radial = (rel - s * cyl.axis).norm();
  const double dr = std::max(0.0, radial - cyl.radius);
  const double ds = std::max({0.0, -s, s - cyl.height});
  return std::sqrt(dr * dr + ds * ds);
}

}  // namespace

const char* unobserved_mode_name(UnobservedMode mode) {
  switch (mode) {
    case UnobservedMode::kEmpty: return "empty";
    case UnobservedMode::kOccupied: return "occupied";
    case UnobservedMode::kEnclosed: return "enclosed";
  }
  return "?";
}

UnobservedMode parse_unobserved_mode(const std::string& name) {
  if (name == "empty") return UnobservedMode::kEmpty;
  if (name == "occupied") return UnobservedMode::kOccupied;
  if (name == "enclosed") return UnobservedMode::kEnclosed;
  throw Error(Errc::kInvalidArgument, "unknown unobserved mode '" + name + "'");
}

void DetectorConfig::validate() const {
  if (k < 1) throw Error(Errc::kInvalidArgument, "k must be >= 1");
  if (stride < 1) throw Error(Errc::kInvalidArgument, "stride must be >= 1");
  if (!(seal_threshold >= 0.0 && seal_threshold <= 1.0))
    throw Error(Errc::kInvalidArgument, "seal threshold outside [0,1]");
  if (!(snap_epsilon >= 0.0)) throw Error(Errc::kInvalidArgument, "snap epsilon must be >= 0");
  if (!(density > 0.0)) throw Error(Errc::kInvalidArgument, "density must be positive");
}

Occupancy occupancy_from_tsdf(const TsdfVolume& volume, UnobservedMode mode, double iso) {
  const GridSpec& g = volume.spec;
  Occupancy occ{g, std::vector<std::uint8_t>(g.count(), 0)};
  for (std::size_t idx = 0; idx < g.count(); ++idx) {
    if (volume.weights[idx] > 0.0)
      occ.occupied[idx] = volume.values[idx] < iso ? 1 : 0;
    else
      occ.occupied[idx] = mode == UnobservedMode::kOccupied ? 1 : 0;
  }
  if (mode != UnobservedMode::kEnclosed) return occ;

  // Flood free space through unobserved voxels, starting from observed free
  // voxels and from unobserved voxels on the grid walls and ceiling (the floor
  // rests on the belt, so nothing enters from below).
  const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
  std::vector<std::uint8_t> reached(g.count(), 0);
  std::deque<std::size_t> queue;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t idx = g.index(i, j, k);
        const bool observed = volume.weights[idx] > 0.0;
        const bool wall = i == 0 || j == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
        if ((observed && !occ.occupied[idx]) || (!observed && wall)) {
          reached[idx] = 1;
          queue.push_back(idx);
        }
      }
  while (!queue.empty()) {
    const std::size_t idx = queue.front();
    queue.pop_front();
    const auto c = g.coords(idx);
    for (const auto& n : kNeighbors) {
      const int i = c[0] + n[0], j = c[1] + n[1], k = c[2] + n[2];
      if (!g.inside(i, j, k)) continue;
      const std::size_t nidx = g.index(i, j, k);
      if (reached[nidx] || volume.weights[nidx] > 0.0) continue;
      reached[nidx] = 1;
      queue.push_back(nidx);
    }
  }
  for (std::size_t idx = 0; idx < g.count(); ++idx)
    if (!(volume.weights[idx] > 0.0)) occ.occupied[idx] = reached[idx] ? 0 : 1;
  return occ;
}

ComponentLabeling connected_components(const Occupancy& occupancy) {
  const GridSpec& g = occupancy.spec;
  ComponentLabeling out{g, std::vector<std::uint32_t>(g.count(), 0), {}, {}, {}};
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < g.count(); ++seed) {
    if (!occupancy.occupied[seed] || out.labels[seed] != 0) continue;
    const auto id = static_cast<std::uint32_t>(out.voxel_count.size() + 1);
    std::size_t count = 0;
    Vec3 sum = Vec3::Zero();
    out.labels[seed] = id;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      ++count;
      sum += g.center(idx);
      const auto c = g.coords(idx);
      for (const auto& n : kNeighbors) {
        const int i = c[0] + n[0], j = c[1] + n[1], k = c[2] + n[2];
        if (!g.inside(i, j, k)) continue;
        const std::size_t nidx = g.index(i, j, k);
        if (occupancy.occupied[nidx] && out.labels[nidx] == 0) {
          out.labels[nidx] = id;
          stack.push_back(nidx);
        }
      }
    }
    out.voxel_count.push_back(count);
    out.centroid.push_back(sum / static_cast<double>(count));
    out.volume.push_back(static_cast<double>(count) * g.voxel_size * g.voxel_size * g.voxel_size);
  }
  return out;
}

std::vector<std::uint8_t> surface_mask(const Occupancy& occupancy) {
  const GridSpec& g = occupancy.spec;
  std::vector<std::uint8_t> surface(g.count(), 0);
  for (std::size_t idx = 0; idx < g.count(); ++idx) {
    if (!occupancy.occupied[idx]) continue;
    const auto c = g.coords(idx);
    for (const auto& n : kNeighbors) {
      const int i = c[0] + n[0], j = c[1] + n[1], k = c[2] + n[2];
      if (g.inside(i, j, k) && !occupancy.occupied[g.index(i, j, k)]) {
        surface[idx] = 1;
        break;
      }
    }
  }
  return surface;
}

std::vector<double> wrench_volume(const ComponentLabeling& labeling, const std::vector<std::uint8_t>& surface,
                                  const SuctionCupSpec& cup, double density) {
  const GridSpec& g = labeling.spec;
  std::vector<double> wrench(g.count(), 0.0);
  for (std::size_t idx = 0; idx < g.count(); ++idx) {
    const std::uint32_t id = labeling.labels[idx];
    if (id == 0 || !surface[idx]) continue;
    const double mass = labeling.volume[id - 1] * density;
    wrench[idx] = wrench_from_lever(labeling.centroid[id - 1], g.center(idx), mass, cup);
  }
  return wrench;
}

std::optional<Vec3> tsdf_gradient(const TsdfVolume& volume, int i, int j, int k) {
  const GridSpec& g = volume.spec;
  Vec3 grad;
  const int c[3] = {i, j, k};
  for (int axis = 0; axis < 3; ++axis) {
    int lo[3] = {i, j, k};
    int hi[3] = {i, j, k};
    lo[axis] = std::max(0, c[axis] - 1);
    hi[axis] = std::min(g.dims[axis] - 1, c[axis] + 1);
    grad[axis] = (volume.value(hi[0], hi[1], hi[2]) - volume.value(lo[0], lo[1], lo[2])) / (hi[axis] - lo[axis]);
  }
  const double norm = grad.norm();
  if (!(norm >= 1e-6)) return std::nullopt;
  return Vec3(grad / norm);
}

std::vector<std::uint8_t> collision_volume(const TsdfVolume& volume, const ComponentLabeling& labeling,
                                           const std::vector<std::uint8_t>& surface, const SuctionCupSpec& cup) {
  const GridSpec& g = volume.spec;
  std::vector<std::uint8_t> collision(g.count(), 0);
  const double reach = g.voxel_size / 2.0;
  parallel_for(g.count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      if (!surface[idx]) continue;
      const auto c = g.coords(idx);
      const auto dir = tsdf_gradient(volume, c[0], c[1], c[2]);
      if (!dir) continue;
      const Cylinder cyl{g.center(idx), *dir, cup.collision_radius, cup.collision_height};
      if (cyl.min_z() < 0.0) continue;
      const Aabb box = cyl.bounds().inflated(reach);
      int lo[3];
      int hi[3];
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::max(0, static_cast<int>(std::ceil((box.lo[a] - g.origin[a]) / g.voxel_size)));
        hi[a] = std::min(g.dims[a] - 1, static_cast<int>(std::floor((box.hi[a] - g.origin[a]) / g.voxel_size)));
      }
      const std::uint32_t own = labeling.labels[idx];
      bool blocked = false;
      for (int k = lo[2]; k <= hi[2] && !blocked; ++k)
        for (int j = lo[1]; j <= hi[1] && !blocked; ++j)
          for (int i = lo[0]; i <= hi[0] && !blocked; ++i) {
            const std::uint32_t other = labeling.labels[g.index(i, j, k)];
            if (other == 0 || other == own) continue;
            blocked = distance_to_cylinder(g.center(i, j, k), cyl) <= reach;
          }
      collision[idx] = blocked ? 0 : 1;
    }
  });
  return collision;
}

ScoreVolume score_volume(const TsdfVolume& volume, const SuctionCupSpec& cup, const DetectorConfig& config) {
  const Occupancy occ = occupancy_from_tsdf(volume, config.unobserved);
  const ComponentLabeling labeling = connected_components(occ);
  ScoreVolume out;
  out.spec = volume.spec;
  out.surface = surface_mask(occ);
  out.wrench = wrench_volume(labeling, out.surface, cup, config.density);
  out.collision = collision_volume(volume, labeling, out.surface, cup);
  out.components = labeling.count();
  return out;
}

std::vector<SealProposal> grid_sample_seal(const SealMap& seal, const DetectorConfig& config) {
  const int w = seal.value.width();
  const int h = seal.value.height();
  const int s = config.stride;
  std::vector<SealProposal> out;
  for (int cv = 0; cv < h; cv += s)
    for (int cu = 0; cu < w; cu += s) {
      std::optional<SealProposal> best;
      for (int v = cv; v < std::min(h, cv + s); ++v)
        for (int u = cu; u < std::min(w, cu + s); ++u) {
          if (!seal.valid(u, v)) continue;
          const double val = seal.value(u, v);
          if (!best || val > best->seal) best = SealProposal{u, v, val};
        }
      if (best && best->seal >= config.seal_threshold) out.push_back(*best);
    }
  return out;
}

std::vector<SuctionPoseResult> lift(const std::vector<SealProposal>& proposals, const DepthMap& depth,
                                    const NormalMap& normals, const CameraIntrinsics& intr, const RigidPose& pose,
                                    int view_index) {
  std::vector<SuctionPoseResult> out;
  out.reserve(proposals.size());
  for (const SealProposal& prop : proposals) {
    if (!depth.inside(prop.u, prop.v)) continue;
    const double d = depth(prop.u, prop.v);
    if (!(d > 0.0) || !normals.valid(prop.u, prop.v)) continue;
    const Vec3 n = normals.normal(prop.u, prop.v);
    if (!(n.norm() > 0.0)) continue;
    SuctionPoseResult r;
    r.point = backproject(intr, pose, Vec2(prop.u, prop.v), d);
    r.direction = n.normalized();
    r.seal = prop.seal;
    r.u = prop.u;
    r.v = prop.v;
    r.view = view_index;
    out.push_back(r);
  }
  return out;
}

std::optional<std::size_t> nearest_voxel(const GridSpec& spec, const Vec3& p) {
  if (!spec.bounds().contains(p)) return std::nullopt;
  int c[3];
  for (int a = 0; a < 3; ++a) {
    // Halfway points round down so ties go to the lower index.
    const double f = (p[a] - spec.origin[a]) / spec.voxel_size;
    c[a] = std::clamp(static_cast<int>(std::ceil(f - 0.5)), 0, spec.dims[a] - 1);
  }
  return spec.index(c[0], c[1], c[2]);
}

std::vector<SuctionPoseResult> assign_scores(const std::vector<SuctionPoseResult>& candidates,
                                             const ScoreVolume& scores, double snap_epsilon) {
  const GridSpec& g = scores.spec;
  const Aabb grid_box = g.bounds();
  const double eps2 = snap_epsilon * snap_epsilon;
  std::vector<SuctionPoseResult> out;
  for (const SuctionPoseResult& cand : candidates) {
    if (!grid_box.contains(cand.point)) continue;
    int lo[3];
    int hi[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::ceil((cand.point[a] - snap_epsilon - g.origin[a]) / g.voxel_size)));
      hi[a] = std::min(g.dims[a] - 1,
                       static_cast<int>(std::floor((cand.point[a] + snap_epsilon - g.origin[a]) / g.voxel_size)));
    }
    std::optional<std::size_t> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) {
          const std::size_t idx = g.index(i, j, k);
          if (!scores.surface[idx]) continue;
          const double d2 = (g.center(idx) - cand.point).squaredNorm();
          if (d2 <= eps2 && d2 < best_d2) {
            best_d2 = d2;
            best = idx;
          }
        }
    if (!best) continue;
    SuctionPoseResult r = cand;
    r.voxel = *best;
    r.wrench = scores.wrench[*best];
    r.collision = scores.collision[*best];
    r.overall = compose_score(r.seal, r.wrench, r.collision);
    out.push_back(r);
  }
  return out;
}

std::vector<SuctionPoseResult> topk(std::vector<SuctionPoseResult> candidates, int k, int image_width) {
  if (k < 1) throw Error(Errc::kInvalidArgument, "k must be >= 1");
  std::stable_sort(candidates.begin(), candidates.end(), [image_width](const auto& a, const auto& b) {
    if (a.overall != b.overall) return a.overall > b.overall;
    const std::size_t pa = a.pixel_index(image_width);
    const std::size_t pb = b.pixel_index(image_width);
    if (pa != pb) return pa < pb;
    return a.view < b.view;
  });
  if (candidates.size() > static_cast<std::size_t>(k)) candidates.resize(static_cast<std::size_t>(k));
  return candidates;
}

std::vector<SuctionPoseResult> repetitive_avoidance(const std::vector<SuctionPoseResult>& ranked,
                                                    const std::vector<const InstanceMask*>& masks,
                                                    const std::set<std::uint32_t>& attempted) {
  std::vector<SuctionPoseResult> out;
  std::set<std::uint32_t> taken;
  for (SuctionPoseResult pose : ranked) {
    if (pose.view >= 0 && static_cast<std::size_t>(pose.view) < masks.size() && masks[pose.view] != nullptr &&
        masks[pose.view]->inside(pose.u, pose.v))
      pose.instance_id = (*masks[pose.view])(pose.u, pose.v);
    if (pose.instance_id != 0) {
      if (attempted.count(pose.instance_id) != 0 || !taken.insert(pose.instance_id).second) continue;
    }
    out.push_back(pose);
  }
  return out;
}

DetectionResult detect_from_volume(const CaptureWindow& window, const TsdfVolume& volume, const SuctionCupSpec& cup,
                                   const DetectorConfig& config, const std::set<std::uint32_t>& attempted) {
  config.validate();
  cup.validate();
  DetectionResult result;
  TriMesh surface_mesh;
  try {
    surface_mesh = marching_cubes(volume);
  } catch (const Error& e) {
    if (e.code() != Errc::kEmptySurface) throw;
    result.stats.empty_surface = true;
    return result;
  }
  result.stats.surface_triangles = surface_mesh.triangles.size();
  const Bvh bvh(std::make_shared<const TriMesh>(std::move(surface_mesh)));

  const ScoreVolume scores = score_volume(volume, cup, config);
  result.stats.components = scores.components;

  std::vector<SuctionPoseResult> candidates;
  std::vector<const InstanceMask*> masks(window.views.size(), nullptr);
  int width = 0;
  for (std::size_t vi = 0; vi < window.views.size(); ++vi) {
    const CaptureView& view = window.views[vi];
    if (view.mask) masks[vi] = &*view.mask;
    if (config.newest_views_only && view.lag != 0) continue;
    if (!view.seal || !view.normals) continue;
    width = std::max(width, view.intrinsics.width);
    const auto proposals = grid_sample_seal(*view.seal, config);
    result.stats.proposals += proposals.size();
    // De-noised depth from the reconstructed surface, evaluated at the proposal pixels.
    DepthMap depth(view.intrinsics.width, view.intrinsics.height, kInvalidDepth);
    for (const SealProposal& prop : proposals)
      if (const auto d = mesh_depth_at(bvh, view.intrinsics, view.pose, prop.u, prop.v)) depth(prop.u, prop.v) = *d;
    const auto lifted = lift(proposals, depth, *view.normals, view.intrinsics, view.pose, static_cast<int>(vi));
    candidates.insert(candidates.end(), lifted.begin(), lifted.end());
  }
  result.stats.lifted = candidates.size();
  auto assigned = assign_scores(candidates, scores, config.snap_epsilon);
  result.stats.assigned = assigned.size();
  result.poses = repetitive_avoidance(topk(std::move(assigned), config.k, width), masks, attempted);
  return result;
}

DetectionResult detect(const CaptureWindow& window, const DepthProvider& provider, const GridSpec& spec,
                       const SuctionCupSpec& cup, const DetectorConfig& config,
                       const std::set<std::uint32_t>& attempted) {
  const TsdfVolume volume = fuse(window, provider, spec);
  return detect_from_volume(window, volume, cup, config, attempted);
}

}  // namespace beltpick
