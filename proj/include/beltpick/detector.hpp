#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "beltpick/annotator.hpp"
#include "beltpick/camera_belt.hpp"
#include "beltpick/recon.hpp"

namespace beltpick {

/// How voxels no camera has observed enter the occupancy grid.
///  kEmpty: free space.  kOccupied: solid.
///  kEnclosed: solid only when sealed off (6-connectivity) from observed free
///  space and from the grid border, which fills object interiors that lie more
///  than one truncation distance behind every observed surface.
enum class UnobservedMode { kEmpty, kOccupied, kEnclosed };

const char* unobserved_mode_name(UnobservedMode mode);
UnobservedMode parse_unobserved_mode(const std::string& name);

struct DetectorConfig {
  int k = 5;
  int stride = 8;                  // seal-map sampling cell, px
  double seal_threshold = 0.2;
  double snap_epsilon = 15.0;      // mm
  double density = kDefaultDensityKgPerMm3;
  UnobservedMode unobserved = UnobservedMode::kEnclosed;
  bool newest_views_only = false;  // sample seal maps of the lag-0 views only

  void validate() const;
};

struct Occupancy {
  GridSpec spec;
  std::vector<std::uint8_t> occupied;
};

struct ComponentLabeling {
  GridSpec spec;
  std::vector<std::uint32_t> labels;  // 0 = empty, components numbered from 1 in scan order
  std::vector<std::size_t> voxel_count;  // index id - 1
  std::vector<Vec3> centroid;            // mean voxel center, mm
  std::vector<double> volume;            // mm^3

  std::size_t count() const { return voxel_count.size(); }
};

struct ScoreVolume {
  GridSpec spec;
  std::vector<double> wrench;
  std::vector<std::uint8_t> collision;
  std::vector<std::uint8_t> surface;  // occupied voxels with an empty 6-neighbour
  std::size_t components = 0;
};

struct SealProposal {
  int u = 0;
  int v = 0;
  double seal = 0.0;
};

struct SuctionPoseResult {
  Vec3 point;
  Vec3 direction;
  double seal = 0.0;
  double wrench = 0.0;
  double collision = 0.0;
  double overall = 0.0;
  int u = 0;
  int v = 0;
  int view = 0;  // index into the window's views
  std::uint32_t instance_id = 0;
  std::size_t voxel = 0;  // voxel the wrench/collision scores came from

  std::size_t pixel_index(int width) const { return static_cast<std::size_t>(v) * width + u; }
};

Occupancy occupancy_from_tsdf(const TsdfVolume& volume, UnobservedMode mode = UnobservedMode::kEmpty,
                              double iso = 0.0);

ComponentLabeling connected_components(const Occupancy& occupancy);

// Occupied voxels with at least one empty in-grid 6-neighbour.
std::vector<std::uint8_t> surface_mask(const Occupancy& occupancy);

std::vector<double> wrench_volume(const ComponentLabeling& labeling, const std::vector<std::uint8_t>& surface,
                                  const SuctionCupSpec& cup, double density);

// Outward unit gradient of the TSDF at a voxel; nullopt when degenerate.
std::optional<Vec3> tsdf_gradient(const TsdfVolume& volume, int i, int j, int k);

/// A surface voxel gets 1 unless the cup cylinder, based at its center and
/// aligned with the TSDF gradient, reaches below the belt or comes within half
/// a voxel of the center of an occupied voxel of a different component.
std::vector<std::uint8_t> collision_volume(const TsdfVolume& volume, const ComponentLabeling& labeling,
                                           const std::vector<std::uint8_t>& surface, const SuctionCupSpec& cup);

// Full analytic score field from a TSDF.
ScoreVolume score_volume(const TsdfVolume& volume, const SuctionCupSpec& cup, const DetectorConfig& config);

std::vector<SealProposal> grid_sample_seal(const SealMap& seal, const DetectorConfig& config);

// Backprojects proposals through `depth` (dropping invalid pixels) and reads
// directions from the world-frame normal map.
std::vector<SuctionPoseResult> lift(const std::vector<SealProposal>& proposals, const DepthMap& depth,
                                    const NormalMap& normals, const CameraIntrinsics& intr, const RigidPose& pose,
                                    int view_index = 0);

// Nearest voxel center, ties to the lowest linear index; nullopt outside the grid.
std::optional<std::size_t> nearest_voxel(const GridSpec& spec, const Vec3& p);

/// Takes wrench and collision from the nearest surface voxel within
/// `snap_epsilon` (ties to the lowest linear index) and recomputes the overall
/// score. Candidates outside the grid or with no surface voxel in reach are dropped.
std::vector<SuctionPoseResult> assign_scores(const std::vector<SuctionPoseResult>& candidates,
                                             const ScoreVolume& scores, double snap_epsilon);

// Stable sort by overall score (desc), then pixel index, then view; truncate to k.
std::vector<SuctionPoseResult> topk(std::vector<SuctionPoseResult> candidates, int k, int image_width);

/// Tags each pose with the mask id at its source pixel (when `masks` has an
/// entry for its view), keeps the first pose per id and drops attempted ids.
/// Id 0 always passes.
std::vector<SuctionPoseResult> repetitive_avoidance(const std::vector<SuctionPoseResult>& ranked,
                                                    const std::vector<const InstanceMask*>& masks,
                                                    const std::set<std::uint32_t>& attempted);

struct DetectionStats {
  std::size_t surface_triangles = 0;
  std::size_t components = 0;
  std::size_t proposals = 0;
  std::size_t lifted = 0;
  std::size_t assigned = 0;
  bool empty_surface = false;
};

struct DetectionResult {
  std::vector<SuctionPoseResult> poses;
  DetectionStats stats;
};

// Detection on an already fused volume. Views need seal and normal maps; the
// instance masks, when present, drive repetitive avoidance.
DetectionResult detect_from_volume(const CaptureWindow& window, const TsdfVolume& volume, const SuctionCupSpec& cup,
                                   const DetectorConfig& config, const std::set<std::uint32_t>& attempted = {});

DetectionResult detect(const CaptureWindow& window, const DepthProvider& provider, const GridSpec& spec,
                       const SuctionCupSpec& cup, const DetectorConfig& config,
                       const std::set<std::uint32_t>& attempted = {});

}  // namespace beltpick
