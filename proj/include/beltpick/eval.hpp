#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "beltpick/annotator.hpp"
#include "beltpick/detector.hpp"
#include "beltpick/recon.hpp"

namespace beltpick {

inline constexpr double kApThresholds[4] = {0.2, 0.4, 0.6, 0.8};

struct TsdfErrors {
  double mae = 0.0;          // mm
  double surface_mae = 0.0;  // mm
  std::size_t count = 0;     // mutually observed voxels
  std::size_t surface_count = 0;
};

// Voxels whose ground-truth sign differs from an observed 6-neighbour's.
std::vector<std::uint8_t> sign_change_mask(const TsdfVolume& gt);

/// Mean |pred - gt| over voxels observed in both, scaled by the truncation
/// distance to millimetres. The surface variant keeps only sign-change voxels
/// of `gt`. Throws kSpecMismatch when the grids differ.
TsdfErrors tsdf_errors(const TsdfVolume& pred, const TsdfVolume& gt);
double tsdf_mae(const TsdfVolume& pred, const TsdfVolume& gt);
double surface_tsdf_mae(const TsdfVolume& pred, const TsdfVolume& gt);

// Mean |pred - gt| over pixels valid in both maps (0 when none overlap).
double seal_mae(const SealMap& pred, const SealMap& gt);

// Fraction of ground-truth surface voxels whose collision labels agree
// (1 when the ground truth has no surface voxels).
double collision_accuracy(const ScoreVolume& pred, const ScoreVolume& gt);

struct SurfaceSnap {
  Vec3 point;
  std::uint32_t instance_id = 0;
  double distance = 0.0;
};

// Closest point on any object surface within `epsilon` of p.
std::optional<SurfaceSnap> snap_to_surface(const Scene& scene, const Vec3& p, double epsilon);

/// Ground-truth re-evaluation of a predicted pose: p is snapped to the nearest
/// object surface and labelled there with the predicted direction. Poses
/// farther than `epsilon` from every object score all zeros.
SuctionLabel gt_reevaluate(const Scene& scene, const Vec3& p, const Vec3& d, const SuctionCupSpec& cup,
                           double epsilon, std::uint32_t* instance_out = nullptr);

// Mean over the thresholds of (1/k) * #{s* > threshold} among the first k
// scores; 0 when there are none.
double ap_from_scores(const std::vector<double>& gt_scores, int k);

double ap_topk(const std::vector<SuctionPoseResult>& ranked, const Scene& scene, const SuctionCupSpec& cup, int k,
               double epsilon);

struct MetricsReport {
  TsdfErrors tsdf;
  double seal_mae = 0.0;
  double collision_accuracy = 0.0;
  std::map<int, double> ap_topk;  // keyed by k
  std::size_t predictions = 0;
  std::size_t seal_pixels = 0;
};

}  // namespace beltpick
