#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "beltpick/annotator.hpp"
#include "beltpick/camera_belt.hpp"
#include "beltpick/detector.hpp"
#include "beltpick/recon.hpp"
#include "beltpick/scene.hpp"

namespace beltpick {

/// Simulated proxy for "the object left the belt": thresholds on the ground
/// truth labels at the executed pose.
struct SuccessRule {
  double min_seal = 0.2;
  double min_collision = 1.0;
  double min_wrench = 0.0;  // exclusive

  bool accepts(const SuctionLabel& label) const {
    return label.seal >= min_seal && label.collision >= min_collision && label.wrench > min_wrench;
  }
};

struct DeclutterConfig {
  BeltConfig belt;
  CameraIntrinsics intrinsics;
  std::array<RigidPose, 2> rig = default_stereo_rig();
  GridSpec grid;
  SuctionCupSpec cup;
  DetectorConfig detector;
  NoiseSpec depth_noise;  // applied to the depth stream only; seal maps stay exact
  int window = 5;
  int max_steps = 30;
  int seal_stride = 1;  // exact seal maps; coarser strides blur the zero band at edges
  // Top-k used by the default detector while streaming; 0 ranks every
  // proposal. Objects already scheduled stay on the belt until executed and
  // would otherwise crowd every other instance out of a short list.
  int scheduling_k = 0;
  double snap_epsilon = 15.0;
  SuccessRule rule;

  void validate() const;
};

// Replaceable detection stage; the default runs `detect` on stored depth.
using DetectorFn = std::function<DetectionResult(const CaptureWindow& window, const std::set<std::uint32_t>& attempted)>;

struct AttemptRecord {
  int step = 0;
  std::uint32_t target_instance = 0;  // from the detector's mask lookup
  std::uint32_t hit_instance = 0;     // object actually touched at execution
  Vec3 point_detected;
  Vec3 point_executed;
  Vec3 direction;
  double predicted = 0.0;
  double t_detect = 0.0;
  double t_exec = 0.0;
  SuctionLabel gt;
  bool success = false;
};

struct StepLog {
  int step = 0;
  double time = 0.0;
  std::size_t detections = 0;
  std::size_t objects_on_belt = 0;
  bool scheduled = false;
  double seconds = 0.0;
};

struct EpisodeLog {
  std::vector<StepLog> steps;
  std::vector<AttemptRecord> attempts;
  std::vector<std::uint32_t> removed;
  std::size_t total_objects = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  double declutter_rate = 0.0;
  double seconds = 0.0;
};

/// Streams `scene` past a fixed stereo rig. Each timestep captures both cameras
/// (noisy depth, exact seal/normal/mask rasters), detects on the latest window
/// once it is full, and schedules the best positive pose for the moment its
/// point enters the suction zone. Scheduled picks execute against the scene at
/// that moment; successful picks remove the object. With a stopped belt the
/// pick runs immediately and the episode ends at the first empty detection.
EpisodeLog simulate_declutter(const Scene& scene, const DeclutterConfig& config, const DetectorFn& detector = {});

// Renders one camera's capture of `scene` at the given timestep.
CaptureView capture_view(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose, int timestep,
                         int camera, double timestamp, const NoiseSpec& noise, const SuctionCupSpec& cup,
                         int seal_stride);

}  // namespace beltpick
