#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "beltpick/geometry.hpp"
#include "beltpick/raster.hpp"

namespace beltpick {

/// Pinhole intrinsics in pixels. Pixel (u, v) addresses the center of the
/// pixel at column u, row v; the ray through (cx, cy) is the optical axis.
struct CameraIntrinsics {
  double fx = 260.0;
  double fy = 260.0;
  double cx = 160.0;
  double cy = 120.0;
  int width = 320;
  int height = 240;

  void validate() const;
};

/// Rigid local-to-world transform. For cameras, `rotation` maps camera-frame
/// directions (x right, y down, z forward) into world and `center` is the
/// optical center in world millimetres.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();

  Vec3 to_world(const Vec3& local) const { return rotation * local + center; }
  Vec3 to_local(const Vec3& world) const { return rotation.transpose() * (world - center); }

  // Throws kInvalidArgument when R is not a proper rotation within 1e-9.
  void validate() const;

  static RigidPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());
  static RigidPose from_yaw(double yaw_rad, const Vec3& translation);
};

struct BeltConfig {
  double speed = 100.0;  // mm/s
  Vec3 direction = Vec3::UnitX();
  double timestep = 1.0;  // s
  Aabb reconstruction_zone{Vec3(0.0, -200.0, 0.0), Vec3(500.0, 200.0, 300.0)};
  double suction_zone_begin = 600.0;  // along `direction`, mm
  double suction_zone_end = 900.0;

  void validate() const;
  // Belt displacement accumulated over `lag` timesteps.
  Vec3 shift_for_lag(int lag) const { return speed * timestep * lag * direction; }
};

struct Projection {
  Vec2 pixel;
  double depth;  // camera-frame z, mm
};

Projection project(const CameraIntrinsics& intr, const RigidPose& pose, const Vec3& p_world);
Vec3 backproject(const CameraIntrinsics& intr, const RigidPose& pose, const Vec2& pixel, double depth);

// Unit world-frame direction of the ray through `pixel`.
Vec3 pixel_ray(const CameraIntrinsics& intr, const RigidPose& pose, const Vec2& pixel);

/// Equivalent static camera for a capture taken `lag_k` timesteps before the
/// reference timestep: the rotation is kept and the center moves downstream by
/// the belt travel, since the content it saw has since moved by that much.
RigidPose transform_extrinsics(const RigidPose& pose, const BeltConfig& belt, int lag_k);

/// One camera's capture. Rasters are optional so the same record serves as a
/// calibration-only view (providers render on demand) and as a stored frame.
struct CaptureView {
  CameraIntrinsics intrinsics;
  RigidPose pose;
  double timestamp = 0.0;
  int lag = 0;
  int camera_index = 0;
  // Stable identity of the physical capture (timestep * cameras + camera);
  // noise streams are keyed on it so a frame looks the same in every window.
  std::uint64_t capture_key = 0;
  std::optional<DepthMap> depth;
  std::optional<SealMap> seal;
  std::optional<NormalMap> normals;  // world frame
  std::optional<InstanceMask> mask;
};

struct StereoCapture {
  int timestep_index = 0;
  double timestamp = 0.0;
  std::array<CaptureView, 2> cameras;
};

struct CaptureWindow {
  int window_size = 0;
  std::vector<CaptureView> views;  // 2 per timestep, oldest first

  void validate(const BeltConfig& belt) const;
};

/// Takes the newest `n` timesteps of `history` (oldest first) and rewrites each
/// view's pose into the newest timestep's content frame.
CaptureWindow assemble_window(const std::vector<StereoCapture>& history, int n, const BeltConfig& belt);

Vec3 execution_shift(const Vec3& p_detected, double t_detect, double t_exec, const BeltConfig& belt);

// Earliest time >= t_detect at which the shifted point lies in the suction zone.
double workspace_entry_time(const Vec3& p_detected, double t_detect, const BeltConfig& belt);

/// Two cameras set diagonally across the belt, both aimed at `target`.
std::array<RigidPose, 2> default_stereo_rig(const Vec3& target = Vec3(50.0, 0.0, 0.0));

}  // namespace beltpick
