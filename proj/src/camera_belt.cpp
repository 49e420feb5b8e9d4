#include "beltpick/camera_belt.hpp"

#include <cmath>
#include <string>

#include "beltpick/error.hpp"

namespace beltpick {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw Error(Errc::kInvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(Errc::kInvalidArgument, "image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
    throw Error(Errc::kInvalidArgument, "principal point outside image");
}

void RigidPose::validate() const {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = rotation.determinant();
  if (!(ortho <= 1e-9) || !(std::abs(det - 1.0) <= 1e-9))
    throw Error(Errc::kInvalidArgument, "rotation is not orthonormal with det +1");
  if (!center.allFinite()) throw Error(Errc::kInvalidArgument, "non-finite pose center");
}

RigidPose RigidPose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 ref = up.normalized();
  if (std::abs(z.dot(ref)) > 0.999) ref = std::abs(z.y()) < 0.9 ? Vec3::UnitY() : Vec3::UnitX();
  const Vec3 x = z.cross(ref).normalized();
  const Vec3 y = z.cross(x);
  RigidPose pose;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = y;
  pose.rotation.col(2) = z;
  pose.center = eye;
  return pose;
}

RigidPose RigidPose::from_yaw(double yaw_rad, const Vec3& translation) {
  RigidPose pose;
  pose.rotation = Eigen::AngleAxisd(yaw_rad, Vec3::UnitZ()).toRotationMatrix();
  pose.center = translation;
  return pose;
}

void BeltConfig::validate() const {
  if (!(speed >= 0.0)) throw Error(Errc::kInvalidArgument, "belt speed must be >= 0");
  if (std::abs(direction.norm() - 1.0) > 1e-9) throw Error(Errc::kInvalidArgument, "belt direction must be unit");
  if (!(timestep > 0.0)) throw Error(Errc::kInvalidArgument, "timestep must be > 0");
  if (!(suction_zone_begin < suction_zone_end)) throw Error(Errc::kInvalidArgument, "empty suction zone");
  // Projection of the reconstruction zone onto the belt direction.
  double zone_max = -std::numeric_limits<double>::infinity();
  double zone_min = std::numeric_limits<double>::infinity();
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner((c & 1) ? reconstruction_zone.hi.x() : reconstruction_zone.lo.x(),
                      (c & 2) ? reconstruction_zone.hi.y() : reconstruction_zone.lo.y(),
                      (c & 4) ? reconstruction_zone.hi.z() : reconstruction_zone.lo.z());
    zone_max = std::max(zone_max, corner.dot(direction));
    zone_min = std::min(zone_min, corner.dot(direction));
  }
  if (!(zone_max <= suction_zone_begin || zone_min >= suction_zone_end))
    throw Error(Errc::kInvalidArgument, "reconstruction and suction zones overlap along the belt");
}

Projection project(const CameraIntrinsics& intr, const RigidPose& pose, const Vec3& p_world) {
  const Vec3 c = pose.to_local(p_world);
  if (!(c.z() > 0.0)) throw Error(Errc::kBehindCamera, "point has camera z " + std::to_string(c.z()));
  return {Vec2(intr.fx * c.x() / c.z() + intr.cx, intr.fy * c.y() / c.z() + intr.cy), c.z()};
}

Vec3 backproject(const CameraIntrinsics& intr, const RigidPose& pose, const Vec2& pixel, double depth) {
  if (!(depth > 0.0)) throw Error(Errc::kNonPositiveDepth, "depth " + std::to_string(depth));
  const Vec3 c((pixel.x() - intr.cx) / intr.fx * depth, (pixel.y() - intr.cy) / intr.fy * depth, depth);
  return pose.to_world(c);
}

Vec3 pixel_ray(const CameraIntrinsics& intr, const RigidPose& pose, const Vec2& pixel) {
  const Vec3 c((pixel.x() - intr.cx) / intr.fx, (pixel.y() - intr.cy) / intr.fy, 1.0);
  return (pose.rotation * c).normalized();
}

RigidPose transform_extrinsics(const RigidPose& pose, const BeltConfig& belt, int lag_k) {
  if (lag_k < 0) throw Error(Errc::kInvalidArgument, "negative lag");
  RigidPose out = pose;
  if (lag_k > 0) out.center = pose.center + belt.shift_for_lag(lag_k);
  return out;
}

void CaptureWindow::validate(const BeltConfig& belt) const {
  if (window_size < 1) throw Error(Errc::kInvalidArgument, "window size must be >= 1");
  if (views.size() != static_cast<std::size_t>(2 * window_size))
    throw Error(Errc::kInvariantViolation, "window must hold exactly 2 views per timestep");
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& view = views[i];
    view.pose.validate();
    const int t = static_cast<int>(i / 2);
    if (view.lag != window_size - 1 - t) throw Error(Errc::kInvariantViolation, "view lag out of order");
    if (i % 2 == 1 && view.timestamp != views[i - 1].timestamp)
      throw Error(Errc::kInvariantViolation, "stereo pair timestamps differ");
    if (i >= 2 && i % 2 == 0) {
      const double step = view.timestamp - views[i - 2].timestamp;
      if (std::abs(step - belt.timestep) > 1e-9 * std::max(1.0, belt.timestep))
        throw Error(Errc::kInvariantViolation, "timestamps must advance by one timestep");
    }
  }
}

CaptureWindow assemble_window(const std::vector<StereoCapture>& history, int n, const BeltConfig& belt) {
  if (n < 1) throw Error(Errc::kInvalidArgument, "window size must be >= 1");
  if (history.size() < static_cast<std::size_t>(n))
    throw Error(Errc::kInsufficientHistory,
                std::to_string(history.size()) + " timesteps available, " + std::to_string(n) + " required");
  CaptureWindow window;
  window.window_size = n;
  window.views.reserve(2 * static_cast<std::size_t>(n));
  const std::size_t first = history.size() - static_cast<std::size_t>(n);
  for (std::size_t t = first; t < history.size(); ++t) {
    const int lag = static_cast<int>(history.size() - 1 - t);
    for (const CaptureView& src : history[t].cameras) {
      CaptureView view = src;
      view.lag = lag;
      view.timestamp = history[t].timestamp;
      view.pose = transform_extrinsics(src.pose, belt, lag);
      window.views.push_back(std::move(view));
    }
  }
  window.validate(belt);
  return window;
}

Vec3 execution_shift(const Vec3& p_detected, double t_detect, double t_exec, const BeltConfig& belt) {
  const double dt = t_exec - t_detect;
  if (dt < 0.0) throw Error(Errc::kNegativeDelay, "execution precedes detection");
  return p_detected + belt.speed * dt * belt.direction;
}

double workspace_entry_time(const Vec3& p_detected, double t_detect, const BeltConfig& belt) {
  const double along = p_detected.dot(belt.direction);
  if (along > belt.suction_zone_end) throw Error(Errc::kAlreadyPassed, "object is downstream of the suction zone");
  if (along >= belt.suction_zone_begin) return t_detect;
  if (!(belt.speed > 0.0)) throw Error(Errc::kAlreadyPassed, "stationary belt never reaches the suction zone");
  return t_detect + (belt.suction_zone_begin - along) / belt.speed;
}

std::array<RigidPose, 2> default_stereo_rig(const Vec3& target) {
  return {RigidPose::look_at(target + Vec3(-300.0, -450.0, 650.0), target),
          RigidPose::look_at(target + Vec3(300.0, 450.0, 650.0), target)};
}

}  // namespace beltpick
