#include "beltpick/declutter.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "beltpick/error.hpp"
#include "beltpick/eval.hpp"
#include "beltpick/render.hpp"

namespace beltpick {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Smallest coordinate of the box along `dir`.
double min_along(const Aabb& box, const Vec3& dir) {
  double best = std::numeric_limits<double>::infinity();
  for (int c = 0; c < 8; ++c) {
    const Vec3 p((c & 1) ? box.hi.x() : box.lo.x(), (c & 2) ? box.hi.y() : box.lo.y(),
                 (c & 4) ? box.hi.z() : box.lo.z());
    best = std::min(best, p.dot(dir));
  }
  return best;
}

double max_along(const Aabb& box, const Vec3& dir) { return -min_along(box, -dir); }

}  // namespace

void DeclutterConfig::validate() const {
  belt.validate();
  intrinsics.validate();
  for (const auto& pose : rig) pose.validate();
  grid.validate();
  cup.validate();
  detector.validate();
  depth_noise.validate();
  if (window < 1) throw Error(Errc::kInvalidArgument, "window must be >= 1");
  if (max_steps < 1) throw Error(Errc::kInvalidArgument, "max_steps must be >= 1");
  if (scheduling_k < 0) throw Error(Errc::kInvalidArgument, "scheduling k must be >= 0");
  if (seal_stride < 1) throw Error(Errc::kInvalidArgument, "seal stride must be >= 1");
  if (!(snap_epsilon >= 0.0)) throw Error(Errc::kInvalidArgument, "snap epsilon must be >= 0");
}

CaptureView capture_view(const Scene& scene, const CameraIntrinsics& intr, const RigidPose& pose, int timestep,
                         int camera, double timestamp, const NoiseSpec& noise, const SuctionCupSpec& cup,
                         int seal_stride) {
  CaptureView view;
  view.intrinsics = intr;
  view.pose = pose;
  view.timestamp = timestamp;
  view.camera_index = camera;
  view.capture_key = static_cast<std::uint64_t>(timestep) * 2 + static_cast<std::uint64_t>(camera);
  RenderedView render = render_view(scene, intr, pose, NormalFrame::kWorld);
  view.depth = apply_depth_noise(render, scene, view.capture_key, noise).depth;
  view.seal = render_seal_map(scene, render, intr, pose, cup, seal_stride);
  view.normals = std::move(render.normals);
  view.mask = std::move(render.mask);
  return view;
}

EpisodeLog simulate_declutter(const Scene& scene, const DeclutterConfig& config, const DetectorFn& detector) {
  config.validate();
  if (scene.empty()) throw Error(Errc::kInvalidArgument, "declutter needs a non-empty scene");
  const auto episode_start = std::chrono::steady_clock::now();
  const BeltConfig& belt = config.belt;
  const bool streaming = belt.speed > 0.0;

  const DetectorFn run_detector = detector ? detector : DetectorFn([&config](const CaptureWindow& window,
                                                                             const std::set<std::uint32_t>& attempted) {
    DetectorConfig dc = config.detector;
    dc.k = config.scheduling_k == 0 ? std::numeric_limits<int>::max() : std::max(dc.k, config.scheduling_k);
    return detect(window, stored_depth_provider(), config.grid, config.cup, dc, attempted);
  });

  EpisodeLog log;
  log.total_objects = scene.objects().size();
  std::set<std::uint32_t> removed;
  std::set<std::uint32_t> attempted;
  std::vector<AttemptRecord> pending;
  std::vector<StereoCapture> history;

  auto scene_at = [&](double t) {
    Scene s = scene_at_time(scene, belt, t);
    for (std::uint32_t id : removed) s = s.without(id);
    return s;
  };

  auto execute = [&](AttemptRecord rec) {
    const Scene at_exec = scene_at(rec.t_exec);
    rec.point_executed = execution_shift(rec.point_detected, rec.t_detect, rec.t_exec, belt);
    rec.gt = gt_reevaluate(at_exec, rec.point_executed, rec.direction, config.cup, config.snap_epsilon,
                           &rec.hit_instance);
    rec.success = rec.hit_instance != 0 && config.rule.accepts(rec.gt);
    if (rec.success) {
      removed.insert(rec.hit_instance);
      log.removed.push_back(rec.hit_instance);
      ++log.successes;
    }
    log.attempts.push_back(rec);
  };

  auto flush_due = [&](double now) {
    std::stable_sort(pending.begin(), pending.end(),
                     [](const AttemptRecord& a, const AttemptRecord& b) { return a.t_exec < b.t_exec; });
    std::size_t done = 0;
    while (done < pending.size() && pending[done].t_exec <= now) execute(pending[done++]);
    pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(done));
  };

  Aabb zone = belt.reconstruction_zone;
  const double zone_end = max_along(zone, belt.direction);

  for (int step = 0; step < config.max_steps; ++step) {
    const auto step_start = std::chrono::steady_clock::now();
    const double now = step * belt.timestep;
    flush_due(now);
    const Scene current = scene_at(now);
    StepLog slog;
    slog.step = step;
    slog.time = now;
    slog.objects_on_belt = current.objects().size();
    if (current.empty() && pending.empty()) break;
    // Everything left has moved past the reconstruction zone: nothing more to detect.
    if (streaming && pending.empty() &&
        std::all_of(current.objects().begin(), current.objects().end(),
                    [&](const PlacedObject& o) { return min_along(o.bounds, belt.direction) > zone_end; }))
      break;

    StereoCapture capture;
    capture.timestep_index = step;
    capture.timestamp = now;
    for (int cam = 0; cam < 2; ++cam)
      capture.cameras[cam] = capture_view(current, config.intrinsics, config.rig[cam], step, cam, now,
                                          config.depth_noise, config.cup, config.seal_stride);
    history.push_back(std::move(capture));
    if (history.size() > static_cast<std::size_t>(config.window)) history.erase(history.begin());

    bool found = false;
    if (history.size() == static_cast<std::size_t>(config.window)) {
      const CaptureWindow window = assemble_window(history, config.window, belt);
      const DetectionResult result = run_detector(window, attempted);
      slog.detections = result.poses.size();
      for (const SuctionPoseResult& pose : result.poses) {
        if (!(pose.overall > 0.0)) continue;
        if (pose.instance_id != 0 && attempted.count(pose.instance_id) != 0) continue;
        AttemptRecord rec;
        rec.step = step;
        rec.target_instance = pose.instance_id;
        rec.point_detected = pose.point;
        rec.direction = pose.direction;
        rec.predicted = pose.overall;
        rec.t_detect = now;
        if (streaming) {
          try {
            rec.t_exec = workspace_entry_time(pose.point, now, belt);
          } catch (const Error& e) {
            if (e.code() == Errc::kAlreadyPassed) continue;
            throw;
          }
        } else {
          rec.t_exec = now;
        }
        if (pose.instance_id != 0) attempted.insert(pose.instance_id);
        pending.push_back(rec);
        found = true;
        break;
      }
      if (!streaming) {
        flush_due(now);
        if (!found) {
          slog.seconds = seconds_since(step_start);
          log.steps.push_back(slog);
          break;
        }
      }
    }
    slog.scheduled = found;
    slog.seconds = seconds_since(step_start);
    log.steps.push_back(slog);
  }
  flush_due(std::numeric_limits<double>::infinity());

  log.success_rate = log.attempts.empty() ? 0.0 : static_cast<double>(log.successes) / log.attempts.size();
  log.declutter_rate = static_cast<double>(removed.size()) / static_cast<double>(log.total_objects);
  log.seconds = seconds_since(episode_start);
  return log;
}

}  // namespace beltpick
