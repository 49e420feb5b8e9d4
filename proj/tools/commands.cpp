#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <vector>

#include "beltpick/declutter.hpp"
#include "beltpick/error.hpp"
#include "beltpick/eval.hpp"
#include "beltpick/rng.hpp"
#include "beltpick/store.hpp"

namespace beltpick::cli {

namespace fs = std::filesystem;

namespace {

void apply_overrides(RunManifest& m, const GlobalOptions& g) {
  if (g.seed) m.seed = *g.seed;
  if (g.timesteps) m.timesteps = *g.timesteps;
  if (g.noise_sigma) m.noise.sigma = *g.noise_sigma;
  if (g.k) m.detector.k = *g.k;
  if (m.timesteps < 1) throw Error(Errc::kInvalidArgument, "--timesteps must be >= 1");
  m.noise.validate();
  m.detector.validate();
}

struct Job {
  std::string id;
  RunManifest manifest;
  AssetLibrary library;
  Scene scene;

  const SceneEntry& entry() const { return manifest.scenes.front(); }
};

fs::path scene_manifest_path(const fs::path& out, const std::string& id) {
  return out / "scenes" / id / "manifest.json";
}

fs::path raster_path(const fs::path& out, const std::string& id, int t, int cam, const char* kind) {
  return out / "renders" / id / (std::to_string(t) + "_" + std::to_string(cam) + "_" + kind + ".stpr");
}

fs::path volume_path(const fs::path& out, const std::string& id) { return out / "volumes" / (id + ".stpv"); }

std::vector<std::string> scene_ids(const fs::path& out, const std::string& only) {
  if (!only.empty()) {
    if (!fs::exists(scene_manifest_path(out, only)))
      throw Error(Errc::kIo, "no scene '" + only + "' under " + (out / "scenes").string());
    return {only};
  }
  std::vector<std::string> ids;
  const fs::path dir = out / "scenes";
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory() && fs::exists(e.path() / "manifest.json")) ids.push_back(e.path().filename().string());
  if (ids.empty()) throw Error(Errc::kIo, "no scenes under " + dir.string() + " (run `gen` first)");
  std::sort(ids.begin(), ids.end());
  return ids;
}

Job load_job(const GlobalOptions& g, const std::string& id) {
  const fs::path path = scene_manifest_path(g.out, id);
  Job job{id, load_manifest(path), {}, {}};
  apply_overrides(job.manifest, g);
  if (job.manifest.scenes.size() != 1)
    throw Error(Errc::kInvalidArgument, path.string() + " must describe exactly one scene");
  job.library = asset_library(job.manifest, path.parent_path());
  job.scene = build_scene(job.entry(), job.library);
  return job;
}

// Rebuilds the capture history written by `render`.
std::vector<StereoCapture> load_history(const GlobalOptions& g, const Job& job, bool with_maps) {
  const RunManifest& m = job.manifest;
  std::vector<StereoCapture> history;
  for (int t = 0; t < m.timesteps; ++t) {
    StereoCapture capture;
    capture.timestep_index = t;
    capture.timestamp = t * m.belt.timestep;
    for (int cam = 0; cam < 2; ++cam) {
      CaptureView& view = capture.cameras[cam];
      view.intrinsics = m.intrinsics;
      view.pose = job.entry().rig[cam];
      view.timestamp = capture.timestamp;
      view.camera_index = cam;
      view.capture_key = static_cast<std::uint64_t>(t) * 2 + static_cast<std::uint64_t>(cam);
      view.depth = depth_from_raster(load_raster(raster_path(g.out, job.id, t, cam, "depth")));
      if (with_maps) {
        view.normals = normals_from_raster(load_raster(raster_path(g.out, job.id, t, cam, "normal")));
        view.seal = seal_from_raster(load_raster(raster_path(g.out, job.id, t, cam, "seal")));
        view.mask = mask_from_raster(load_raster(raster_path(g.out, job.id, t, cam, "mask")));
      }
    }
    history.push_back(std::move(capture));
  }
  return history;
}

CaptureWindow load_window(const GlobalOptions& g, const Job& job, bool with_maps) {
  return assemble_window(load_history(g, job, with_maps), job.manifest.timesteps, job.manifest.belt);
}

TsdfVolume stored_or_fused(const GlobalOptions& g, const Job& job, const CaptureWindow& window) {
  const fs::path path = volume_path(g.out, job.id);
  if (fs::exists(path)) return load_volume(path, job.manifest.grid);
  return fuse(window, stored_depth_provider(), job.manifest.grid);
}

Json report_header(const char* command, const GlobalOptions& g) {
  Json j = {{"command", command}, {"version", kManifestVersion}, {"out", g.out}};
  if (g.seed) j["seed"] = *g.seed;
  if (!g.config.empty()) j["config"] = g.config;
  return j;
}

void write_report(const GlobalOptions& g, const char* command, const Json& report) {
  write_text_file(fs::path(g.out) / "reports" / (std::string(command) + ".json"), report.dump(2) + "\n");
}

RunManifest base_manifest(const GlobalOptions& g, fs::path& asset_base) {
  RunManifest m;
  asset_base = fs::current_path();
  if (!g.config.empty()) {
    Json j;
    try {
      j = Json::parse(read_file(g.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::kInvalidArgument, g.config + ": " + e.what());
    }
    m = manifest_from_json(j);
    asset_base = fs::absolute(fs::path(g.config)).parent_path();
    for (AssetEntry& a : m.assets)
      if (a.source != "builtin") a.source = (asset_base / a.source).lexically_normal().string();
  }
  m.scenes.clear();
  apply_overrides(m, g);
  return m;
}

std::string scene_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%04d", i);
  return buf;
}

}  // namespace

int run_gen(const GlobalOptions& g, const GenOptions& options) {
  if (options.count < 1) throw Error(Errc::kInvalidArgument, "--count must be >= 1");
  fs::path asset_base;
  const RunManifest base = base_manifest(g, asset_base);
  const AssetLibrary library = asset_library(base, asset_base);
  Json scenes = Json::array();
  for (int i = 0; i < options.count; ++i) {
    const std::string id = scene_name(i);
    const std::uint64_t seed = derive_seed(base.seed, static_cast<std::uint64_t>(i));
    const Scene scene = generate_scene(base.randomization, library, seed);
    RunManifest m = base;
    SceneEntry entry;
    entry.id = id;
    entry.seed = seed;
    entry.rig = jitter_rig(default_stereo_rig(), Vec3(50.0, 0.0, 0.0), base.randomization, seed);
    entry.instances = scene.instances();
    m.scenes = {entry};
    const fs::path path = scene_manifest_path(g.out, id);
    save_manifest(m, path);
    scenes.push_back({{"id", id}, {"seed", seed}, {"objects", entry.instances.size()}, {"manifest", path.string()}});
  }
  Json report = report_header("gen", g);
  report["scenes"] = scenes;
  write_report(g, "gen", report);
  std::cout << "generated " << options.count << " scene(s) under " << (fs::path(g.out) / "scenes").string() << "\n";
  return 0;
}

int run_render(const GlobalOptions& g, const SceneOptions& options) {
  Json scenes = Json::array();
  for (const std::string& id : scene_ids(g.out, options.scene)) {
    const Job job = load_job(g, id);
    const RunManifest& m = job.manifest;
    std::size_t files = 0;
    for (int t = 0; t < m.timesteps; ++t) {
      const int lag = m.timesteps - 1 - t;
      const Scene at_t = scene_at_time(job.scene, m.belt, -lag * m.belt.timestep);
      for (int cam = 0; cam < 2; ++cam) {
        const CaptureView view = capture_view(at_t, m.intrinsics, job.entry().rig[cam], t, cam, t * m.belt.timestep,
                                              m.noise, m.cup, m.seal_stride);
        save_raster(raster_from_depth(*view.depth), raster_path(g.out, id, t, cam, "depth"));
        save_raster(raster_from_normals(*view.normals), raster_path(g.out, id, t, cam, "normal"));
        save_raster(raster_from_mask(*view.mask), raster_path(g.out, id, t, cam, "mask"));
        save_raster(raster_from_seal(*view.seal), raster_path(g.out, id, t, cam, "seal"));
        files += 4;
      }
    }
    scenes.push_back({{"id", id}, {"timesteps", m.timesteps}, {"files", files}});
  }
  Json report = report_header("render", g);
  report["scenes"] = scenes;
  write_report(g, "render", report);
  std::cout << "rendered " << scenes.size() << " scene(s)\n";
  return 0;
}

int run_annotate(const GlobalOptions& g, const SceneOptions& options) {
  Json scenes = Json::array();
  for (const std::string& id : scene_ids(g.out, options.scene)) {
    const Job job = load_job(g, id);
    const AnnotationSet set =
        annotate_scene(job.scene, job.manifest.cup, job.manifest.candidates_per_object, job.entry().seed, id);
    const fs::path path = fs::path(g.out) / "annotations" / (id + ".csv");
    save_annotations(set.records, path);
    std::size_t positive = 0;
    for (const auto& r : set.records) positive += r.label.overall > 0.0 ? 1 : 0;
    scenes.push_back({{"id", id}, {"records", set.records.size()}, {"positive", positive}, {"file", path.string()}});
  }
  Json report = report_header("annotate", g);
  report["scenes"] = scenes;
  write_report(g, "annotate", report);
  std::cout << "annotated " << scenes.size() << " scene(s)\n";
  return 0;
}

int run_fuse(const GlobalOptions& g, const SceneOptions& options) {
  Json scenes = Json::array();
  for (const std::string& id : scene_ids(g.out, options.scene)) {
    const Job job = load_job(g, id);
    const CaptureWindow window = load_window(g, job, false);
    const TsdfVolume volume = fuse(window, stored_depth_provider(), job.manifest.grid);
    const fs::path path = volume_path(g.out, id);
    save_volume(volume, path);
    std::size_t observed = 0;
    for (double w : volume.weights) observed += w > 0.0 ? 1 : 0;
    scenes.push_back({{"id", id}, {"views", window.views.size()}, {"observed_voxels", observed},
                      {"file", path.string()}});
  }
  Json report = report_header("fuse", g);
  report["scenes"] = scenes;
  write_report(g, "fuse", report);
  std::cout << "fused " << scenes.size() << " scene(s)\n";
  return 0;
}

int run_detect(const GlobalOptions& g, const SceneOptions& options) {
  Json scenes = Json::array();
  for (const std::string& id : scene_ids(g.out, options.scene)) {
    const Job job = load_job(g, id);
    const CaptureWindow window = load_window(g, job, true);
    const TsdfVolume volume = stored_or_fused(g, job, window);
    const DetectionResult result = detect_from_volume(window, volume, job.manifest.cup, job.manifest.detector);
    const fs::path path = fs::path(g.out) / "detections" / (id + ".csv");
    save_annotations(poses_to_records(result.poses, id), path);
    Json poses = Json::array();
    for (const auto& p : result.poses) poses.push_back(to_json(p));
    scenes.push_back({{"id", id}, {"stats", to_json(result.stats)}, {"poses", poses}, {"file", path.string()}});
  }
  Json report = report_header("detect", g);
  report["scenes"] = scenes;
  write_report(g, "detect", report);
  std::cout << "detected on " << scenes.size() << " scene(s)\n";
  return 0;
}

int run_eval(const GlobalOptions& g, const SceneOptions& options) {
  Json scenes = Json::array();
  double sum_surface = 0.0, sum_seal = 0.0, sum_collision = 0.0;
  std::map<int, double> sum_ap;
  std::size_t n = 0;
  for (const std::string& id : scene_ids(g.out, options.scene)) {
    const Job job = load_job(g, id);
    const RunManifest& m = job.manifest;
    const CaptureWindow window = load_window(g, job, true);
    const TsdfVolume pred = stored_or_fused(g, job, window);
    const TsdfVolume gt = gt_tsdf(job.scene, m.grid, true).volume;

    MetricsReport metrics;
    metrics.tsdf = tsdf_errors(pred, gt);

    // Stored seal maps of the newest timestep against exact per-pixel maps.
    double seal_sum = 0.0;
    int seal_views = 0;
    for (const CaptureView& view : window.views) {
      if (view.lag != 0) continue;
      const SealMap exact = render_seal_map(job.scene, view.intrinsics, job.entry().rig[view.camera_index], m.cup, 1);
      seal_sum += seal_mae(*view.seal, exact);
      ++seal_views;
      for (std::size_t i = 0; i < exact.valid.size(); ++i)
        metrics.seal_pixels += (exact.valid[i] && view.seal->valid[i]) ? 1 : 0;
    }
    metrics.seal_mae = seal_views > 0 ? seal_sum / seal_views : 0.0;

    metrics.collision_accuracy =
        collision_accuracy(score_volume(pred, m.cup, m.detector), score_volume(gt, m.cup, m.detector));

    std::set<int> ks = {1, m.detector.k};
    DetectorConfig config = m.detector;
    config.k = *ks.rbegin();
    const DetectionResult result = detect_from_volume(window, pred, m.cup, config);
    metrics.predictions = result.poses.size();
    for (int k : ks) metrics.ap_topk[k] = ap_topk(result.poses, job.scene, m.cup, k, m.detector.snap_epsilon);

    sum_surface += metrics.tsdf.surface_mae;
    sum_seal += metrics.seal_mae;
    sum_collision += metrics.collision_accuracy;
    for (const auto& [k, v] : metrics.ap_topk) sum_ap[k] += v;
    ++n;
    Json entry = to_json(metrics);
    entry["id"] = id;
    scenes.push_back(entry);
  }
  Json mean_ap = Json::object();
  for (const auto& [k, v] : sum_ap) mean_ap["top" + std::to_string(k)] = v / n;
  Json report = report_header("eval", g);
  report["scenes"] = scenes;
  report["mean"] = {{"surface_tsdf_mae_mm", sum_surface / n},
                    {"seal_mae", sum_seal / n},
                    {"collision_accuracy", sum_collision / n},
                    {"ap", mean_ap}};
  write_report(g, "eval", report);
  std::printf("evaluated %zu scene(s): surface TSDF MAE %.3f mm, seal MAE %.4f, collision acc %.4f\n", n,
              sum_surface / n, sum_seal / n, sum_collision / n);
  return 0;
}

int run_declutter(const GlobalOptions& g, const DeclutterOptions& options) {
  if (options.max_steps < 1) throw Error(Errc::kInvalidArgument, "--max-steps must be >= 1");
  if (!(options.upstream >= 0.0)) throw Error(Errc::kInvalidArgument, "--upstream must be >= 0");
  Json scenes = Json::array();
  std::size_t attempts = 0, successes = 0;
  double dr_sum = 0.0;
  for (const std::string& id : scene_ids(g.out, options.scene)) {
    const Job job = load_job(g, id);
    const RunManifest& m = job.manifest;
    DeclutterConfig config;
    config.belt = m.belt;
    config.intrinsics = m.intrinsics;
    config.rig = job.entry().rig;
    config.grid = m.grid;
    config.cup = m.cup;
    config.detector = m.detector;
    config.depth_noise = m.noise;
    config.window = m.timesteps;
    config.max_steps = options.max_steps;
    config.snap_epsilon = m.detector.snap_epsilon;
    const Scene start_scene = job.scene.translated(-options.upstream * m.belt.direction);
    const EpisodeLog log = simulate_declutter(start_scene, config);
    attempts += log.attempts.size();
    successes += log.successes;
    dr_sum += log.declutter_rate;
    Json entry = to_json(log, false);
    entry["id"] = id;
    scenes.push_back(entry);
  }
  const double sr = attempts > 0 ? static_cast<double>(successes) / attempts : 0.0;
  const double dr = dr_sum / scenes.size();
  Json report = report_header("declutter", g);
  report["scenes"] = scenes;
  report["success_rate"] = sr;
  report["declutter_rate"] = dr;
  write_report(g, "declutter", report);
  std::printf("declutter over %zu scene(s): SR %.4f DR %.4f\n", scenes.size(), sr, dr);
  return 0;
}

int run_selftest(const GlobalOptions& g) {
  std::vector<std::pair<std::string, std::function<bool()>>> checks;

  checks.emplace_back("integrate plane voxel -1/3", [] {
    GridSpec spec;
    spec.origin = Vec3(0.0, 0.0, 0.0);
    spec.dims = {1, 1, 2};
    TsdfVolume vol(spec);
    CameraIntrinsics intr;
    RigidPose pose;
    pose.center = Vec3(0.0, 0.0, -310.0);
    DepthMap depth(intr.width, intr.height, 300.0);
    Raster<std::uint8_t> valid(intr.width, intr.height, 1);
    integrate(vol, depth, valid, intr, pose);
    return std::abs(vol.values[0] + 1.0 / 3.0) < 1e-12 && vol.weights[0] == 1.0;
  });
  checks.emplace_back("integrate clamps to +1", [] {
    GridSpec spec;
    spec.origin = Vec3(0.0, 0.0, 0.0);
    spec.dims = {1, 1, 1};
    TsdfVolume vol(spec);
    CameraIntrinsics intr;
    RigidPose pose;
    pose.center = Vec3(0.0, 0.0, -260.0);
    DepthMap depth(intr.width, intr.height, 300.0);
    Raster<std::uint8_t> valid(intr.width, intr.height, 1);
    integrate(vol, depth, valid, intr, pose);
    return vol.values[0] == 1.0;
  });
  checks.emplace_back("score product (0.8,0.5,1)", [] { return std::abs(compose_score(0.8, 0.5, 1.0) - 0.4) < 1e-15; });
  checks.emplace_back("score annihilator", [] { return compose_score(0.7, 0.3, 0.0) == 0.0; });
  checks.emplace_back("AP hand case", [] { return ap_from_scores({0.9, 0.7, 0.5, 0.3, 0.1}, 5) == 0.5; });
  checks.emplace_back("AP all ones", [] { return ap_from_scores({1, 1, 1, 1, 1}, 5) == 1.0; });
  checks.emplace_back("topk truncates", [] {
    std::vector<SuctionPoseResult> c(3);
    c[0].overall = 0.1;
    c[1].overall = 0.9;
    c[2].overall = 0.5;
    const auto r = topk(c, 2, 320);
    return r.size() == 2 && r[0].overall == 0.9 && r[1].overall == 0.5;
  });
  checks.emplace_back("raster round trip", [] {
    RasterFile r{3, 2, 1, {0.f, 1.f, 2.5f, -3.f, 1e-7f, 42.f}};
    return decode_raster(encode_raster(r)) == r;
  });
  checks.emplace_back("bad magic rejected", [] {
    std::string bytes = encode_raster(RasterFile{1, 1, 1, {1.f}});
    bytes[0] = 'X';
    try {
      decode_raster(bytes);
    } catch (const Error& e) {
      return e.code() == Errc::kBadMagic;
    }
    return false;
  });
  checks.emplace_back("empty scene detects nothing", [] {
    const TsdfVolume vol(GridSpec{});
    return detect_from_volume(CaptureWindow{}, vol, SuctionCupSpec{}, DetectorConfig{}).poses.empty();
  });

  Json results = Json::array();
  bool all = true;
  for (const auto& [name, check] : checks) {
    bool ok = false;
    try {
      ok = check();
    } catch (const std::exception&) {
      ok = false;
    }
    all = all && ok;
    std::cout << (ok ? "ok   " : "FAIL ") << name << "\n";
    results.push_back({{"name", name}, {"ok", ok}});
  }
  Json report = report_header("selftest", g);
  report["checks"] = results;
  report["passed"] = all;
  write_report(g, "selftest", report);
  return all ? 0 : 2;
}

}  // namespace beltpick::cli
