// Acceptance checks, one PASS/FAIL line per criterion.
//
//   beltpick_acceptance [--criterion N] [--cli PATH] [--work DIR]
//
// Without --criterion every check runs. Exit status is 0 only when all the
// selected checks pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "beltpick/declutter.hpp"
#include "beltpick/eval.hpp"
#include "beltpick/render.hpp"
#include "beltpick/rng.hpp"
#include "beltpick/store.hpp"

using namespace beltpick;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Scoped worker-count override.
struct Threads {
  explicit Threads(int n) { setenv("BELTPICK_THREADS", std::to_string(n).c_str(), 1); }
  ~Threads() { unsetenv("BELTPICK_THREADS"); }
};

// Capture window of a scene moving on the belt, newest timestep last.
CaptureWindow window_of(const Scene& scene, const BeltConfig& belt, int timesteps, const NoiseSpec& noise = {}) {
  const auto rig = default_stereo_rig();
  std::vector<StereoCapture> history;
  for (int t = 0; t < timesteps; ++t) {
    const Scene at = scene_at_time(scene, belt, -(timesteps - 1 - t) * belt.timestep);
    StereoCapture c;
    c.timestep_index = t;
    c.timestamp = t * belt.timestep;
    for (int cam = 0; cam < 2; ++cam)
      c.cameras[cam] = capture_view(at, CameraIntrinsics{}, rig[cam], t, cam, c.timestamp, noise, SuctionCupSpec{}, 4);
    history.push_back(std::move(c));
  }
  return assemble_window(history, timesteps, belt);
}

RandomizationSpec three_objects() {
  RandomizationSpec spec;
  spec.count_min = spec.count_max = 3;
  return spec;
}

// ---- 1: moving scene vs transformed extrinsics ------------------------------

Outcome belt_equivalence() {
  const auto t0 = Clock::now();
  const AssetLibrary lib = builtin_assets();
  const BeltConfig belt;  // 100 mm/s, 1 s steps
  const CameraIntrinsics intr;
  const auto rig = default_stereo_rig();
  const int n = 5;
  double worst = 0.0;
  std::size_t mismatched_validity = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene scene = generate_scene(RandomizationSpec{}, lib, seed);
    std::vector<StereoCapture> history(n);
    for (int t = 0; t < n; ++t) {
      history[t].timestep_index = t;
      history[t].timestamp = t * belt.timestep;
      for (int cam = 0; cam < 2; ++cam) {
        history[t].cameras[cam].pose = rig[cam];
        history[t].cameras[cam].camera_index = cam;
        history[t].cameras[cam].timestamp = history[t].timestamp;
      }
    }
    const CaptureWindow window = assemble_window(history, n, belt);
    for (const CaptureView& view : window.views) {
      const DepthMap moving = render_depth(scene_at_time(scene, belt, -view.lag * belt.timestep), intr, rig[view.camera_index]);
      const DepthMap fixed = render_depth(scene, intr, view.pose);
      for (std::size_t i = 0; i < moving.size(); ++i) {
        if ((moving[i] > 0.0) != (fixed[i] > 0.0)) ++mismatched_validity;
        worst = std::max(worst, std::abs(moving[i] - fixed[i]));
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = worst <= 1e-6 && mismatched_validity == 0 && secs < 30.0;
  return {pass, fmt("20 scenes x 10 views, max |diff| %.3g mm (<= 1e-6), validity mismatches %zu, %.1f s (< 30 s)",
                    worst, mismatched_validity, secs)};
}

// ---- 2: reconstruction quality ------------------------------------------------

// Values measured on the first run; any drift is reported.
constexpr double kPinnedSurfaceMaeClean = 8.2637;
constexpr double kPinnedSurfaceMaeNoisy = 8.2715;

Outcome reconstruction_quality() {
  const AssetLibrary lib = builtin_assets();
  const BeltConfig belt;
  const GridSpec grid;  // 50x40x30 at 10 mm
  double clean_sum = 0.0, noisy_sum = 0.0, worst_secs = 0.0;
  const int scenes = 5;
  for (int s = 0; s < scenes; ++s) {
    const Scene scene = generate_scene(three_objects(), lib, s);
    const TsdfVolume gt = gt_tsdf(scene, grid).volume;
    const CaptureWindow clean_window = window_of(scene, belt, 5);
    {
      Threads single(1);
      const auto t0 = Clock::now();
      const TsdfVolume vol = fuse(clean_window, stored_depth_provider(), grid);
      worst_secs = std::max(worst_secs, seconds_since(t0));
      clean_sum += tsdf_errors(vol, gt).surface_mae;
    }
    NoiseSpec noise;
    noise.sigma = 2.0;
    noise.seed = static_cast<std::uint64_t>(s);
    const TsdfVolume noisy = fuse(window_of(scene, belt, 5, noise), stored_depth_provider(), grid);
    noisy_sum += tsdf_errors(noisy, gt).surface_mae;
  }
  const double clean = clean_sum / scenes;
  const double noisy = noisy_sum / scenes;
  const bool drift = std::abs(clean - kPinnedSurfaceMaeClean) > 1e-3 || std::abs(noisy - kPinnedSurfaceMaeNoisy) > 1e-3;
  const bool pass = clean <= 5.0 && noisy <= 8.0 && worst_secs < 60.0 && !drift;
  return {pass, fmt("surface TSDF MAE %.4f mm perfect depth (<= 5), %.4f mm sigma 2 (<= 8), worst fuse %.2f s "
                    "single-thread (< 60)%s",
                    clean, noisy, worst_secs, drift ? ", DRIFT from pinned values" : "")};
}

// ---- 3: marching cubes ----------------------------------------------------------

Outcome marching_cubes_accuracy() {
  GridSpec g;
  g.origin = Vec3(-145, -145, -145);
  g.dims = {30, 30, 30};
  const TriMesh sphere = marching_cubes(sphere_tsdf(g, Vec3(0.37, -0.21, 0.55), 100.0));
  const double exact = 4.0 * M_PI * 100.0 * 100.0;
  const double rel = std::abs(sphere.area() - exact) / exact;
  const std::size_t boundary = sphere.boundary_edge_count();

  GridSpec pg;
  pg.origin = Vec3(5, -195, 5);
  TsdfVolume plane(pg);
  for (std::size_t i = 0; i < pg.count(); ++i) {
    plane.values[i] = std::clamp((pg.center(i).z() - 155.0) / pg.truncation, -1.0, 1.0);
    plane.weights[i] = 1.0;
  }
  const TriMesh pm = marching_cubes(plane);
  double worst = 0.0;
  for (const Vec3& v : pm.vertices) worst = std::max(worst, std::abs(v.z() - 155.0));
  const bool pass = rel <= 0.02 && boundary == 0 && worst <= 1e-6 && !pm.vertices.empty();
  return {pass, fmt("sphere area error %.3f%% (<= 2%%), boundary edges %zu, plane z error %.2g mm (<= 1e-6)", rel * 100,
                    boundary, worst)};
}

// ---- 4: AP arithmetic -----------------------------------------------------------

Outcome ap_arithmetic() {
  const double hand = ap_from_scores({0.9, 0.7, 0.5, 0.3, 0.1}, 5);
  // Ground-truth annotations ranked by their own score, replayed as predictions.
  const AssetLibrary lib = builtin_assets();
  const SuctionCupSpec cup;
  double worst_perfect = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Scene scene = generate_scene(RandomizationSpec{}, lib, seed);
    const AnnotationSet set = annotate_scene(scene, cup, 64, seed);
    std::vector<SuctionPoseResult> ranked;
    for (const auto& r : set.records) {
      if (r.label.overall <= 0.8) continue;
      SuctionPoseResult p;
      p.point = r.point;
      p.direction = r.direction;
      p.overall = r.label.overall;
      ranked.push_back(p);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.overall > b.overall; });
    if (ranked.size() < 5) return {false, fmt("seed %llu has fewer than 5 positive annotations", (unsigned long long)seed)};
    worst_perfect = std::min(worst_perfect, ap_topk(ranked, scene, cup, 5, 15.0));
  }
  const bool pass = hand == 0.5 && worst_perfect == 1.0;
  return {pass, fmt("hand case %.17g (== 0.5), perfect predictions %.17g (== 1.0)", hand, worst_perfect)};
}

// ---- 5: collision field vs triangle-cylinder oracle ------------------------------

Outcome collision_oracle() {
  const AssetLibrary lib = builtin_assets();
  const BeltConfig belt;
  const GridSpec g;
  const SuctionCupSpec cup;
  const DetectorConfig dc;
  std::size_t total = 0, agree = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Scene scene = generate_scene(three_objects(), lib, seed);
    const TsdfVolume vol = fuse(window_of(scene, belt, 5), stored_depth_provider(), g);
    const TriMesh mesh = marching_cubes(vol);
    const Occupancy occ = occupancy_from_tsdf(vol, dc.unobserved);
    const ComponentLabeling lab = connected_components(occ);
    const auto surf = surface_mask(occ);
    const auto col = collision_volume(vol, lab, surf, cup);

    // Each triangle belongs to the component of the nearest labelled voxel among the 8 around its centroid.
    std::vector<std::uint32_t> owner(mesh.triangle_count(), 0);
    for (std::size_t f = 0; f < mesh.triangle_count(); ++f) {
      const Vec3 c = (mesh.corner(f, 0) + mesh.corner(f, 1) + mesh.corner(f, 2)) / 3.0;
      const Vec3 rel = (c - g.origin) / g.voxel_size;
      const int i0 = static_cast<int>(std::floor(rel.x()));
      const int j0 = static_cast<int>(std::floor(rel.y()));
      const int k0 = static_cast<int>(std::floor(rel.z()));
      double best = std::numeric_limits<double>::infinity();
      for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
          for (int di = 0; di < 2; ++di) {
            const int i = i0 + di, j = j0 + dj, k = k0 + dk;
            if (!g.inside(i, j, k)) continue;
            const std::size_t idx = g.index(i, j, k);
            if (lab.labels[idx] == 0) continue;
            const double d = (g.center(idx) - c).squaredNorm();
            if (d < best) {
              best = d;
              owner[f] = lab.labels[idx];
            }
          }
    }

    std::size_t n = 0, a = 0;
    for (std::size_t idx = 0; idx < g.count(); ++idx) {
      if (!surf[idx]) continue;
      const auto cc = g.coords(idx);
      const auto dir = tsdf_gradient(vol, cc[0], cc[1], cc[2]);
      int oracle = 1;
      if (!dir) {
        oracle = 0;
      } else {
        const Cylinder cyl{g.center(idx), *dir, cup.collision_radius, cup.collision_height};
        if (cyl.min_z() < 0.0) oracle = 0;
        for (std::size_t f = 0; f < mesh.triangle_count() && oracle; ++f) {
          if (owner[f] == lab.labels[idx]) continue;
          if (triangle_intersects_cylinder(mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2), cyl)) oracle = 0;
        }
      }
      ++n;
      if (oracle == col[idx]) ++a;
    }
    total += n;
    agree += a;
    per_seed += fmt(" %.4f", static_cast<double>(a) / n);
  }
  const double acc = static_cast<double>(agree) / total;
  return {acc >= 0.99, fmt("agreement %.4f over %zu surface voxels (>= 0.99); per scene%s", acc, total, per_seed.c_str())};
}

// ---- 6: closed-loop declutter ------------------------------------------------------

constexpr double kPinnedSr = 0.96;
constexpr double kPinnedDr = 0.96;
constexpr double kPinnedDrDropout = 0.96;

struct DeclutterTotals {
  double sr = 0.0;
  double dr = 0.0;
};

DeclutterTotals run_declutter_set(double dropout) {
  const AssetLibrary lib = builtin_assets();
  RandomizationSpec spec;
  spec.count_min = spec.count_max = 5;
  // Spread out upstream so every object streams through the capture zone.
  spec.region_lo = Vec2(-1100, -170);
  spec.region_hi = Vec2(-100, 170);
  std::size_t attempts = 0, successes = 0;
  double dr_sum = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Scene scene = generate_scene(spec, lib, 1000 + i);
    DeclutterConfig cfg;
    cfg.depth_noise.transparent_dropout = dropout;
    cfg.depth_noise.seed = static_cast<std::uint64_t>(i);
    const EpisodeLog log = simulate_declutter(scene, cfg);
    attempts += log.attempts.size();
    successes += log.successes;
    dr_sum += log.declutter_rate;
  }
  return {attempts ? static_cast<double>(successes) / attempts : 0.0, dr_sum / 20.0};
}

Outcome closed_loop() {
  const auto t0 = Clock::now();
  const DeclutterTotals clean = run_declutter_set(0.0);
  const DeclutterTotals drop = run_declutter_set(0.8);
  const double degradation = clean.dr - drop.dr;
  const bool drift = std::abs(clean.sr - kPinnedSr) > 1e-9 || std::abs(clean.dr - kPinnedDr) > 1e-9 ||
                     std::abs(drop.dr - kPinnedDrDropout) > 1e-9;
  const bool pass = clean.sr >= 0.95 && clean.dr >= 0.90 && degradation <= 0.15 && !drift;
  return {pass, fmt("SR %.4f (>= 0.95), DR %.4f (>= 0.90), DR with dropout 0.8 %.4f, degradation %.4f (<= 0.15), "
                    "%.0f s%s",
                    clean.sr, clean.dr, drop.dr, degradation, seconds_since(t0),
                    drift ? ", DRIFT from pinned values" : "")};
}

// ---- 7: score product and avoidance properties ----------------------------------

Outcome property_suites() {
  SplitMix64 rng(77);
  const int cases = 20000;
  std::size_t failures = 0;
  for (int n = 0; n < cases; ++n) {
    const double s = rng.uniform();
    const double w = rng.uniform();
    const double c = static_cast<double>(rng.below(2));
    if (compose_score(s, w, c) != s * w * c) ++failures;
    if (compose_score(s, w, 0.0) != 0.0) ++failures;
    if (compose_score(s, 1.0, 1.0) != s) ++failures;
  }

  for (int n = 0; n < cases; ++n) {
    const int width = 16;
    InstanceMask mask(width, 1, 0);
    for (int u = 0; u < width; ++u) mask(u, 0) = static_cast<std::uint32_t>(rng.below(6));
    std::set<std::uint32_t> attempted;
    for (std::uint32_t id = 1; id < 6; ++id)
      if (rng.uniform() < 0.25) attempted.insert(id);
    std::vector<SuctionPoseResult> ranked(1 + rng.below(12));
    for (auto& p : ranked) {
      p.u = static_cast<int>(rng.below(width));
      p.overall = rng.uniform();
    }
    ranked = topk(ranked, static_cast<int>(ranked.size()), width);
    const auto out = repetitive_avoidance(ranked, {&mask}, attempted);

    std::set<std::uint32_t> seen;
    std::size_t cursor = 0;
    for (const auto& p : out) {
      const std::uint32_t id = mask(p.u, 0);
      if (p.instance_id != id) ++failures;
      if (id != 0 && !seen.insert(id).second) ++failures;   // one pose per instance
      if (id != 0 && attempted.count(id)) ++failures;      // attempted ids excluded
      while (cursor < ranked.size() && !(ranked[cursor].u == p.u && ranked[cursor].overall == p.overall)) ++cursor;
      if (cursor == ranked.size()) ++failures;  // order preserved, nothing invented
      ++cursor;
    }
    // Every dropped pose had a reason.
    std::set<std::uint32_t> kept;
    for (const auto& p : ranked) {
      const std::uint32_t id = mask(p.u, 0);
      const bool expected = id == 0 || (!attempted.count(id) && kept.insert(id).second);
      const bool present = std::any_of(out.begin(), out.end(),
                                       [&](const auto& q) { return q.u == p.u && q.overall == p.overall; });
      if (expected != present) ++failures;
    }
  }
  return {failures == 0, fmt("%d product cases, %d avoidance cases, %zu violations", cases, cases, failures)};
}

// ---- 8: throughput ------------------------------------------------------------------

Outcome throughput() {
  const AssetLibrary lib = builtin_assets();
  const BeltConfig belt;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Scene scene = generate_scene(RandomizationSpec{}, lib, 500 + seed);
    const CaptureWindow window = window_of(scene, belt, 5);
    Threads single(1);
    const auto t0 = Clock::now();
    const DetectionResult r = detect(window, stored_depth_provider(), GridSpec{}, SuctionCupSpec{}, DetectorConfig{});
    worst = std::max(worst, seconds_since(t0));
    if (r.poses.empty()) return {false, "no detections"};
  }
  return {worst < 2.0, fmt("fuse 10 views + detect, worst of 3 scenes %.3f s single-thread (< 2 s)", worst)};
}

// ---- 9: CLI determinism ---------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  return files;
}

bool run_pipeline(const std::string& cli, const fs::path& out, int threads, std::string& error) {
  fs::remove_all(out);
  const std::string prefix = "BELTPICK_THREADS=" + std::to_string(threads) + " \"" + cli + "\" --seed 7 --noise-sigma 1 --out \"" +
                             out.string() + "\" ";
  const std::vector<std::string> commands = {"gen --count 2", "render",   "annotate",
                                             "fuse",          "detect",   "eval",
                                             "declutter --scene s0000", "selftest"};
  for (const auto& c : commands) {
    const std::string line = prefix + c + " > /dev/null";
    if (std::system(line.c_str()) != 0) {
      error = "command failed: " + c;
      return false;
    }
  }
  return true;
}

Outcome cli_determinism(const std::string& cli, const fs::path& work) {
  if (cli.empty()) return {false, "CLI binary not given (--cli)"};
  std::string error;
  std::vector<std::map<std::string, std::string>> runs;
  for (const auto& [name, threads] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 1}, {"c", 8}}) {
    // Same output path every time; reports record it.
    const fs::path dir = work / "determinism";
    if (!run_pipeline(cli, dir, threads, error)) return {false, error};
    runs.push_back(snapshot(dir));
  }
  std::size_t differing = 0;
  std::string first;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].size() != runs[0].size()) ++differing;
    for (const auto& [path, bytes] : runs[0]) {
      auto it = runs[r].find(path);
      if (it == runs[r].end() || it->second != bytes) {
        ++differing;
        if (first.empty()) first = path;
      }
    }
  }
  return {differing == 0 && !runs[0].empty(),
          fmt("%zu files per run, 2 repeats (1 and 8 threads), %zu differences%s%s", runs[0].size(), differing,
              first.empty() ? "" : ", first: ", first.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  std::string cli;
  fs::path work = fs::temp_directory_path() / "beltpick_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) only = std::atoi(argv[++i]);
    else if (a == "--cli" && i + 1 < argc) cli = argv[++i];
    else if (a == "--work" && i + 1 < argc) work = argv[++i];
    else {
      std::fprintf(stderr, "usage: %s [--criterion N] [--cli PATH] [--work DIR]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"belt equivalence", belt_equivalence},
      {"reconstruction quality", reconstruction_quality},
      {"marching cubes", marching_cubes_accuracy},
      {"AP@Top-k arithmetic", ap_arithmetic},
      {"collision oracle", collision_oracle},
      {"closed-loop declutter", closed_loop},
      {"score and avoidance properties", property_suites},
      {"throughput", throughput},
      {"CLI determinism", [&] { return cli_determinism(cli, work); }},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
