#include <cmath>

#include "doctest.h"

#include "beltpick/recon.hpp"
#include "beltpick/render.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"

using namespace beltpick;

namespace {

GridSpec column_grid() {
  GridSpec g;
  g.origin = Vec3(0, 0, 0);
  g.dims = {1, 1, 2};
  return g;
}

DepthMap flat_depth(const CameraIntrinsics& intr, double d) { return DepthMap(intr.width, intr.height, d); }
Raster<std::uint8_t> all_valid(const CameraIntrinsics& intr) { return Raster<std::uint8_t>(intr.width, intr.height, 1); }

RigidPose looking_up_from(double z) {
  RigidPose p;
  p.center = Vec3(0, 0, z);
  return p;
}

}  // namespace

TEST_SUITE("recon") {
  TEST_CASE("projective update") {
    const CameraIntrinsics intr;
    TsdfVolume vol(column_grid());
    // Camera 310 mm in front of voxel 0; the plane sits 300 mm away.
    integrate(vol, flat_depth(intr, 300.0), all_valid(intr), intr, looking_up_from(-310.0));
    CHECK(vol.values[0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    CHECK(vol.weights[0] == 1.0);
    // Voxel 1 is 320 away: -20 mm.
    CHECK(vol.values[1] == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));

    TsdfVolume near(column_grid());
    integrate(near, flat_depth(intr, 300.0), all_valid(intr), intr, looking_up_from(-260.0));
    CHECK(near.values[0] == 1.0);

    // Second observation averages with unit weights.
    integrate(vol, flat_depth(intr, 320.0), all_valid(intr), intr, looking_up_from(-310.0));
    CHECK(vol.weights[0] == 2.0);
    CHECK(vol.values[0] == doctest::Approx(0.5 * (-1.0 / 3.0 + 1.0 / 3.0)).epsilon(1e-15));

    // Beyond the truncation band behind the surface nothing is written.
    TsdfVolume deep(column_grid());
    integrate(deep, flat_depth(intr, 250.0), all_valid(intr), intr, looking_up_from(-290.0));
    CHECK(deep.weights[0] == 0.0);
  }

  TEST_CASE("no valid pixels leave the volume unobserved") {
    const CameraIntrinsics intr;
    TsdfVolume vol{GridSpec{}};
    integrate(vol, flat_depth(intr, 300.0), Raster<std::uint8_t>(intr.width, intr.height, 0), intr,
              default_stereo_rig()[0]);
    for (double w : vol.weights) CHECK(w == 0.0);
    CHECK(test::error_code([&] {
            integrate(vol, DepthMap(10, 10, 1.0), Raster<std::uint8_t>(10, 10, 1), intr, RigidPose{});
          }) == Errc::kDimensionMismatch);
  }

  TEST_CASE("marching cubes on a sphere") {
    GridSpec g;
    g.origin = Vec3(-145, -145, -145);
    g.dims = {30, 30, 30};
    const TsdfVolume vol = sphere_tsdf(g, Vec3(0.3, -0.7, 1.1), 100.0);
    const TriMesh mesh = marching_cubes(vol);
    CHECK(mesh.boundary_edge_count() == 0);
    CHECK(mesh.watertight);
    const double area = 4.0 * M_PI * 100.0 * 100.0;
    CHECK(std::abs(mesh.area() - area) / area < 0.02);
    for (const Vec3& v : mesh.vertices) CHECK(std::abs((v - Vec3(0.3, -0.7, 1.1)).norm() - 100.0) < 2.0);
  }

  TEST_CASE("marching cubes on a plane") {
    GridSpec g;
    g.origin = Vec3(5, 5, 5);
    g.dims = {8, 6, 30};
    TsdfVolume vol(g);
    for (std::size_t i = 0; i < g.count(); ++i) {
      vol.values[i] = std::clamp((g.center(i).z() - 155.0) / g.truncation, -1.0, 1.0);
      vol.weights[i] = 1.0;
    }
    const TriMesh mesh = marching_cubes(vol);
    REQUIRE_FALSE(mesh.triangles.empty());
    for (const Vec3& v : mesh.vertices) CHECK(std::abs(v.z() - 155.0) <= 1e-6);
    CHECK(mesh.area() == doctest::Approx(70.0 * 50.0).epsilon(1e-9));

    TsdfVolume positive(g);
    for (double& w : positive.weights) w = 1.0;
    CHECK(test::error_code([&] { marching_cubes(positive); }) == Errc::kEmptySurface);
  }

  TEST_CASE("mesh depth of reconstructed shapes") {
    GridSpec g;
    g.origin = Vec3(-145, -145, -145);
    g.dims = {30, 30, 30};
    const TriMesh sphere = marching_cubes(sphere_tsdf(g, Vec3::Zero(), 100.0));
    const CameraIntrinsics intr;
    const RigidPose pose = RigidPose::look_at(Vec3(0, 0, 600), Vec3::Zero(), Vec3::UnitY());
    const DepthMap depth = render_depth_from_mesh(sphere, intr, pose);
    int hits = 0;
    for (int v = 0; v < intr.height; v += 3)
      for (int u = 0; u < intr.width; u += 3) {
        const Vec3 dir = pixel_ray(intr, pose, Vec2(u, v));
        // Analytic first intersection with the sphere.
        const double b = pose.center.dot(dir);
        const double disc = b * b - (pose.center.squaredNorm() - 100.0 * 100.0);
        if (disc < 400.0) continue;  // skip grazing rays
        const double t = -b - std::sqrt(disc);
        const double z = t * dir.dot(pose.rotation.col(2));
        REQUIRE(depth(u, v) > 0.0);
        CHECK(std::abs(depth(u, v) - z) <= 15.0);
        ++hits;
      }
    CHECK(hits > 100);
  }

  TEST_CASE("ground-truth field of a resting cube") {
    const AssetLibrary lib = test::library_with("cube", make_box(Vec3(40, 40, 40)), 0.05);
    const Scene scene = test::place(lib, {{"cube", 0, 0}});
    GridSpec g;
    g.origin = Vec3(-50, -50, 0);
    g.dims = {11, 11, 9};
    g.voxel_size = 10.0;
    const TsdfVolume gt = gt_tsdf(scene, g).volume;
    CHECK(gt.value(5, 5, 2) == doctest::Approx(-20.0 / 30.0).epsilon(1e-12));
    CHECK(gt.value(3, 5, 2) == doctest::Approx(gt.value(7, 5, 2)).epsilon(1e-12));
    CHECK(gt.value(5, 3, 3) == doctest::Approx(gt.value(5, 7, 3)).epsilon(1e-12));

    // Brute force: nearest triangle or belt plane, sign from the box extent.
    const TriMesh& mesh = *scene.objects()[0].mesh;
    for (int k = 0; k < 5; ++k)
      for (int j = 3; j < 8; ++j)
        for (int i = 3; i < 8; ++i) {
          const Vec3 p = g.center(i, j, k);
          double d = std::abs(p.z());
          for (std::size_t f = 0; f < mesh.triangle_count(); ++f)
            d = std::min(d, (closest_point_on_triangle(p, mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2)) - p).norm());
          const bool inside = scene.objects()[0].bounds.contains(p) || p.z() < 0.0;
          const double expected = std::clamp((inside ? -d : d) / g.truncation, -1.0, 1.0);
          CHECK(gt.value(i, j, k) == doctest::Approx(expected).epsilon(1e-9));
          CHECK(gt.weight(i, j, k) > 0.0);
        }

    TriMesh open = make_box(Vec3(40, 40, 40));
    open.triangles.pop_back();
    const AssetLibrary open_lib = test::library_with("open", open, 0.05);
    const Scene open_scene = test::place(open_lib, {{"open", 0, 0}});
    CHECK(test::error_code([&] { gt_tsdf(open_scene, g); }) == Errc::kNonWatertight);
    CHECK(gt_tsdf(open_scene, g, true).used_fallback);
  }

  TEST_CASE("depth noise model") {
    const Scene scene = generate_scene(RandomizationSpec{}, builtin_assets(), 2);
    const CameraIntrinsics intr;
    const RigidPose pose = default_stereo_rig()[0];
    const RenderedView view = render_view(scene, intr, pose);

    const DepthFrame clean = noisy_depth(scene, intr, pose, 0, NoiseSpec{});
    CHECK(clean.depth == view.depth);

    NoiseSpec gauss;
    gauss.sigma = 2.0;
    gauss.seed = 5;
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (std::uint64_t key = 0; n < 100000; ++key) {
      const DepthFrame f = apply_depth_noise(view, scene, key, gauss);
      for (std::size_t i = 0; i < f.depth.size(); ++i) {
        if (!(view.depth[i] > 0.0)) continue;
        const double r = f.depth[i] - view.depth[i];
        sum += r;
        sum_sq += r * r;
        ++n;
      }
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum_sq / n - mean * mean);
    CHECK(std::abs(sd - 2.0) < 0.2);
    CHECK(std::abs(mean) < 0.05);
    CHECK(apply_depth_noise(view, scene, 3, gauss).depth == apply_depth_noise(view, scene, 3, gauss).depth);
    CHECK(apply_depth_noise(view, scene, 3, gauss).depth != apply_depth_noise(view, scene, 4, gauss).depth);

    const AssetLibrary glass = test::library_with("glass", make_box(Vec3(80, 80, 80)), 0.1, true);
    const Scene clear = test::place(glass, {{"glass", 50, 0}});
    NoiseSpec dropout;
    dropout.transparent_dropout = 1.0;
    const RenderedView glass_view = render_view(clear, intr, pose);
    const DepthFrame f = apply_depth_noise(glass_view, clear, 0, dropout);
    std::size_t object_pixels = 0;
    for (std::size_t i = 0; i < f.depth.size(); ++i) {
      if (glass_view.mask[i] == 0) continue;
      ++object_pixels;
      CHECK(f.valid[i] == 0);
      CHECK(f.depth[i] == kInvalidDepth);
    }
    CHECK(object_pixels > 100);
  }
}
