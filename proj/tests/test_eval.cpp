#include <cmath>

#include "doctest.h"

#include "beltpick/eval.hpp"
#include "beltpick/rng.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"

using namespace beltpick;

namespace {

GridSpec cube_grid(int n) {
  GridSpec g;
  g.dims = {n, n, n};
  return g;
}

ScoreVolume score_grid(const GridSpec& g) {
  return {g, std::vector<double>(g.count(), 0.0), std::vector<std::uint8_t>(g.count(), 0),
          std::vector<std::uint8_t>(g.count(), 0), 1};
}

SuctionPoseResult pose_at(const Vec3& p, const Vec3& d) {
  SuctionPoseResult r;
  r.point = p;
  r.direction = d;
  return r;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("TSDF errors") {
    const GridSpec g = cube_grid(4);
    SplitMix64 rng(9);
    TsdfVolume gt(g), pred(g);
    for (std::size_t i = 0; i < g.count(); ++i) {
      gt.values[i] = rng.uniform(-0.8, 0.8);
      gt.weights[i] = 1.0;
      pred.values[i] = rng.uniform(-1, 1);
      pred.weights[i] = rng.uniform() < 0.8 ? 1.0 : 0.0;
    }
    CHECK(tsdf_errors(gt, gt).mae == 0.0);

    TsdfVolume shifted = gt;
    for (double& v : shifted.values) v += 5.0 / g.truncation;
    CHECK(tsdf_mae(shifted, gt) == doctest::Approx(5.0).epsilon(1e-12));

    // Direct loop over the 4x4x4 grid.
    double sum = 0.0, surface_sum = 0.0;
    std::size_t n = 0, ns = 0;
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
          const std::size_t idx = g.index(i, j, k);
          if (pred.weights[idx] == 0.0) continue;
          const double err = std::abs(pred.values[idx] - gt.values[idx]) * g.truncation;
          sum += err;
          ++n;
          bool change = false;
          const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
          for (const auto& d : nb)
            if (g.inside(i + d[0], j + d[1], k + d[2]) &&
                (gt.value(i + d[0], j + d[1], k + d[2]) < 0) != (gt.value(i, j, k) < 0))
              change = true;
          if (change) {
            surface_sum += err;
            ++ns;
          }
        }
    const TsdfErrors e = tsdf_errors(pred, gt);
    CHECK(e.count == n);
    CHECK(e.surface_count == ns);
    CHECK(e.mae == doctest::Approx(sum / n).epsilon(1e-12));
    CHECK(e.surface_mae == doctest::Approx(surface_sum / ns).epsilon(1e-12));

    CHECK(test::error_code([&] { tsdf_errors(TsdfVolume(cube_grid(3)), gt); }) == Errc::kSpecMismatch);
  }

  TEST_CASE("seal map error") {
    SealMap a(3, 1), b(3, 1);
    for (int u = 0; u < 3; ++u) a.valid(u, 0) = b.valid(u, 0) = 1;
    CHECK(seal_mae(a, a) == 0.0);
    for (int u = 0; u < 3; ++u) b.value(u, 0) = 1.0;
    CHECK(seal_mae(a, b) == 1.0);
    a.value(0, 0) = 0.5;
    a.value(1, 0) = 0.9;
    a.valid(2, 0) = 0;
    CHECK(seal_mae(a, b) == doctest::Approx((0.5 + 0.1) / 2.0));
    CHECK(seal_mae(SealMap(3, 1), b) == 0.0);
  }

  TEST_CASE("collision agreement") {
    const GridSpec g = cube_grid(3);
    ScoreVolume gt = score_grid(g), pred = score_grid(g);
    CHECK(collision_accuracy(pred, gt) == 1.0);
    for (std::size_t i = 0; i < 4; ++i) {
      gt.surface[i] = 1;
      gt.collision[i] = i % 2;
      pred.collision[i] = 1 - gt.collision[i];
    }
    CHECK(collision_accuracy(gt, gt) == 1.0);
    CHECK(collision_accuracy(pred, gt) == 0.0);
    pred.collision[0] = gt.collision[0];
    CHECK(collision_accuracy(pred, gt) == 0.25);
  }

  TEST_CASE("average precision over thresholds") {
    CHECK(ap_from_scores({0.9, 0.7, 0.5, 0.3, 0.1}, 5) == 0.5);
    CHECK(ap_from_scores({1, 1, 1, 1, 1}, 5) == 1.0);
    CHECK(ap_from_scores({0, 0, 0, 0, 0}, 5) == 0.0);
    CHECK(ap_from_scores({}, 5) == 0.0);
    // Missing predictions count as misses.
    CHECK(ap_from_scores({1.0}, 2) == 0.5);
    // Scores equal to a threshold do not pass it.
    CHECK(ap_from_scores({0.2}, 1) == 0.0);
  }

  TEST_CASE("ground-truth re-evaluation") {
    const AssetLibrary lib = test::library_with("plate", make_box(Vec3(120, 80, 20)), 0.05);
    const Scene scene = test::place(lib, {{"plate", 0, 0}});
    const SuctionCupSpec cup;
    const auto snap = snap_to_surface(scene, Vec3(3, 2, 26), 15.0);
    REQUIRE(snap);
    CHECK(test::near(snap->point, Vec3(3, 2, 20), 1e-9));
    CHECK(snap->distance == doctest::Approx(6.0));
    CHECK_FALSE(snap_to_surface(scene, Vec3(0, 0, 60), 15.0));

    std::uint32_t hit = 0;
    const SuctionLabel on = gt_reevaluate(scene, Vec3(0, 0, 24), Vec3(0, 0, 1), cup, 15.0, &hit);
    CHECK(hit == 1u);
    CHECK(on.overall == 1.0);
    const SuctionLabel off = gt_reevaluate(scene, Vec3(0, 0, 60), Vec3(0, 0, 1), cup, 15.0);
    CHECK(off.overall == 0.0);
    CHECK(off.seal == 0.0);

    std::vector<SuctionPoseResult> perfect;
    for (int i = 0; i < 5; ++i) perfect.push_back(pose_at(Vec3(-10.0 + 5.0 * i, 3, 20), Vec3(0, 0, 1)));
    CHECK(ap_topk(perfect, scene, cup, 5, 15.0) == 1.0);
    std::vector<SuctionPoseResult> mixed = perfect;
    mixed[4].point = Vec3(300, 0, 20);
    mixed[3].direction = Vec3(1, 0, 0);
    CHECK(ap_topk(mixed, scene, cup, 5, 15.0) < 1.0);
    CHECK(ap_topk({}, scene, cup, 5, 15.0) == 0.0);
  }
}
