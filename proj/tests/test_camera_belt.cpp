#include "doctest.h"

#include "beltpick/camera_belt.hpp"
#include "beltpick/error.hpp"
#include "beltpick/rng.hpp"
#include "test_util.hpp"

using namespace beltpick;

TEST_SUITE("camera_belt") {
  TEST_CASE("principal point projects to the image center") {
    CameraIntrinsics intr;
    intr.fx = intr.fy = 600.0;
    const Projection p = project(intr, RigidPose{}, Vec3(0, 0, 400));
    CHECK(p.pixel.x() == doctest::Approx(160.0));
    CHECK(p.pixel.y() == doctest::Approx(120.0));
    CHECK(p.depth == doctest::Approx(400.0));
    const Projection q = project(intr, RigidPose{}, Vec3(100, 0, 600));
    CHECK(q.pixel.x() == doctest::Approx(260.0));
    CHECK(q.pixel.y() == doctest::Approx(120.0));
    CHECK(q.depth == doctest::Approx(600.0));
  }

  TEST_CASE("points behind the camera are rejected") {
    CHECK(test::error_code([] { project(CameraIntrinsics{}, RigidPose{}, Vec3(0, 0, -1)); }) == Errc::kBehindCamera);
    CHECK(test::error_code([] { backproject(CameraIntrinsics{}, RigidPose{}, Vec2(10, 10), 0.0); }) ==
          Errc::kNonPositiveDepth);
  }

  TEST_CASE("backprojection inverts projection") {
    CameraIntrinsics intr;
    intr.fx = intr.fy = 600.0;
    CHECK(test::near(backproject(intr, RigidPose{}, Vec2(160, 120), 400.0), Vec3(0, 0, 400), 1e-12));
    CHECK(test::near(backproject(intr, RigidPose{}, Vec2(260, 120), 600.0), Vec3(100, 0, 600), 1e-12));

    SplitMix64 rng(3);
    for (int i = 0; i < 2000; ++i) {
      const RigidPose pose =
          RigidPose::look_at(Vec3(rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(300, 900)),
                             Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), 0.0));
      const Vec2 px(rng.uniform(0, 320), rng.uniform(0, 240));
      const double depth = rng.uniform(50, 2000);
      const Projection back = project(intr, pose, backproject(intr, pose, px, depth));
      CHECK(test::near(back.pixel, px, 1e-6));
      CHECK(back.depth == doctest::Approx(depth).epsilon(1e-9));
    }
  }

  TEST_CASE("pixel rays are unit and pass through the backprojected point") {
    const RigidPose pose = default_stereo_rig()[0];
    const CameraIntrinsics intr;
    const Vec2 px(37.5, 201.25);
    const Vec3 dir = pixel_ray(intr, pose, px);
    CHECK(dir.norm() == doctest::Approx(1.0));
    const Vec3 p = backproject(intr, pose, px, 500.0);
    CHECK((p - pose.center).normalized().dot(dir) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("belt travel moves the equivalent camera downstream") {
    BeltConfig belt;
    RigidPose pose;
    pose.center = Vec3(0, 0, 500);
    CHECK(test::near(transform_extrinsics(pose, belt, 1).center, Vec3(100, 0, 500), 1e-12));
    CHECK(test::near(transform_extrinsics(pose, belt, 4).center, Vec3(400, 0, 500), 1e-12));
    const RigidPose same = transform_extrinsics(pose, belt, 0);
    CHECK(same.center == pose.center);
    CHECK(same.rotation == pose.rotation);
  }

  TEST_CASE("window assembly orders views and lags") {
    BeltConfig belt;
    std::vector<StereoCapture> history(5);
    for (int t = 0; t < 5; ++t) {
      history[t].timestep_index = t;
      history[t].timestamp = t;
      for (int c = 0; c < 2; ++c) {
        history[t].cameras[c].pose = default_stereo_rig()[c];
        history[t].cameras[c].camera_index = c;
      }
    }
    const CaptureWindow w = assemble_window(history, 5, belt);
    REQUIRE(w.views.size() == 10);
    const int lags[10] = {4, 4, 3, 3, 2, 2, 1, 1, 0, 0};
    for (int i = 0; i < 10; ++i) {
      CHECK(w.views[i].lag == lags[i]);
      const Vec3 expected = default_stereo_rig()[i % 2].center + Vec3(100.0 * lags[i], 0, 0);
      CHECK(test::near(w.views[i].pose.center, expected, 1e-9));
    }

    const CaptureWindow one = assemble_window(history, 1, belt);
    REQUIRE(one.views.size() == 2);
    CHECK(one.views[0].pose.center == default_stereo_rig()[0].center);

    const std::vector<StereoCapture> short_history(history.begin(), history.begin() + 3);
    CHECK(test::error_code([&] { assemble_window(short_history, 5, belt); }) == Errc::kInsufficientHistory);
  }

  TEST_CASE("execution shift and suction zone entry") {
    BeltConfig belt;
    CHECK(test::near(execution_shift(Vec3(0, 0, 50), 0.0, 2.0, belt), Vec3(200, 0, 50), 1e-12));
    CHECK(execution_shift(Vec3(0, 0, 50), 3.0, 3.0, belt) == Vec3(0, 0, 50));
    CHECK(test::error_code([&] { execution_shift(Vec3::Zero(), 2.0, 1.0, belt); }) == Errc::kNegativeDelay);
    CHECK(workspace_entry_time(Vec3(100, 0, 0), 10.0, belt) == doctest::Approx(15.0));
    CHECK(workspace_entry_time(Vec3(700, 0, 0), 10.0, belt) == doctest::Approx(10.0));
    CHECK(test::error_code([&] { workspace_entry_time(Vec3(1000, 0, 0), 0.0, belt); }) == Errc::kAlreadyPassed);
  }
}
