import numpy as np
import pytest

import beltpick as bp


def test_score_and_ap():
    assert bp.compose_score(0.5, 0.5, 1.0) == 0.25
    assert bp.compose_score(0.9, 0.8, 0.0) == 0.0
    assert bp.ap_from_scores([0.9, 0.7, 0.5, 0.3, 0.1], 5) == 0.5


def test_projection_round_trip():
    intr = bp.CameraIntrinsics()
    pose = bp.default_stereo_rig()[0]
    point = np.array([120.0, -40.0, 30.0])
    pixel, depth = bp.project(intr, pose, point)
    assert depth > 0
    back = bp.backproject(intr, pose, pixel, depth)
    assert np.allclose(back, point, atol=1e-9)


def test_errors_carry_codes():
    intr = bp.CameraIntrinsics()
    pose = bp.RigidPose()
    with pytest.raises(bp.BeltpickError) as info:
        bp.backproject(intr, pose, np.array([1.0, 1.0]), -5.0)
    assert info.value.code == "NonPositiveDepth"
    with pytest.raises(bp.BeltpickError):
        bp.RigidPose(np.eye(3) * 2.0, np.zeros(3))


def test_scene_render_fuse_detect():
    scene = bp.generate_scene(3, count_min=3, count_max=3)
    assert len(scene) == 3
    assert {d["instance_id"] for d in scene.instances()} == {1, 2, 3}
    assert bp.generate_scene(3).instances()[0]["asset"] == scene.instances()[0]["asset"]

    depth = bp.render_depth(scene, bp.default_stereo_rig()[0])
    assert depth.shape == (240, 320)
    assert (depth > 0).mean() > 0.5

    window = bp.capture_window(scene)
    assert len(window) == 10
    values, weights = bp.fuse(window)
    assert values.shape == (30, 40, 50)
    assert (weights > 0).any()
    assert values.min() >= -1.0 and values.max() <= 1.0

    poses = bp.detect(window, k=3)
    assert 0 < len(poses) <= 3
    scores = [p["overall"] for p in poses]
    assert scores == sorted(scores, reverse=True)


def test_declutter_episode():
    scene = bp.generate_scene(5).translated(np.array([-600.0, 0.0, 0.0]))
    log = bp.declutter(scene)
    assert 0.0 <= log["success_rate"] <= 1.0
    assert len(log["removed"]) <= len(scene)
