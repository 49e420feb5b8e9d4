"""Python bindings for the beltpick suction-grasp pipeline."""

import json

from ._beltpick import (
    BeltpickError,
    CameraIntrinsics,
    CaptureWindow,
    RigidPose,
    Scene,
    ap_from_scores,
    backproject,
    capture_window,
    compose_score,
    default_stereo_rig,
    detect,
    fuse,
    generate_scene,
    project,
    render_depth,
)
from ._beltpick import declutter_json as _declutter_json


def declutter(scene, transparent_dropout=0.0, seed=0):
    """Run a closed-loop declutter episode and return its log as a dict."""
    return json.loads(_declutter_json(scene, transparent_dropout, seed))


__all__ = [
    "BeltpickError",
    "CameraIntrinsics",
    "CaptureWindow",
    "RigidPose",
    "Scene",
    "ap_from_scores",
    "backproject",
    "capture_window",
    "compose_score",
    "declutter",
    "default_stereo_rig",
    "detect",
    "fuse",
    "generate_scene",
    "project",
    "render_depth",
]
