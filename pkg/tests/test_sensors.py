import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from landsim.estimator import vision_to_measurement
from landsim.plant import PlatformTruth, QuadrotorTruth, tag_pose
from landsim.sensors import GpsConfig, VisionConfig, detectable, gps_sense, tick_due, vision_sense

QUIET = VisionConfig(sigma0=0.0, sigma_per_m=0.0, sigma_yaw=0.0)


def quad_facing_tag(plat, r, bearing=0.0, height=0.0):
    tag, facing = tag_pose(plat)
    pos = tag + r * np.array([facing[0], facing[1], 0.0]) + np.array([0, 0, height])
    yaw = math.atan2(tag[1] - pos[1], tag[0] - pos[0]) + bearing
    return QuadrotorTruth(position=pos, yaw=yaw)


def test_gps_rate_gate():
    rng = np.random.default_rng(0)
    assert gps_sense(PlatformTruth(), rng, 0.3) is None
    assert gps_sense(PlatformTruth(), rng, 0.5) is not None


def test_gps_noise_free():
    m = gps_sense(PlatformTruth(px=2, py=3, theta=0.1), np.random.default_rng(0), 1.0,
                  GpsConfig(sigma_pos=0.0, sigma_theta=0.0))
    assert m.z == pytest.approx([2, 3, 0.1], abs=1e-15)


def test_gps_noise_std():
    rng = np.random.default_rng(1)
    errs = [gps_sense(PlatformTruth(), rng, 0.0).px for _ in range(10_000)]
    assert 0.48 <= np.std(errs) <= 0.52


@pytest.mark.parametrize("r", [4.0, 0.04])
def test_vision_range_gate(r):
    plat = PlatformTruth()
    q = quad_facing_tag(plat, r)
    assert vision_sense(q, plat, np.random.default_rng(0), 0.0) is None


def test_vision_noise_free_geometry():
    plat = PlatformTruth(px=1.0, py=0.5, theta=0.3)
    q = quad_facing_tag(plat, 1.0)
    m = vision_sense(q, plat, np.random.default_rng(0), 0.0, QUIET)
    tag, _ = tag_pose(plat)
    c, s = math.cos(q.yaw), math.sin(q.yaw)
    world = q.position + np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]]) @ m.relative_tag_position
    assert world == pytest.approx(tag, abs=1e-12)


def test_vision_behind_tag_and_outside_fov():
    plat = PlatformTruth()
    tag, facing = tag_pose(plat)
    behind = QuadrotorTruth(position=tag - 1.0 * facing, yaw=math.pi)
    assert not detectable(behind, plat)
    assert not detectable(quad_facing_tag(plat, 1.0, bearing=math.radians(60)), plat)
    assert detectable(quad_facing_tag(plat, 1.0, bearing=math.radians(30)), plat)


def test_tick_due_window_hits_each_boundary_once():
    dt = 0.002
    hits = [i * dt for i in range(5001) if tick_due(i * dt, 30.0, window=dt)]
    assert len(hits) == 301
    assert np.all(np.diff(hits) > 0)


poses = st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(-math.pi, math.pi))


@given(poses, st.floats(-4, 4), st.floats(-4, 4), st.floats(0, 3), st.floats(-math.pi, math.pi))
def test_no_detection_outside_gates(pose, dx, dy, z, yaw):
    plat = PlatformTruth(*pose)
    tag, facing = tag_pose(plat)
    q = QuadrotorTruth(position=tag + np.array([dx, dy, z - 0.8]), yaw=yaw)
    m = vision_sense(q, plat, np.random.default_rng(0), 0.0)
    if m is not None:
        rel = tag - q.position
        r = np.linalg.norm(rel)
        assert 0.05 <= r <= 3.5
        assert float(-rel @ facing) > 0


@given(poses, st.floats(0.1, 3.4), st.floats(-0.7, 0.7), st.floats(-0.5, 0.5))
def test_noise_free_round_trip(pose, r, bearing, height):
    plat = PlatformTruth(*pose, tag_offset_back=0.3)
    q = quad_facing_tag(plat, r, bearing, height)
    m = vision_sense(q, plat, np.random.default_rng(0), 0.0, QUIET)
    if m is None:
        return
    z = vision_to_measurement(m, q, plat.tag_offset_back)
    assert z[:2] == pytest.approx([plat.px, plat.py], abs=1e-12)
    assert math.remainder(z[2] - plat.theta, 2 * math.pi) == pytest.approx(0, abs=1e-12)
