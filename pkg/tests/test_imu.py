from __future__ import annotations

import numpy as np
import pytest

from bodyfuse.body import BodyShape, forward_kinematics
from bodyfuse.geometry import random_rotation, rot_z
from bodyfuse.imu import (
    CalibSet,
    FrameMismatch,
    ImuNoiseSpec,
    ImuReading,
    TooShort,
    apply_calibration,
    calibrate_mounting,
    corrupt,
    sensor_frame_readings,
    synth_accelerations,
)
from bodyfuse.trajectory import TrajectorySpec, generate_trajectory


def test_constant_positions_have_zero_acceleration():
    p = np.ones((10, 6, 3))
    np.testing.assert_array_equal(synth_accelerations(p, 1 / 60), 0.0)


def test_quadratic_is_exact():
    dt = 0.01
    t = np.arange(50) * dt
    g = np.array([0.3, -9.81, 1.5])
    p = 0.5 * t[:, None] ** 2 * g
    np.testing.assert_allclose(synth_accelerations(p, dt), np.broadcast_to(g, p.shape), rtol=1e-9, atol=1e-9)


def test_sine_second_difference_accuracy():
    dt, w = 1 / 60, 2 * np.pi
    t = np.arange(600) * dt
    a = synth_accelerations(np.sin(w * t), dt)
    exact = -(w**2) * np.sin(w * t)
    assert np.max(np.abs(a[1:-1] - exact[1:-1])) / w**2 < 1e-2


def test_endpoints_replicate_interior():
    p = np.cumsum(np.arange(20.0) ** 2)
    a = synth_accelerations(p, 0.1)
    assert a[0] == a[1] and a[-1] == a[-2]


def test_too_short():
    with pytest.raises(TooShort):
        synth_accelerations(np.zeros((2, 3)), 0.1)


def test_zero_noise_is_identity(rng):
    a = rng.standard_normal((100, 6, 3))
    spec = ImuNoiseSpec(sigma_white=0, sigma_bias_walk=0, initial_bias_std=0)
    meas, bias = corrupt(a, spec)
    np.testing.assert_array_equal(meas, a)
    np.testing.assert_array_equal(bias, 0.0)


def test_pure_constant_bias():
    a = np.zeros((50, 6, 3))
    spec = ImuNoiseSpec(sigma_white=0, sigma_bias_walk=0, initial_bias=(0.1, 0.0, 0.0))
    meas, _ = corrupt(a, spec)
    np.testing.assert_array_equal(meas[..., 0], 0.1)
    np.testing.assert_array_equal(meas[..., 1:], 0.0)


def test_white_noise_level():
    a = np.zeros((10000, 6, 1))
    meas, bias = corrupt(a, ImuNoiseSpec(sigma_white=0.05, seed=3))
    assert np.std(meas - bias) == pytest.approx(0.05, rel=0.05)


def test_bias_walk_increments_have_zero_mean():
    n = 100_000
    _, bias = corrupt(np.zeros((n + 1, 1, 1)), ImuNoiseSpec(sigma_bias_walk=0.002, seed=5))
    inc = np.diff(bias[:, 0, 0])
    assert abs(inc.mean()) < 3 * 0.002 / np.sqrt(n)
    assert inc.std() == pytest.approx(0.002, rel=0.02)


def test_corrupt_is_deterministic_per_seed(rng):
    a = rng.standard_normal((30, 6, 3))
    m1, _ = corrupt(a, ImuNoiseSpec(seed=9))
    m2, _ = corrupt(a, ImuNoiseSpec(seed=9))
    m3, _ = corrupt(a, ImuNoiseSpec(seed=10))
    np.testing.assert_array_equal(m1, m2)
    assert not np.array_equal(m1, m3)


def test_calibrate_identity_and_inverse():
    c = calibrate_mounting(np.eye(3)[None])
    np.testing.assert_array_equal(c.R_SB[0], np.eye(3))
    c = calibrate_mounting(rot_z(np.radians(30))[None])
    np.testing.assert_allclose(c.R_SB[0], rot_z(np.radians(-30)), atol=1e-15)


def test_calibration_closed_loop_gives_identity_bone_at_tpose(rng):
    mount = random_rotation(rng, 6)  # R_SB ground truth
    R_MW = random_rotation(rng, 6)
    # at the T-pose R_MB = I, so the sensor reports R_WS = R_WM R_MB R_BS
    Rws = np.swapaxes(R_MW, -1, -2) @ np.swapaxes(mount, -1, -2)
    calib = calibrate_mounting(Rws, R_MW)
    np.testing.assert_allclose(calib.R_SB, mount, atol=1e-12)
    out = apply_calibration(ImuReading(np.zeros((6, 3)), Rws, 0.0), calib)
    np.testing.assert_allclose(out.orientation, np.broadcast_to(np.eye(3), (6, 3, 3)), atol=1e-12)


def test_identity_calibration_flips_tags(rng):
    a = rng.standard_normal((6, 3))
    R = random_rotation(rng, 6)
    calib = CalibSet(np.broadcast_to(np.eye(3), (6, 3, 3)), np.broadcast_to(np.eye(3), (6, 3, 3)))
    out = apply_calibration(ImuReading(a, R, 1.0), calib)
    np.testing.assert_array_equal(out.orientation, R)
    assert (out.accel_frame, out.orientation_frame) == ("M", "MB")
    # with the sensor also aligned to the world, accelerations pass through
    level = apply_calibration(ImuReading(a, np.broadcast_to(np.eye(3), (6, 3, 3)), 1.0), calib)
    np.testing.assert_array_equal(level.accel, a)


def test_inverse_rotation_recovers_vector(rng):
    v = rng.standard_normal((6, 3))
    R_MW = random_rotation(rng, 6)
    R_WS = random_rotation(rng, 6)
    R = R_MW @ R_WS
    aS = np.einsum("nji,nj->ni", R, v)
    out = apply_calibration(ImuReading(aS, R_WS, 0.0), CalibSet(R_MW, np.broadcast_to(np.eye(3), (6, 3, 3))))
    np.testing.assert_allclose(out.accel, v, atol=1e-12)


def test_frame_mismatch():
    calib = calibrate_mounting(np.broadcast_to(np.eye(3), (6, 3, 3)))
    with pytest.raises(FrameMismatch):
        apply_calibration(ImuReading(np.zeros((6, 3)), np.zeros((6, 3, 3)), 0.0, accel_frame="M"), calib)


def test_full_pipeline_reproduces_body_accelerations(rng):
    traj = generate_trajectory(TrajectorySpec(duration=2.0))
    spec = ImuNoiseSpec(sigma_white=0, sigma_bias_walk=0, initial_bias_std=0)
    a_meas, _ = corrupt(traj.accel, spec)
    R_MW = random_rotation(rng, 6)
    R_SB = random_rotation(rng, 6)
    aS, R_WS = sensor_frame_readings(a_meas, traj.sensor_rot, R_SB, R_MW)
    calib = CalibSet(R_MW, R_SB)
    for k in range(0, len(traj), 17):
        out = apply_calibration(ImuReading(aS[k], R_WS[k], traj.t[k]), calib)
        np.testing.assert_allclose(out.accel, traj.accel[k], atol=1e-10)
        np.testing.assert_allclose(out.orientation, traj.sensor_rot[k], atol=1e-12)
