from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bodyfuse.body import PAIRS, BodyShape, get_skeleton, relative_sensor_positions, tpose
from bodyfuse.experiment import ExperimentConfig, run_fusion, simulate
from bodyfuse.fusion import (
    BIAS,
    FIRST_FRAME_VARIANCE,
    INIT_STD_BIAS,
    INIT_STD_POS,
    INIT_STD_VEL,
    N_MEAS,
    N_STATE,
    POS,
    POSE_DIM,
    UKF_PARAMS,
    VEL,
    Z_DIST,
    Z_POS,
    Z_RATE,
    Z_VEL,
    FusionConfig,
    FusionSession,
    MeasurementBundle,
    PoseOracle,
    PoseSample,
    SingularInnovation,
    UtParams,
    assemble_measurement,
    build_process_noise,
    init_state,
    measurement_model,
    monte_carlo_relative_positions,
    pose_oracle,
    pose_to_relative_positions,
    propagate,
    sigma_points,
    transition,
    unscented_moments,
    unpack_state,
    update,
)
from bodyfuse.geometry import DegenerateInput, cholesky_with_jitter, random_rotation, rotation_to_rot6d
from bodyfuse.imu import ImuNoiseSpec
from bodyfuse.los import DistErrorModel
from bodyfuse.trajectory import TrajectorySpec

DT = 1.0 / 60.0


def _random_cov(rng, n, scale=1.0):
    A = rng.standard_normal((n, n))
    return scale * (A @ A.T / n + 0.1 * np.eye(n))


def _pose_sample(pose, std):
    return PoseSample(rotation_to_rot6d(pose).ravel(), np.full(POSE_DIM, std))


# ------------------------------------------------------------------ sigma points


def test_sigma_points_one_dimensional_example():
    X, Wm, Wc = sigma_points([0.0], [[1.0]], UtParams(alpha=1.0, beta=0.0, kappa=2.0))
    np.testing.assert_allclose(X[:, 0], [0.0, np.sqrt(3.0), -np.sqrt(3.0)], atol=1e-15)
    np.testing.assert_allclose(Wm, [2 / 3, 1 / 6, 1 / 6], atol=1e-15)
    np.testing.assert_allclose(Wc, Wm, atol=1e-15)


@pytest.mark.parametrize(
    "params,n",
    [(UtParams(), 4), (UtParams(0.5, 2.0, 0.0), 7), (UKF_PARAMS, N_STATE), (UtParams(0.09, 1.0, -93.0), POSE_DIM)],
)
def test_sigma_points_reproduce_moments(params, n, rng):
    mean = rng.standard_normal(n)
    cov = _random_cov(rng, n)
    X, Wm, Wc = sigma_points(mean, cov, params)
    assert X.shape == (2 * n + 1, n)
    assert abs(math.fsum(Wm) - 1.0) < 1e-12
    np.testing.assert_allclose(unscented_moments(X, Wm, Wc)[0], mean, atol=1e-12)
    Wc = Wc.copy()
    Wc[0] = Wm[0]
    dX = X - mean
    np.testing.assert_allclose((dX * Wc[:, None]).T @ dX, cov, atol=1e-9)


def test_default_kappa_follows_dimension():
    assert UtParams().resolve_kappa(108) == -105
    assert UKF_PARAMS.lam(N_STATE) + N_STATE == pytest.approx(0.2**2 * 3)


def test_ut_params_validation():
    with pytest.raises(ValueError):
        UtParams(alpha=0.0)
    with pytest.raises(ValueError):
        UtParams(alpha=1.0, kappa=-10.0).weights(5)


# ------------------------------------------------------------------ state model


def test_init_state():
    shape = BodyShape(1.05, 0.98, 1.02, 1.0)
    x, P = init_state(shape)
    p, v, b = unpack_state(x)
    np.testing.assert_array_equal(p, relative_sensor_positions(shape, tpose()))
    assert not v.any() and not b.any()
    np.testing.assert_array_equal(P, np.diag(np.diag(P)))
    np.testing.assert_allclose(np.diag(P)[POS], INIT_STD_POS**2)
    np.testing.assert_allclose(np.diag(P)[VEL], INIT_STD_VEL**2)
    np.testing.assert_allclose(np.diag(P)[BIAS], INIT_STD_BIAS**2)


def _state(p=None, v=None, b=None):
    x = np.zeros(N_STATE)
    if p is not None:
        x[POS] = np.ravel(p)
    if v is not None:
        x[VEL] = np.ravel(v)
    if b is not None:
        x[BIAS] = np.ravel(b)
    return x


def test_transition_pure_drift():
    v = np.zeros((15, 3))
    v[0] = [1.0, 0.0, 0.0]
    x = transition(_state(v=v), np.zeros((6, 3)), DT)
    p, v2, _ = unpack_state(x)
    np.testing.assert_allclose(p[0], [DT, 0, 0], atol=1e-15)
    assert not p[1:].any()
    np.testing.assert_array_equal(v2, v)


def test_transition_acceleration_difference():
    u = np.zeros((6, 3))
    u[1] = [0.0, 0.0, 6.0]
    p, v, _ = unpack_state(transition(_state(), u, 0.5))
    np.testing.assert_allclose(v[0], [0, 0, 3.0], atol=1e-15)
    np.testing.assert_allclose(p[0], [0, 0, 0.75], atol=1e-15)
    # pairs (1, y) see the opposite sign
    np.testing.assert_allclose(v[PAIRS.index((1, 2))], [0, 0, -3.0], atol=1e-15)


def test_bias_cancels_measured_acceleration(rng):
    u = rng.standard_normal((6, 3))
    x = _state(p=rng.standard_normal((15, 3)), b=u)
    np.testing.assert_allclose(transition(x, u, 0.1), x, atol=1e-15)


def test_propagate_matches_linear_prediction(rng):
    x = rng.standard_normal(N_STATE)
    P = _random_cov(rng, N_STATE, 1e-3)
    u = rng.standard_normal((6, 3))
    Q = build_process_noise(ImuNoiseSpec(), DT)
    x_bar, P_bar = propagate(x, P, u, Q, DT)
    zero = transition(np.zeros(N_STATE), np.zeros((6, 3)), DT)
    F = (transition(np.eye(N_STATE), np.zeros((6, 3)), DT) - zero).T
    np.testing.assert_allclose(x_bar, transition(x, u, DT), atol=1e-12)
    np.testing.assert_allclose(P_bar, F @ P @ F.T + Q, atol=1e-12)


# ------------------------------------------------------------------ process noise


def test_process_noise_zero():
    Q = build_process_noise(ImuNoiseSpec(sigma_white=0.0, sigma_bias_walk=0.0), DT)
    assert not Q.any()


def test_process_noise_blocks():
    Q = build_process_noise(ImuNoiseSpec(sigma_white=1.0, sigma_bias_walk=0.1), 1.0)
    for i in (0, 7, 44):
        j = i + 45
        np.testing.assert_allclose([[Q[i, i], Q[i, j]], [Q[j, i], Q[j, j]]], [[0.5, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(Q[BIAS, BIAS], 0.01 * np.eye(18))
    # no cross-pair terms
    assert Q[0, 1] == 0 and Q[0, 46] == 0


def test_process_noise_is_psd():
    Q = build_process_noise(ImuNoiseSpec(), DT)
    np.testing.assert_array_equal(Q, Q.T)
    assert np.linalg.eigvalsh(Q).min() >= -1e-12 * np.trace(Q)
    # each pair block is rank one, so the factorization needs only the first jitter level
    _, jitter = cholesky_with_jitter(Q)
    assert jitter <= 1e-10 * np.trace(Q) / N_STATE * (1 + 1e-12)


def test_process_noise_rejects_bad_dt():
    with pytest.raises(ValueError):
        build_process_noise(ImuNoiseSpec(), 0.0)


# ------------------------------------------------------------------ pose oracle


def test_pose_oracle_noiseless(rng):
    pose = random_rotation(rng, 16)
    s = pose_oracle(pose, noise_std=0.0, seed=3)
    np.testing.assert_array_equal(s.theta6d, rotation_to_rot6d(pose).ravel())
    np.testing.assert_allclose(s.rotations(), pose, atol=1e-12)


def test_pose_oracle_noise_level():
    oracle = PoseOracle(noise_std=0.05, seed=1)
    enc = rotation_to_rot6d(tpose()).ravel()
    resid = np.stack([oracle(tpose()).theta6d - enc for _ in range(1100)])
    assert resid.size > 100_000
    assert resid.std() == pytest.approx(0.05, rel=0.02)
    np.testing.assert_allclose(oracle(tpose()).sigma, 0.05)


@pytest.mark.parametrize("honest", [True, False])
def test_pose_oracle_outliers(honest):
    oracle = PoseOracle(noise_std=0.02, outlier_rate=0.1, honest=honest, seed=2)
    samples = [oracle(tpose()) for _ in range(4000)]
    flagged = np.array([s.outlier for s in samples])
    assert flagged.mean() == pytest.approx(0.1, abs=0.02)
    for s in samples[:200]:
        expected = 0.2 if (s.outlier and honest) else 0.02
        np.testing.assert_allclose(s.sigma, expected)


def test_pose_oracle_sigma_factor():
    s = pose_oracle(tpose(), noise_std=0.05, sigma_factor=0.5)
    np.testing.assert_allclose(s.sigma, 0.025)


def test_pose_oracle_deterministic(rng):
    pose = random_rotation(rng, 16)
    a = pose_oracle(pose, 0.05, seed=9)
    b = pose_oracle(pose, 0.05, seed=9)
    np.testing.assert_array_equal(a.theta6d, b.theta6d)


def test_pose_sample_validation():
    with pytest.raises(ValueError):
        PoseSample(np.zeros(96), np.zeros(96))
    with pytest.raises(ValueError):
        PoseSample(np.zeros(90), np.ones(90))


# ------------------------------------------------------------------ pose transform


def test_pose_transform_small_sigma_limit(rng):
    pose = random_rotation(rng, 16)
    p_hat, R3 = pose_to_relative_positions(_pose_sample(pose, 1e-6), BodyShape())
    np.testing.assert_allclose(p_hat, relative_sensor_positions(BodyShape(), pose).ravel(), atol=1e-4)
    assert np.abs(R3 / 10).max() <= 1e-6


def test_pose_transform_matches_monte_carlo():
    sample = _pose_sample(tpose(), 0.05)
    p_hat, R3 = pose_to_relative_positions(sample, BodyShape(), r3_scale=1.0)
    mu, C = monte_carlo_relative_positions(sample, BodyShape(), n=100_000, seed=4)
    assert np.linalg.norm(p_hat - mu) <= 0.05 * np.linalg.norm(mu)
    assert np.linalg.norm(R3 - C) <= 0.15 * np.linalg.norm(C)


def test_pose_transform_scales_covariance():
    sample = _pose_sample(tpose(), 0.05)
    _, R1 = pose_to_relative_positions(sample, r3_scale=1.0)
    _, R10 = pose_to_relative_positions(sample)
    np.testing.assert_allclose(R10, 10 * R1, rtol=1e-12)


def test_root_rotation_uncertainty_is_planar():
    # noise on the y component of the root's first column turns it about the vertical only
    sigma = np.full(POSE_DIM, 1e-9)
    sigma[1] = 0.05
    sample = PoseSample(rotation_to_rot6d(tpose()).ravel(), sigma)
    _, R3 = pose_to_relative_positions(sample, r3_scale=1.0)
    i = PAIRS.index((4, 5))
    ev = np.linalg.eigvalsh(R3[3 * i : 3 * i + 3, 3 * i : 3 * i + 3])
    assert ev[0] < 1e-3 * ev[-1]


def test_pose_transform_degenerate_mean():
    theta = rotation_to_rot6d(tpose()).ravel()
    theta[:6] = 0.0
    with pytest.raises(DegenerateInput):
        pose_to_relative_positions(PoseSample(theta, np.full(POSE_DIM, 1e-12)))


# ------------------------------------------------------------------ measurements


def _static_inputs():
    d = np.linalg.norm(relative_sensor_positions(BodyShape(), tpose()), axis=1)
    p_hat = relative_sensor_positions(BodyShape(), tpose()).ravel()
    return d, p_hat, 1e-4 * np.eye(45)


def test_static_scene_has_zero_rates():
    d, p_hat, R3 = _static_inputs()
    sig = np.full(15, 0.03)
    no_sub = np.zeros(15, bool)
    m0 = assemble_measurement(d, sig, no_sub, p_hat, R3, DT)
    m1 = assemble_measurement(d, sig, no_sub, p_hat, R3, DT, prev=m0)
    assert not m1.rate.any() and not m1.v_hat.any()
    assert m1.active.all()


def test_first_frame_rates_are_uninformative():
    d, p_hat, R3 = _static_inputs()
    m = assemble_measurement(d + 1, np.full(15, 0.03), np.zeros(15, bool), p_hat, R3, DT)
    assert not m.rate.any() and not m.v_hat.any()
    np.testing.assert_array_equal(m.R2, FIRST_FRAME_VARIANCE * np.eye(15))
    np.testing.assert_array_equal(m.R4, FIRST_FRAME_VARIANCE * np.eye(45))


def test_range_rate_and_covariances(rng):
    d, p_hat, R3 = _static_inputs()
    s0, s1 = rng.uniform(0.03, 0.25, (2, 15))
    no_sub = np.zeros(15, bool)
    R3b = _random_cov(rng, 45, 1e-4)
    m0 = assemble_measurement(d, s0, no_sub, p_hat, R3, DT)
    m1 = assemble_measurement(d + 0.02, s1, no_sub, p_hat + 0.01, R3b, DT, prev=m0)
    np.testing.assert_allclose(m1.rate, 1.2, rtol=1e-12)
    np.testing.assert_allclose(m1.v_hat, 0.6, rtol=1e-9)
    np.testing.assert_allclose(m1.R1, np.diag(s1**2))
    np.testing.assert_allclose(m1.R2, (np.diag(s0**2) + np.diag(s1**2)) / DT**2, rtol=1e-12)
    np.testing.assert_allclose(m1.R4, (R3 + R3b) / DT**2, rtol=1e-12)


def test_substituted_ranges():
    d, p_hat, R3 = _static_inputs()
    sub = np.zeros(15, bool)
    sub[14] = True
    m = assemble_measurement(np.full(15, 9.0), np.full(15, 0.1), sub, p_hat, R3, DT)
    assert m.d[14] == pytest.approx(d[14], abs=1e-12)
    assert m.d[0] == 9.0
    # without a pose input the occluded range is dropped
    m = assemble_measurement(np.full(15, 9.0), np.full(15, 0.1), sub, None, None, DT)
    assert not m.active[Z_DIST][14] and m.active[Z_DIST][:14].all()
    assert not m.active[Z_POS].any()


def test_mode_flags_mask_blocks():
    d, p_hat, R3 = _static_inputs()
    m = assemble_measurement(d, np.full(15, 0.03), np.zeros(15, bool), p_hat, R3, DT, use_uwb=False)
    assert not m.active[Z_DIST].any() and not m.active[Z_RATE].any()
    assert m.active[Z_POS].all() and m.active[Z_VEL].all()
    m = assemble_measurement(d, np.full(15, 0.03), np.zeros(15, bool), p_hat, R3, DT, use_pose=False)
    assert m.active[Z_DIST].all() and not m.active[Z_POS].any()


def test_r3_repair_makes_it_positive_definite():
    d, p_hat, _ = _static_inputs()
    v = np.ones(45)
    m = assemble_measurement(d, np.full(15, 0.03), np.zeros(15, bool), p_hat, np.outer(v, v), DT)
    np.linalg.cholesky(m.R3)


def test_measurement_model_examples():
    p = np.zeros((15, 3))
    p[0] = [3.0, 4.0, 0.0]
    h = measurement_model(_state(p=p))
    assert h.shape == (N_MEAS,)
    assert h[0] == 5.0
    assert not h[Z_RATE].any() and not h[Z_VEL].any()


def test_measurement_model_of_initial_state():
    x, _ = init_state()
    rel = relative_sensor_positions(BodyShape(), tpose())
    expected = np.concatenate((np.linalg.norm(rel, axis=1), np.zeros(15), rel.ravel(), np.zeros(45)))
    np.testing.assert_allclose(measurement_model(x), expected, atol=1e-15)


# ------------------------------------------------------------------ update


def _bundle(z, R, active):
    return MeasurementBundle(
        z[Z_DIST], z[Z_RATE], z[Z_POS], z[Z_VEL],
        R[Z_DIST, Z_DIST], R[Z_RATE, Z_RATE], R[Z_POS, Z_POS], R[Z_VEL, Z_VEL], active,
    )


def _linear_rows():
    active = np.zeros(N_MEAS, bool)
    active[Z_POS] = active[Z_VEL] = True
    return active


def test_zero_innovation_is_a_no_op(rng):
    x, P = init_state()
    x = x + 0.01 * rng.standard_normal(N_STATE)
    R = np.diag(rng.uniform(1e-4, 1e-2, N_MEAS))
    res = update(x, P, _bundle(measurement_model(x), R, _linear_rows()))
    np.testing.assert_allclose(res.x, x, atol=1e-10)
    assert res.nis < 1e-16


def test_zero_innovation_on_all_rows(rng):
    # with the norm rows included the zero-innovation point is the predicted measurement
    x, P = init_state()
    x[VEL] = rng.uniform(0.5, 1.0, 45)
    X, Wm, _ = sigma_points(x, P, UKF_PARAMS)
    z_hat = Wm @ measurement_model(X)
    res = update(x, P, _bundle(z_hat, np.eye(N_MEAS) * 1e-3, np.ones(N_MEAS, bool)))
    np.testing.assert_allclose(res.x, x, atol=1e-10)


def test_huge_measurement_noise_is_ignored(rng):
    x, P = init_state()
    z = measurement_model(x) + rng.standard_normal(N_MEAS)
    res = update(x, P, _bundle(z, 1e12 * np.eye(N_MEAS), np.ones(N_MEAS, bool)))
    assert np.linalg.norm(res.x - x) <= 1e-6 * np.linalg.norm(x)


def test_linear_rows_match_kalman_update(rng):
    x = rng.standard_normal(N_STATE)
    P = _random_cov(rng, N_STATE, 1e-2)
    R = _random_cov(rng, N_MEAS, 1e-2)
    R[Z_DIST, :] = R[:, Z_DIST] = 0.0
    R[Z_RATE, :] = R[:, Z_RATE] = 0.0
    R[Z_POS, Z_VEL] = R[Z_VEL, Z_POS] = 0.0
    R[Z_DIST, Z_DIST] = R[Z_RATE, Z_RATE] = np.eye(15)
    z = measurement_model(x) + rng.standard_normal(N_MEAS)
    active = _linear_rows()
    res = update(x, P, _bundle(z, R, active))
    H = np.zeros((90, N_STATE))
    H[:, :90] = np.eye(90)
    Ra = R[np.ix_(active, active)]
    S = H @ P @ H.T + Ra
    K = P @ H.T @ np.linalg.inv(S)
    np.testing.assert_allclose(res.x, x + K @ (z[active] - H @ x), atol=1e-8)
    np.testing.assert_allclose(res.P, P - K @ S @ K.T, atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(-5, 5), st.floats(1e-3, 10), st.floats(-5, 5), st.floats(1e-3, 10),
)
def test_scalar_kalman_update(m, var, z, r):
    # one position coordinate observed directly, everything else decoupled
    x = np.zeros(N_STATE)
    x[0] = m
    P = np.eye(N_STATE)
    P[0, 0] = var
    zz = np.zeros(N_MEAS)
    zz[Z_POS.start] = z
    R = np.eye(N_MEAS)
    R[Z_POS.start, Z_POS.start] = r
    active = np.zeros(N_MEAS, bool)
    active[Z_POS.start] = True
    res = update(x, P, _bundle(zz, R, active))
    gain = var / (var + r)
    assert res.x[0] == pytest.approx(m + gain * (z - m), abs=1e-8)
    assert res.P[0, 0] == pytest.approx((1 - gain) * var, abs=1e-8)
    assert res.nis == pytest.approx((z - m) ** 2 / (var + r), rel=1e-8, abs=1e-12)
    assert res.dim == 1


def test_no_active_rows_returns_prediction():
    x, P = init_state()
    res = update(x, P, _bundle(np.zeros(N_MEAS), np.eye(N_MEAS), np.zeros(N_MEAS, bool)))
    np.testing.assert_array_equal(res.x, x)
    assert res.dim == 0


def test_singular_innovation():
    x, P = init_state()
    with pytest.raises(SingularInnovation):
        update(x, P, _bundle(measurement_model(x), -np.eye(N_MEAS), np.ones(N_MEAS, bool)))


# ------------------------------------------------------------------ session


def test_for_mode_flags():
    assert FusionConfig.for_mode("imu+uwb").use_pose is False
    assert FusionConfig.for_mode("imu+pose").use_uwb is False
    with pytest.raises(ValueError):
        FusionConfig.for_mode("none")


def test_static_noiseless_session():
    shape = BodyShape()
    cfg = FusionConfig(imu_noise=ImuNoiseSpec(sigma_white=0.0, sigma_bias_walk=0.0))
    session = FusionSession(shape, cfg)
    d = np.linalg.norm(relative_sensor_positions(shape, tpose()), axis=1)
    sample = _pose_sample(tpose(), 1e-6)
    no_sub = np.zeros(15, bool)
    for _ in range(600):
        res = session.step(np.zeros((6, 3)), d, np.full(15, 0.03), no_sub, pose=sample)
    np.testing.assert_allclose(res.distances, d, atol=1e-6)
    np.testing.assert_allclose(res.accelerations, 0.0, atol=1e-6)


def test_session_rejects_non_increasing_time():
    session = FusionSession()
    d = np.ones(15)
    session.step(np.zeros((6, 3)), d, np.full(15, 0.03), np.zeros(15, bool), t=0.0)
    with pytest.raises(ValueError):
        session.step(np.zeros((6, 3)), d, np.full(15, 0.03), np.zeros(15, bool), t=0.0)


@pytest.fixture(scope="module")
def short_run():
    cfg = ExperimentConfig(trajectory=TrajectorySpec(duration=10.0), modes=("imu+uwb+pose",))
    sim = simulate(cfg)
    sim.pose_measurements()
    return cfg, sim


def test_reruns_are_bit_identical(short_run):
    cfg, sim = short_run
    a = run_fusion(sim, cfg, "imu+uwb+pose")
    b = run_fusion(simulate(cfg), cfg, "imu+uwb+pose")
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.distances, b.distances)


def test_covariance_stays_psd(short_run):
    cfg, sim = short_run
    session = FusionSession(sim.shape, cfg.fusion_config("imu+uwb+pose"))
    for k in range(len(sim.truth)):
        session.step(sim.accel[k], sim.ranges[k], sim.sigma_d[k], sim.substitute[k],
                     pose_measurement=(sim.p_hat[k], sim.R3[k]))
        P = session.P
        assert np.array_equal(P, P.T)
        assert np.linalg.eigvalsh(P)[0] > -1e-8 * np.trace(P)


def test_uwb_dropout_falls_back_on_pose(short_run):
    cfg, sim = short_run
    session = FusionSession(sim.shape, cfg.fusion_config("imu+uwb+pose"))
    T = len(sim.truth)
    err = np.empty((T, 15))
    for k in range(T):
        sigma = sim.sigma_d[k] if k < T // 2 else np.full(15, 1e6)
        res = session.step(sim.accel[k], sim.ranges[k], sigma, sim.substitute[k],
                           pose_measurement=(sim.p_hat[k], sim.R3[k]))
        err[k] = np.abs(res.distances - sim.truth.distances[k])
    pose_only = np.linalg.norm(sim.p_hat.reshape(T, 15, 3), axis=-1)
    pose_err = np.abs(pose_only - sim.truth.distances)[T // 2 :].mean()
    assert np.isfinite(err).all()
    assert err[T // 2 :].mean() <= pose_err


def test_innovation_consistency():
    # honest noise everywhere: no substitution and an unscaled pose covariance
    cfg = ExperimentConfig(
        trajectory=TrajectorySpec(duration=10.0),
        error_model=DistErrorModel(tau_lower=1e-6),
        r3_scale=1.0,
        modes=("imu+uwb+pose",),
    )
    sim = simulate(cfg)
    run = run_fusion(sim, cfg, "imu+uwb+pose")
    nis = run.nis[1:]
    assert 0.5 <= nis.sum() / run.nis_dim[1:].sum() <= 2.0
    # the 45 pose relative positions span 15 independent directions, as do their rates,
    # so a full frame carries 60 independent rows
    assert 0.5 <= nis.mean() / 60 <= 2.0
