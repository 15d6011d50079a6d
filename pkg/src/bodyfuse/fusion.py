"""
Unscented Kalman filter over inter-sensor relative positions, relative
velocities and per-node acceleration biases.

State layout (length 108): the 15 relative positions ``p^{xy}`` (pairs in
:data:`bodyfuse.body.PAIRS` order, xyz each), then the 15 relative velocities
``v^{xy}``, then the 6 biases ``b^i``. The measurement vector (length 120) is
``[|p^{xy}| (15), |v^{xy}| (15), p^{xy} (45), v^{xy} (45)]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import cho_solve, solve_triangular

from .body import N_JOINTS, N_PAIRS, N_SENSORS, PAIRS, BodyShape, Skeleton, get_skeleton, pairwise_differences, tpose
from .geometry import (
    DegenerateInput,
    NotPositiveDefinite,
    cholesky,
    cholesky_with_jitter,
    rot6d_degenerate_mask,
    rot6d_to_rotation,
    rotation_to_rot6d,
    symmetrize,
)
from .imu import ImuNoiseSpec
from .los import DistErrorModel

logger = logging.getLogger(__name__)

N_STATE = 3 * N_PAIRS + 3 * N_PAIRS + 3 * N_SENSORS
N_MEAS = N_PAIRS + N_PAIRS + 3 * N_PAIRS + 3 * N_PAIRS
POS = slice(0, 3 * N_PAIRS)
VEL = slice(3 * N_PAIRS, 6 * N_PAIRS)
BIAS = slice(6 * N_PAIRS, N_STATE)

Z_DIST = slice(0, N_PAIRS)
Z_RATE = slice(N_PAIRS, 2 * N_PAIRS)
Z_POS = slice(2 * N_PAIRS, 5 * N_PAIRS)
Z_VEL = slice(5 * N_PAIRS, N_MEAS)

_IX = np.array([x for x, _ in PAIRS])
_IY = np.array([y for _, y in PAIRS])

# placeholder variance for rate/velocity rows that have no previous frame
FIRST_FRAME_VARIANCE = 1e6
INIT_STD_POS = 0.05
INIT_STD_VEL = 0.1
INIT_STD_BIAS = 0.05
POSE_DIM = 6 * N_JOINTS


class SingularInnovation(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class UtParams:
    """
    Scaled sigma-point parameters.

    ``kappa=None`` resolves to ``3 - n`` for an ``n``-dimensional input.
    """

    alpha: float = 1e-3
    beta: float = 2.0
    kappa: float | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")

    def resolve_kappa(self, n: int) -> float:
        return 3.0 - n if self.kappa is None else float(self.kappa)

    def lam(self, n: int) -> float:
        return self.alpha**2 * (n + self.resolve_kappa(n)) - n

    def weights(self, n: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        lam = self.lam(n)
        if n + lam <= 0:
            raise ValueError(f"n + lambda = {n + lam} must be positive")
        Wm = np.full(2 * n + 1, 0.5 / (n + lam))
        Wc = Wm.copy()
        Wm[0] = lam / (n + lam)
        Wc[0] = Wm[0] + (1.0 - self.alpha**2 + self.beta)
        return Wm, Wc


UKF_PARAMS = UtParams(alpha=0.2, beta=1.0, kappa=-105.0)
POSE_UT_PARAMS = UtParams(alpha=0.09, beta=1.0, kappa=-93.0)
R3_SCALE = 10.0


def sigma_points(mean: ArrayLike, cov: ArrayLike, params: UtParams):
    """
    Van der Merwe scaled sigma points.

    Returns
    -------
    X : numpy.ndarray, shape (2n+1, n)
        ``X[0] = mean``, ``X[1..n] = mean + columns``, ``X[n+1..2n] = mean - columns``
        of the Cholesky factor of ``(n + lambda) * cov``.
    Wm, Wc : numpy.ndarray, shape (2n+1,)
        Mean and covariance weights.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    n = mean.shape[0]
    Wm, Wc = params.weights(n)
    L = cholesky((n + params.lam(n)) * cov)
    X = np.empty((2 * n + 1, n))
    X[0] = mean
    X[1 : n + 1] = mean + L.T
    X[n + 1 :] = mean - L.T
    return X, Wm, Wc


def unscented_moments(Y: NDArray, Wm: NDArray, Wc: NDArray) -> tuple[NDArray, NDArray]:
    # offsets from the central point avoid cancelling the large weights of small alpha
    mean = Y[0] + Wm @ (Y - Y[0])
    dY = Y - mean
    cov = (dY * Wc[:, None]).T @ dY
    return mean, symmetrize(cov)


# ------------------------------------------------------------------ state model


def pack_state(p: ArrayLike, v: ArrayLike, b: ArrayLike) -> NDArray[np.float64]:
    return np.concatenate((np.ravel(p), np.ravel(v), np.ravel(b))).astype(float)


def unpack_state(x: ArrayLike) -> tuple[NDArray, NDArray, NDArray]:
    """Views of ``x[..., 108]`` as ``p (..., 15, 3)``, ``v (..., 15, 3)`` and ``b (..., 6, 3)``."""
    x = np.asarray(x, dtype=float)
    batch = x.shape[:-1]
    return (
        x[..., POS].reshape(batch + (N_PAIRS, 3)),
        x[..., VEL].reshape(batch + (N_PAIRS, 3)),
        x[..., BIAS].reshape(batch + (N_SENSORS, 3)),
    )


def init_state(shape: BodyShape | Skeleton | None = None) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """T-pose relative positions, zero velocities and biases, and the diagonal prior covariance."""
    sk = get_skeleton(shape)
    p = pairwise_differences(sk.fk(tpose()).sensors)
    x = pack_state(p, np.zeros((N_PAIRS, 3)), np.zeros((N_SENSORS, 3)))
    std = np.concatenate(
        (
            np.full(3 * N_PAIRS, INIT_STD_POS),
            np.full(3 * N_PAIRS, INIT_STD_VEL),
            np.full(3 * N_SENSORS, INIT_STD_BIAS),
        )
    )
    return x, np.diag(std**2)


def transition(X: ArrayLike, u: ArrayLike, dt: float) -> NDArray[np.float64]:
    """
    Strapdown relative-motion model applied to states ``X (..., 108)``.

    ``u`` holds the six body-frame accelerations, shape (6, 3). Biases keep
    their value; their random walk enters through the process noise.
    """
    p, v, b = unpack_state(X)
    u = np.asarray(u, dtype=float)
    da = u[_IY] - u[_IX]
    db = b[..., _IY, :] - b[..., _IX, :]
    v_new = v + (da - db) * dt
    p_new = p + v * dt + 0.5 * da * dt**2 - 0.5 * db * dt**2
    out = np.empty(np.shape(X))
    batch = out.shape[:-1]
    out[..., POS] = p_new.reshape(batch + (3 * N_PAIRS,))
    out[..., VEL] = v_new.reshape(batch + (3 * N_PAIRS,))
    out[..., BIAS] = b.reshape(batch + (3 * N_SENSORS,))
    return out


def build_process_noise(spec: ImuNoiseSpec, dt: float) -> NDArray[np.float64]:
    """
    Process noise for the relative-motion model.

    Each pair axis gets the white-noise-acceleration block of a difference of
    two independent accelerometers (variance ``2 * sigma_white**2``); biases
    get ``sigma_bias_walk**2`` per step. Pairs are treated as uncorrelated.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    q = 2.0 * spec.sigma_white**2
    Q = np.zeros((N_STATE, N_STATE))
    idx_p = np.arange(3 * N_PAIRS)
    idx_v = idx_p + 3 * N_PAIRS
    Q[idx_p, idx_p] = q * dt**4 / 4.0
    Q[idx_p, idx_v] = q * dt**3 / 2.0
    Q[idx_v, idx_p] = q * dt**3 / 2.0
    Q[idx_v, idx_v] = q * dt**2
    idx_b = np.arange(BIAS.start, BIAS.stop)
    Q[idx_b, idx_b] = spec.sigma_bias_walk**2
    return Q


def propagate(
    x: ArrayLike,
    P: ArrayLike,
    u: ArrayLike,
    Q: ArrayLike,
    dt: float,
    params: UtParams = UKF_PARAMS,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Sigma-point prediction step: ``x_bar, P_bar``."""
    X, Wm, Wc = sigma_points(x, P, params)
    Y = transition(X, u, dt)
    x_bar, P_bar = unscented_moments(Y, Wm, Wc)
    return x_bar, symmetrize(P_bar + np.asarray(Q))


def measurement_model(x: ArrayLike) -> NDArray[np.float64]:
    """``h(x) = [|p|, |v|, p, v]`` for states ``x (..., 108)``."""
    p, v, _ = unpack_state(x)
    x = np.asarray(x, dtype=float)
    return np.concatenate(
        (np.linalg.norm(p, axis=-1), np.linalg.norm(v, axis=-1), x[..., POS], x[..., VEL]),
        axis=-1,
    )


# ------------------------------------------------------------------ pose input


@dataclass(frozen=True)
class PoseSample:
    """Pose mean in 6D form and per-component standard deviation, 96 values each."""

    theta6d: NDArray[np.float64]
    sigma: NDArray[np.float64]
    outlier: bool = False

    def __post_init__(self) -> None:
        if np.shape(self.theta6d) != (POSE_DIM,) or np.shape(self.sigma) != (POSE_DIM,):
            raise ValueError(f"pose sample needs {POSE_DIM} means and {POSE_DIM} sigmas")
        if np.any(np.asarray(self.sigma) <= 0):
            raise ValueError("pose sigmas must be positive")

    def rotations(self) -> NDArray[np.float64]:
        return rot6d_to_rotation(np.asarray(self.theta6d).reshape(N_JOINTS, 6))


class PoseOracle:
    """
    Stand-in pose estimator: true joint rotations in 6D form plus Gaussian noise.

    Parameters
    ----------
    noise_std : float or array of shape (16,)
        Noise standard deviation per 6D component, per joint.
    sigma_factor : float
        Reported sigma is ``sigma_factor * noise_std``; 1 is calibrated.
    outlier_rate : float
        Probability that a frame carries ``outlier_scale`` times the noise.
    honest : bool
        Whether outlier frames also report the inflated sigma.
    seed : int
    """

    def __init__(
        self,
        noise_std: float | ArrayLike = 0.05,
        sigma_factor: float = 1.0,
        outlier_rate: float = 0.0,
        outlier_scale: float = 10.0,
        honest: bool = True,
        seed: int = 0,
        min_sigma: float = 1e-6,
    ):
        std = np.broadcast_to(np.asarray(noise_std, dtype=float), (N_JOINTS,))
        self.noise_std = np.repeat(std, 6)
        self.sigma_factor = float(sigma_factor)
        self.outlier_rate = float(outlier_rate)
        self.outlier_scale = float(outlier_scale)
        self.honest = bool(honest)
        self.min_sigma = float(min_sigma)
        self.rng = np.random.default_rng(seed)

    def __call__(self, true_pose: ArrayLike) -> PoseSample:
        encoded = rotation_to_rot6d(np.asarray(true_pose, dtype=float)).reshape(POSE_DIM)
        outlier = bool(self.outlier_rate > 0 and self.rng.random() < self.outlier_rate)
        factor = self.outlier_scale if outlier else 1.0
        noisy = encoded + factor * self.noise_std * self.rng.standard_normal(POSE_DIM)
        reported = self.sigma_factor * self.noise_std * (factor if (outlier and self.honest) else 1.0)
        return PoseSample(noisy, np.maximum(reported, self.min_sigma), outlier)


def pose_oracle(
    true_pose: ArrayLike,
    noise_std: float | ArrayLike = 0.05,
    outlier_rate: float = 0.0,
    honest: bool = True,
    seed: int = 0,
    sigma_factor: float = 1.0,
) -> PoseSample:
    """One-shot :class:`PoseOracle` draw."""
    return PoseOracle(noise_std, sigma_factor, outlier_rate, honest=honest, seed=seed)(true_pose)


def _decode_sigma_points(X: NDArray, mean: NDArray, retries: int = 3) -> NDArray:
    enc = X.reshape(-1, N_JOINTS, 6)
    bad = rot6d_degenerate_mask(enc).any(axis=1)
    tries = 0
    while bad.any():
        if tries == retries:
            raise DegenerateInput("sigma point decodes to a degenerate rotation")
        # pull offending points halfway back toward the mean
        X = X.copy()
        X[bad] = mean + 0.5 * (X[bad] - mean)
        enc = X.reshape(-1, N_JOINTS, 6)
        bad = rot6d_degenerate_mask(enc).any(axis=1)
        tries += 1
    return rot6d_to_rotation(enc)


def pose_to_relative_positions(
    sample: PoseSample,
    shape: BodyShape | Skeleton | None = None,
    params: UtParams = POSE_UT_PARAMS,
    r3_scale: float = R3_SCALE,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Unscented transform of the pose distribution into relative sensor positions.

    Returns
    -------
    p_hat : numpy.ndarray, shape (45,)
    R3 : numpy.ndarray, shape (45, 45)
        Transformed covariance times `r3_scale`.
    """
    sk = get_skeleton(shape)
    mean = np.asarray(sample.theta6d, dtype=float)
    X, Wm, Wc = sigma_points(mean, np.diag(np.asarray(sample.sigma) ** 2), params)
    rots = _decode_sigma_points(X, mean)
    Y = pairwise_differences(sk.fk(rots).sensors).reshape(len(X), 3 * N_PAIRS)
    p_hat, cov = unscented_moments(Y, Wm, Wc)
    return p_hat, r3_scale * cov


def monte_carlo_relative_positions(
    sample: PoseSample,
    shape: BodyShape | Skeleton | None = None,
    n: int = 100_000,
    seed: int = 0,
    chunk: int = 20_000,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Sample mean and covariance of relative positions under the pose distribution."""
    sk = get_skeleton(shape)
    rng = np.random.default_rng(seed)
    mean = np.asarray(sample.theta6d)
    sigma = np.asarray(sample.sigma)
    total = np.zeros(3 * N_PAIRS)
    outer = np.zeros((3 * N_PAIRS, 3 * N_PAIRS))
    # shift by the noiseless value to keep the running sums well conditioned
    ref = pairwise_differences(sk.fk(rot6d_to_rotation(mean.reshape(N_JOINTS, 6))).sensors).ravel()
    done = 0
    while done < n:
        m = min(chunk, n - done)
        draws = mean + sigma * rng.standard_normal((m, POSE_DIM))
        Y = pairwise_differences(sk.fk(rot6d_to_rotation(draws.reshape(m, N_JOINTS, 6))).sensors)
        Y = Y.reshape(m, 3 * N_PAIRS) - ref
        total += Y.sum(axis=0)
        outer += Y.T @ Y
        done += m
    mu = total / n
    cov = (outer - n * np.outer(mu, mu)) / (n - 1)
    return mu + ref, cov


# ------------------------------------------------------------------ measurements


@dataclass(frozen=True)
class MeasurementBundle:
    """
    Observations for one update. ``active`` marks the rows of ``z`` that are used.
    """

    d: NDArray[np.float64]
    rate: NDArray[np.float64]
    p_hat: NDArray[np.float64]
    v_hat: NDArray[np.float64]
    R1: NDArray[np.float64]
    R2: NDArray[np.float64]
    R3: NDArray[np.float64]
    R4: NDArray[np.float64]
    active: NDArray[np.bool_]

    @property
    def z(self) -> NDArray[np.float64]:
        return np.concatenate((self.d, self.rate, self.p_hat, self.v_hat))

    @property
    def R(self) -> NDArray[np.float64]:
        R = np.zeros((N_MEAS, N_MEAS))
        R[Z_DIST, Z_DIST] = self.R1
        R[Z_RATE, Z_RATE] = self.R2
        R[Z_POS, Z_POS] = self.R3
        R[Z_VEL, Z_VEL] = self.R4
        return R


def _psd_repair(M: NDArray) -> NDArray:
    M = symmetrize(M)
    try:
        np.linalg.cholesky(M)
        return M
    except np.linalg.LinAlgError:
        _, amount = cholesky_with_jitter(M)
        return M + amount * np.eye(M.shape[0])


def assemble_measurement(
    d_k: ArrayLike,
    sigma_d: ArrayLike,
    substitute: ArrayLike,
    p_hat: ArrayLike | None,
    R3: ArrayLike | None,
    dt: float,
    prev: MeasurementBundle | None = None,
    use_uwb: bool = True,
    use_pose: bool = True,
) -> MeasurementBundle:
    """
    Build the measurement vector and its block covariance for one frame.

    Substituted pairs take ``|p_hat^{xy}|`` as their range with the given
    sigma; without a pose input they are left out. Rates and pose velocities
    are backward differences against `prev`; on the first frame they are zero
    with a huge variance.
    """
    d = np.asarray(d_k, dtype=float).copy()
    sigma = np.asarray(sigma_d, dtype=float)
    sub = np.asarray(substitute, dtype=bool)
    have_pose = p_hat is not None and R3 is not None

    d_valid = np.full(N_PAIRS, use_uwb)
    if have_pose:
        p_hat = np.asarray(p_hat, dtype=float)
        R3 = _psd_repair(np.asarray(R3, dtype=float))
        d[sub] = np.linalg.norm(p_hat.reshape(N_PAIRS, 3), axis=1)[sub]
    else:
        d_valid &= ~sub
        p_hat = np.zeros(3 * N_PAIRS)
        R3 = FIRST_FRAME_VARIANCE * np.eye(3 * N_PAIRS)
    R1 = np.diag(sigma**2)

    first = prev is None
    if first:
        rate = np.zeros(N_PAIRS)
        R2 = FIRST_FRAME_VARIANCE * np.eye(N_PAIRS)
        rate_valid = d_valid.copy()
        v_hat = np.zeros(3 * N_PAIRS)
        R4 = FIRST_FRAME_VARIANCE * np.eye(3 * N_PAIRS)
    else:
        rate = (d - prev.d) / dt
        R2 = (R1 + prev.R1) / dt**2
        rate_valid = d_valid & prev.active[Z_DIST]
        v_hat = (p_hat - prev.p_hat) / dt
        R4 = (R3 + prev.R3) / dt**2

    pose_valid = use_pose and have_pose
    vel_valid = pose_valid and (first or bool(prev.active[Z_POS].all()))
    active = np.concatenate(
        (d_valid, rate_valid, np.full(3 * N_PAIRS, pose_valid), np.full(3 * N_PAIRS, vel_valid))
    )
    return MeasurementBundle(d, rate, p_hat, v_hat, R1, R2, R3, R4, active)


@dataclass(frozen=True)
class UpdateResult:
    x: NDArray[np.float64]
    P: NDArray[np.float64]
    innovation: NDArray[np.float64]
    S: NDArray[np.float64]
    nis: float
    dim: int


def update(
    x_bar: ArrayLike,
    P_bar: ArrayLike,
    m: MeasurementBundle,
    params: UtParams = UKF_PARAMS,
) -> UpdateResult:
    """Sigma-point measurement update restricted to the active rows of `m`."""
    x_bar = np.asarray(x_bar, dtype=float)
    P_bar = np.asarray(P_bar, dtype=float)
    idx = np.flatnonzero(m.active)
    if idx.size == 0:
        return UpdateResult(x_bar, P_bar, np.zeros(0), np.zeros((0, 0)), 0.0, 0)

    X, Wm, Wc = sigma_points(x_bar, P_bar, params)
    Z = measurement_model(X)[:, idx]
    z_hat = Wm @ Z
    dZ = Z - z_hat
    dX = X - x_bar
    Pzz = (dZ * Wc[:, None]).T @ dZ
    Pxz = (dX * Wc[:, None]).T @ dZ
    S = symmetrize(Pzz + m.R[np.ix_(idx, idx)])
    try:
        L = cholesky(S)
    except NotPositiveDefinite as exc:
        raise SingularInnovation(str(exc)) from exc

    y = m.z[idx] - z_hat
    # K = Pxz S^-1 through the Cholesky factor
    K = cho_solve((L, True), Pxz.T, check_finite=False).T
    w = solve_triangular(L, y, lower=True, check_finite=False)
    x = x_bar + K @ y
    # K S K^T = K Pxz^T
    P = symmetrize(P_bar - K @ Pxz.T)
    return UpdateResult(x, P, y, S, float(w @ w), int(idx.size))


# ------------------------------------------------------------------ session


@dataclass(frozen=True)
class FusionConfig:
    dt: float = 1.0 / 60.0
    imu_noise: ImuNoiseSpec = field(default_factory=ImuNoiseSpec)
    ukf_params: UtParams = UKF_PARAMS
    pose_params: UtParams = POSE_UT_PARAMS
    error_model: DistErrorModel = field(default_factory=DistErrorModel)
    r3_scale: float = R3_SCALE
    use_uwb: bool = True
    use_pose: bool = True

    @classmethod
    def for_mode(cls, mode: str, **kwargs) -> "FusionConfig":
        flags = {
            "imu+uwb": (True, False),
            "imu+pose": (False, True),
            "imu+uwb+pose": (True, True),
        }
        if mode not in flags:
            raise ValueError(f"unknown fusion mode {mode!r}")
        use_uwb, use_pose = flags[mode]
        return cls(use_uwb=use_uwb, use_pose=use_pose, **kwargs)


@dataclass(frozen=True)
class StepResult:
    x: NDArray[np.float64]
    P: NDArray[np.float64]
    distances: NDArray[np.float64]
    accelerations: NDArray[np.float64]
    nis: float
    nis_dim: int


class FusionSession:
    """
    One tracked subject. Each :meth:`step` predicts from the previous frame's
    accelerations and then updates with the current frame's measurements.
    """

    def __init__(self, shape: BodyShape | Skeleton | None = None, config: FusionConfig | None = None):
        self.config = FusionConfig() if config is None else config
        self.skeleton = get_skeleton(shape)
        self.x, self.P = init_state(self.skeleton)
        self.Q = build_process_noise(self.config.imu_noise, self.config.dt)
        self._prev_bundle: MeasurementBundle | None = None
        self._prev_accel: NDArray | None = None
        self._prev_t: float | None = None
        self.frame = 0

    def _dt(self, t: float | None) -> float:
        if t is None:
            return self.config.dt
        if self._prev_t is None:
            return self.config.dt
        dt = t - self._prev_t
        if dt <= 0:
            raise ValueError("timestamps must increase")
        return dt

    def step(
        self,
        accel: ArrayLike,
        ranges: ArrayLike,
        sigma_d: ArrayLike,
        substitute: ArrayLike,
        pose: PoseSample | None = None,
        pose_measurement: tuple[NDArray, NDArray] | None = None,
        t: float | None = None,
    ) -> StepResult:
        """
        Advance one frame.

        Parameters
        ----------
        accel : array-like, shape (6, 3)
            Calibrated body-frame accelerations of this frame.
        ranges, sigma_d, substitute : array-like, shape (15,)
            UWB ranges, their standard deviations and the NLOS substitution flags.
        pose : PoseSample, optional
            Pose input; transformed here unless `pose_measurement` is given.
        pose_measurement : tuple, optional
            Precomputed ``(p_hat, R3)`` for this frame.
        t : float, optional
            Timestamp; when given, the step size is the timestamp difference.
        """
        cfg = self.config
        accel = np.asarray(accel, dtype=float)
        dt = self._dt(t)
        if self._prev_accel is not None:
            Q = self.Q if dt == cfg.dt else build_process_noise(cfg.imu_noise, dt)
            self.x, self.P = propagate(self.x, self.P, self._prev_accel, Q, dt, cfg.ukf_params)

        p_hat = R3 = None
        if pose_measurement is not None:
            p_hat, R3 = pose_measurement
        elif pose is not None and (cfg.use_pose or np.any(substitute)):
            p_hat, R3 = pose_to_relative_positions(pose, self.skeleton, cfg.pose_params, cfg.r3_scale)

        bundle = assemble_measurement(
            ranges, sigma_d, substitute, p_hat, R3, dt, self._prev_bundle, cfg.use_uwb, cfg.use_pose
        )
        res = update(self.x, self.P, bundle, cfg.ukf_params)
        self.x, self.P = res.x, res.P
        self._prev_bundle = bundle
        self._prev_accel = accel
        if t is not None:
            self._prev_t = t
        self.frame += 1

        p, _, b = unpack_state(self.x)
        return StepResult(
            x=self.x.copy(),
            P=self.P.copy(),
            distances=np.linalg.norm(p, axis=-1),
            accelerations=accel - b,
            nis=res.nis,
            nis_dim=res.dim,
        )

    def with_config(self, **kwargs) -> "FusionSession":
        return FusionSession(self.skeleton, replace(self.config, **kwargs))
