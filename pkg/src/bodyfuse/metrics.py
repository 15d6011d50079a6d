"""Error metrics for distances, accelerations and poses."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .body import BodyShape, Skeleton, get_skeleton
from .geometry import geodesic_angle

# upper arms and upper legs
SIP_JOINTS = (8, 9, 12, 13)
CDF_POINTS = 101


class LengthMismatch(ValueError):
    pass


def _check_lengths(*arrays) -> int:
    n = {len(a) for a in arrays if a is not None}
    if len(n) > 1:
        raise LengthMismatch(f"sequences have different lengths: {sorted(n)}")
    return n.pop()


def error_cdf(errors: ArrayLike, n_points: int = CDF_POINTS) -> tuple[NDArray, NDArray]:
    """Empirical CDF of `errors` sampled on an even grid from 0 to the maximum error."""
    e = np.sort(np.ravel(np.asarray(errors, dtype=float)))
    top = e[-1] if e.size and e[-1] > 0 else 1.0
    x = np.linspace(0.0, top, n_points)
    y = np.searchsorted(e, x, side="right") / max(e.size, 1)
    return x, y


def distance_errors(true_d: ArrayLike, est_d: ArrayLike) -> NDArray[np.float64]:
    true_d = np.asarray(true_d, dtype=float)
    est_d = np.asarray(est_d, dtype=float)
    _check_lengths(true_d, est_d)
    return np.abs(est_d - true_d)


def acceleration_errors(true_a: ArrayLike, est_a: ArrayLike) -> NDArray[np.float64]:
    """Per-frame mean over nodes of the acceleration error norm, shape (T,)."""
    true_a = np.asarray(true_a, dtype=float)
    est_a = np.asarray(est_a, dtype=float)
    _check_lengths(true_a, est_a)
    return np.linalg.norm(est_a - true_a, axis=-1).mean(axis=-1)


def pose_errors(
    true_pose: ArrayLike, est_pose: ArrayLike, shape: BodyShape | Skeleton | None = None
) -> tuple[NDArray, NDArray]:
    """
    Per-frame, per-joint position error (m) and global angular error (deg).

    Both skeletons keep the root at the origin.
    """
    true_pose = np.asarray(true_pose, dtype=float)
    est_pose = np.asarray(est_pose, dtype=float)
    _check_lengths(true_pose, est_pose)
    sk = get_skeleton(shape)
    ft = sk.fk(true_pose)
    fe = sk.fk(est_pose)
    pos = np.linalg.norm(fe.joints - ft.joints, axis=-1)
    ang = np.degrees(geodesic_angle(ft.global_rot, fe.global_rot))
    return pos, ang


@dataclass
class MetricsReport:
    distance_mae: float
    distance_std: float
    accel_mae: float
    joint_position_error: float
    sip_error: float
    angular_error: float
    cdf_x: NDArray = field(repr=False)
    cdf_y: NDArray = field(repr=False)
    distance_series: NDArray = field(repr=False)  # per-frame distance MAE
    accel_series: NDArray = field(repr=False)  # per-frame acceleration MAE

    def summary(self) -> dict:
        keys = ("distance_mae", "distance_std", "accel_mae", "joint_position_error", "sip_error", "angular_error")
        d = asdict(self)
        return {k: float(d[k]) for k in keys}


def compute_metrics(
    true_distances: ArrayLike,
    est_distances: ArrayLike,
    true_accel: ArrayLike | None = None,
    est_accel: ArrayLike | None = None,
    true_pose: ArrayLike | None = None,
    est_pose: ArrayLike | None = None,
    shape: BodyShape | Skeleton | None = None,
) -> MetricsReport:
    """
    Score estimates against ground truth; missing acceleration or pose inputs score as NaN.

    Distance MAE and std are the mean and standard deviation of absolute
    errors over every frame and pair.
    """
    T = _check_lengths(true_distances, est_distances, true_accel, est_accel, true_pose, est_pose)
    derr = distance_errors(true_distances, est_distances)
    cdf_x, cdf_y = error_cdf(derr)

    if true_accel is not None and est_accel is not None:
        aser = acceleration_errors(true_accel, est_accel)
        amae = float(aser.mean())
    else:
        aser = np.full(T, np.nan)
        amae = float("nan")

    if true_pose is not None and est_pose is not None:
        pos, ang = pose_errors(true_pose, est_pose, shape)
        jpe, sip, angular = float(pos.mean()), float(ang[:, SIP_JOINTS].mean()), float(ang.mean())
    else:
        jpe = sip = angular = float("nan")

    return MetricsReport(
        distance_mae=float(derr.mean()),
        distance_std=float(derr.std()),
        accel_mae=amae,
        joint_position_error=jpe,
        sip_error=sip,
        angular_error=angular,
        cdf_x=cdf_x,
        cdf_y=cdf_y,
        distance_series=derr.reshape(T, -1).mean(axis=1),
        accel_series=aser,
    )
