"""
Accelerometer synthesis, the additive bias/white-noise error model, and the
mounting calibration that maps sensor readings into the body frame.

Frame tags: ``"S"`` sensor-local and ``"M"`` body frame for accelerations,
``"WS"`` sensor-to-world and ``"MB"`` bone-to-body for orientations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray


class TooShort(ValueError):
    pass


class FrameMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ImuNoiseSpec:
    """
    Accelerometer error parameters, per axis.

    Parameters
    ----------
    sigma_white : float
        White-noise standard deviation (m/s^2).
    sigma_bias_walk : float
        Standard deviation of the per-step bias increment (m/s^2).
    initial_bias_std : float
        Standard deviation of the initial bias draw (m/s^2).
    seed : int
        Seed for the noise generator.
    initial_bias : array-like, optional
        Fixed initial bias, shape (3,) or (n_nodes, 3). Replaces the random draw.
    """

    sigma_white: float = 0.04
    sigma_bias_walk: float = 0.002
    initial_bias_std: float = 0.05
    seed: int = 0
    initial_bias: tuple | None = None

    def __post_init__(self) -> None:
        if min(self.sigma_white, self.sigma_bias_walk, self.initial_bias_std) < 0:
            raise ValueError("noise standard deviations must be non-negative")

    def with_seed(self, seed: int) -> "ImuNoiseSpec":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class ImuReading:
    """One frame of readings for all nodes."""

    accel: NDArray[np.float64]  # (n_nodes, 3)
    orientation: NDArray[np.float64]  # (n_nodes, 3, 3)
    timestamp: float
    accel_frame: str = "S"
    orientation_frame: str = "WS"


@dataclass(frozen=True)
class CalibSet:
    R_MW: NDArray[np.float64]  # (n_nodes, 3, 3)
    R_SB: NDArray[np.float64]  # (n_nodes, 3, 3)


def synth_accelerations(positions: ArrayLike, dt: float) -> NDArray[np.float64]:
    """
    Accelerations from sampled positions by central second differences.

    Parameters
    ----------
    positions : array-like, shape (T, ...)
        Positions over time; the first axis is time.
    dt : float
        Sampling interval in seconds.

    Returns
    -------
    numpy.ndarray
        Same shape as `positions`. The first and last frames copy their
        nearest interior neighbour.
    """
    p = np.asarray(positions, dtype=float)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if p.shape[0] < 3:
        raise TooShort("need at least 3 frames for second differences")
    a = np.empty_like(p)
    a[1:-1] = (p[2:] - 2.0 * p[1:-1] + p[:-2]) / dt**2
    a[0] = a[1]
    a[-1] = a[-2]
    return a


def corrupt(a_true: ArrayLike, spec: ImuNoiseSpec) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Add a random-walk bias and white noise to true accelerations.

    ``b_0`` is the initial bias and ``b_k = b_{k-1} + eta_k`` afterwards.

    Parameters
    ----------
    a_true : array-like, shape (T, n_nodes, 3)
    spec : ImuNoiseSpec

    Returns
    -------
    a_measured : numpy.ndarray, shape (T, n_nodes, 3)
    bias : numpy.ndarray, shape (T, n_nodes, 3)
        The bias trace actually applied.
    """
    a_true = np.asarray(a_true, dtype=float)
    rng = np.random.default_rng(spec.seed)
    T = a_true.shape[0]
    node_shape = a_true.shape[1:]

    if spec.initial_bias is not None:
        b0 = np.broadcast_to(np.asarray(spec.initial_bias, dtype=float), node_shape)
    else:
        b0 = spec.initial_bias_std * rng.standard_normal(node_shape)
    steps = spec.sigma_bias_walk * rng.standard_normal((T,) + node_shape)
    steps[0] = 0.0
    bias = b0 + np.cumsum(steps, axis=0)
    white = spec.sigma_white * rng.standard_normal((T,) + node_shape)
    return a_true + bias + white, bias


def calibrate_mounting(Rws_tpose_mean: ArrayLike, R_MW: ArrayLike | None = None) -> CalibSet:
    """
    Sensor-to-bone rotations from the mean T-pose orientation.

    At the T-pose every bone is aligned with the body frame, so
    ``R_SB = inv(R_MW @ Rws_tpose_mean)``.
    """
    Rws = np.asarray(Rws_tpose_mean, dtype=float)
    R_MW = np.broadcast_to(np.eye(3), Rws.shape).copy() if R_MW is None else np.asarray(R_MW, dtype=float)
    R_SB = np.swapaxes(R_MW @ Rws, -1, -2)
    return CalibSet(R_MW=R_MW, R_SB=R_SB)


def apply_calibration(reading: ImuReading, calib: CalibSet) -> ImuReading:
    """Map a sensor-frame reading to body-frame acceleration and bone orientation."""
    if reading.accel_frame != "S" or reading.orientation_frame != "WS":
        raise FrameMismatch(
            f"expected frames (WS, S), got ({reading.orientation_frame}, {reading.accel_frame})"
        )
    R_MS = calib.R_MW @ reading.orientation
    accel = np.einsum("nij,nj->ni", R_MS, reading.accel)
    R_MB = R_MS @ calib.R_SB
    return ImuReading(accel, R_MB, reading.timestamp, accel_frame="M", orientation_frame="MB")


def sensor_frame_readings(
    accel_M: ArrayLike,
    R_MB: ArrayLike,
    R_SB: ArrayLike,
    R_MW: ArrayLike,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Inverse of :func:`apply_calibration`: what the sensors would report.

    Works on per-frame arrays with leading time axes, e.g. ``(T, n, 3)`` and
    ``(T, n, 3, 3)``; the mounting rotations broadcast over time.
    """
    accel_M = np.asarray(accel_M, dtype=float)
    R_MB = np.asarray(R_MB, dtype=float)
    R_MW = np.asarray(R_MW, dtype=float)
    R_SB = np.asarray(R_SB, dtype=float)
    R_WM = np.swapaxes(R_MW, -1, -2)
    R_WS = R_WM @ R_MB @ np.swapaxes(R_SB, -1, -2)
    R_SM = np.swapaxes(R_MW @ R_WS, -1, -2)
    accel_S = np.einsum("...ij,...j->...i", R_SM, accel_M)
    return accel_S, R_WS
