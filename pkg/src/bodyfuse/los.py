"""
Line-of-sight between sensors through the capsule mesh, and the distance
error model driven by the unobstructed fraction of each sensor-to-sensor segment.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import kernels
from .body import PAIRS, BodyMesh

# hits closer than this (in segment fractions) to either endpoint are ignored
ENDPOINT_EPS = 1e-6
# hits closer than this are one crossing through a shared edge or vertex
MERGE_TOL = 1e-9


class DegenerateSegment(ValueError):
    pass


@dataclass(frozen=True)
class LosReport:
    los: float
    intersections: int
    length: float
    repairs: int = 0


@dataclass(frozen=True)
class DistErrorModel:
    """Piecewise-linear standard deviation of a range as a function of its LOS fraction."""

    tau_upper: float = 0.9
    tau_lower: float = 0.3
    sigma_min: float = 0.03
    sigma_max: float = 0.25
    sigma_kinematics: float = 0.10

    def __post_init__(self) -> None:
        if not (0.0 < self.tau_lower < self.tau_upper < 1.0):
            raise ValueError("need 0 < tau_lower < tau_upper < 1")
        if not (0.0 < self.sigma_min <= self.sigma_max):
            raise ValueError("need 0 < sigma_min <= sigma_max")
        if self.sigma_kinematics <= 0.0:
            raise ValueError("sigma_kinematics must be positive")


def ray_triangle(origin: ArrayLike, direction: ArrayLike, tri: ArrayLike, eps: float = ENDPOINT_EPS) -> float | None:
    """
    Moller-Trumbore intersection of the segment ``origin + t * direction``.

    Parameters
    ----------
    origin, direction : array-like, shape (3,)
        Segment start and ``end - start``.
    tri : array-like, shape (3, 3)
        Triangle vertices as rows.
    eps : float
        Hits with ``t <= eps`` or ``t >= 1 - eps`` are ignored.

    Returns
    -------
    float or None
        The hit parameter, or None on a miss.
    """
    direction = np.asarray(direction, dtype=float)
    if not np.any(direction):
        raise ValueError("direction must be nonzero")
    tri = np.asarray(tri, dtype=float)
    t = kernels.segment_triangle_pairs(
        np.asarray(origin, dtype=float)[None],
        direction[None],
        tri[0][None],
        (tri[1] - tri[0])[None],
        (tri[2] - tri[0])[None],
        eps,
        1.0 - eps,
    )[0]
    return None if np.isnan(t) else float(t)


def _mesh_arrays(mesh: BodyMesh):
    tris = mesh.triangles
    v0 = tris[:, 0]
    centers = 0.5 * (mesh.capsule_start + mesh.capsule_end)
    radii = 0.5 * np.linalg.norm(mesh.capsule_end - mesh.capsule_start, axis=1) + mesh.capsule_radius
    return v0, tris[:, 1] - v0, tris[:, 2] - v0, centers, radii


def los_batch(mesh: BodyMesh, p_from: ArrayLike, p_to: ArrayLike, backend: str | None = None):
    """
    LOS fractions for many segments against one mesh.

    Returns arrays ``(los, intersections, repairs)`` with one entry per segment.
    """
    p_from = np.atleast_2d(np.asarray(p_from, dtype=float))
    p_to = np.atleast_2d(np.asarray(p_to, dtype=float))
    dirs = p_to - p_from
    lengths = np.linalg.norm(dirs, axis=1)
    if np.any(lengths <= 1e-12):
        raise DegenerateSegment("segment endpoints coincide")
    v0, e1, e2, centers, radii = _mesh_arrays(mesh)
    impl = kernels.get_backend(backend)
    los, hits, rep = impl.segment_mesh_los(
        p_from, dirs, v0, e1, e2, mesh.face_capsule, centers, radii,
        ENDPOINT_EPS, 1.0 - ENDPOINT_EPS, MERGE_TOL,
    )
    if rep.any():
        warnings.warn(
            f"{int(rep.sum())} odd crossing count(s) repaired by dropping a grazing hit",
            RuntimeWarning,
            stacklevel=2,
        )
    return np.clip(los, 0.0, 1.0), hits, rep


def los_proportion(mesh: BodyMesh, p_from: ArrayLike, p_to: ArrayLike) -> LosReport:
    """Fraction of the segment between two points lying outside every capsule."""
    los, hits, rep = los_batch(mesh, p_from, p_to)
    length = float(np.linalg.norm(np.asarray(p_to, dtype=float) - np.asarray(p_from, dtype=float)))
    return LosReport(float(los[0]), int(hits[0]), length, int(rep[0]))


def pair_los(mesh: BodyMesh, sensors: ArrayLike) -> NDArray[np.float64]:
    """LOS fraction of the 15 sensor pairs, shape (15,)."""
    sensors = np.asarray(sensors, dtype=float)
    ix = [x for x, _ in PAIRS]
    iy = [y for _, y in PAIRS]
    los, _, _ = los_batch(mesh, sensors[ix], sensors[iy])
    return los


def sigma_of_los(model: DistErrorModel, l: float) -> tuple[float, bool]:
    """
    Range standard deviation for LOS fraction `l` and whether to substitute it.

    Below ``tau_lower`` the range is replaced by a kinematic prediction with
    ``sigma_kinematics``.
    """
    if not (0.0 <= l <= 1.0):
        raise ValueError("LOS fraction must lie in [0, 1]")
    if l >= model.tau_upper:
        return model.sigma_min, False
    if l < model.tau_lower:
        return model.sigma_kinematics, True
    ramp = (model.tau_upper - l) / (model.tau_upper - model.tau_lower)
    return (model.sigma_max - model.sigma_min) * ramp + model.sigma_min, False


def sigma_of_los_array(model: DistErrorModel, l: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Vectorized :func:`sigma_of_los`."""
    l = np.asarray(l, dtype=float)
    ramp = (model.tau_upper - l) / (model.tau_upper - model.tau_lower)
    sigma = (model.sigma_max - model.sigma_min) * ramp + model.sigma_min
    sigma = np.where(l >= model.tau_upper, model.sigma_min, sigma)
    substitute = l < model.tau_lower
    sigma = np.where(substitute, model.sigma_kinematics, sigma)
    return sigma, substitute


def raw_range_sigma(model: DistErrorModel, l: ArrayLike) -> NDArray[np.float64]:
    """
    Noise level used to synthesize raw UWB ranges.

    Follows the ramp of the error model but saturates at ``sigma_max`` for
    heavily occluded pairs, where the filter substitutes the range instead.
    """
    l = np.asarray(l, dtype=float)
    ramp = np.clip((model.tau_upper - l) / (model.tau_upper - model.tau_lower), 0.0, 1.0)
    return (model.sigma_max - model.sigma_min) * ramp + model.sigma_min


def corrupt_distance(d_true: ArrayLike, sigma_d: ArrayLike, rng: np.random.Generator | int) -> NDArray[np.float64]:
    """``max(0, d_true + N(0, sigma_d^2))``."""
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    d_true = np.asarray(d_true, dtype=float)
    sigma_d = np.asarray(sigma_d, dtype=float)
    if np.any(sigma_d < 0):
        raise ValueError("sigma_d must be non-negative")
    noise = rng.standard_normal(np.broadcast(d_true, sigma_d).shape)
    return np.maximum(0.0, d_true + sigma_d * noise)


def write_los_profile(path: str | Path, los: ArrayLike, sigma_d: ArrayLike) -> None:
    """CSV with columns ``frame, pair, l, sigma_d``; pairs are written as ``x-y``."""
    los = np.asarray(los)
    sigma_d = np.asarray(sigma_d)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "pair", "l", "sigma_d"])
        for k in range(los.shape[0]):
            for p, (x, y) in enumerate(PAIRS):
                w.writerow([k, f"{x}-{y}", f"{los[k, p]:.6f}", f"{sigma_d[k, p]:.6f}"])
