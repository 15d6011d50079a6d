"""Rotation helpers, the 6D rotation encoding and a jittered Cholesky.

All rotations act on column vectors (``v' = R @ v``) and angles are in radians.
Functions accept a single item or a leading batch dimension where noted.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.transform import Rotation as _ScipyRotation

# below this column norm the 6D encoding is treated as degenerate
_DEGENERATE_NORM = 1e-8


class DegenerateInput(ValueError):
    """Raised when a 6D encoding has a zero or parallel column pair."""


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Raised when a matrix stays indefinite after the maximum jitter."""


def rot6d_to_rotation(r: ArrayLike) -> NDArray[np.float64]:
    """
    Decode the 6D rotation encoding into rotation matrices by Gram-Schmidt.

    Parameters
    ----------
    r : array-like, shape (..., 6)
        First and second matrix columns, flattened column by column.

    Returns
    -------
    numpy.ndarray, shape (..., 3, 3)
        Proper rotation matrices.
    """
    r = np.asarray(r, dtype=float)
    a1 = r[..., 0:3]
    a2 = r[..., 3:6]

    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 <= _DEGENERATE_NORM):
        raise DegenerateInput("first 6D column is (near) zero")
    b1 = a1 / n1
    u2 = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(u2, axis=-1, keepdims=True)
    if np.any(n2 <= _DEGENERATE_NORM * np.maximum(1.0, np.linalg.norm(a2, axis=-1, keepdims=True))):
        raise DegenerateInput("6D columns are (near) parallel or zero")
    b2 = u2 / n2
    b3 = np.cross(b1, b2)
    return np.stack((b1, b2, b3), axis=-1)


def rot6d_degenerate_mask(r: ArrayLike) -> NDArray[np.bool_]:
    """Boolean mask over the leading axes marking encodings that cannot be decoded."""
    r = np.asarray(r, dtype=float)
    a1 = r[..., 0:3]
    a2 = r[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1)
    safe = np.where(n1 > _DEGENERATE_NORM, n1, 1.0)
    b1 = a1 / safe[..., None]
    u2 = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(u2, axis=-1)
    return (n1 <= _DEGENERATE_NORM) | (n2 <= _DEGENERATE_NORM * np.maximum(1.0, np.linalg.norm(a2, axis=-1)))


def rotation_to_rot6d(R: ArrayLike) -> NDArray[np.float64]:
    """Encode rotation matrices ``(..., 3, 3)`` as their first two columns ``(..., 6)``."""
    R = np.asarray(R, dtype=float)
    return np.concatenate((R[..., :, 0], R[..., :, 1]), axis=-1)


def rot_x(angle: float) -> NDArray[np.float64]:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> NDArray[np.float64]:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> NDArray[np.float64]:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def axis_angle_to_matrix(rotvec: ArrayLike) -> NDArray[np.float64]:
    """Rotation vectors ``(..., 3)`` to matrices ``(..., 3, 3)``."""
    rotvec = np.asarray(rotvec, dtype=float)
    flat = rotvec.reshape(-1, 3)
    mats = _ScipyRotation.from_rotvec(flat).as_matrix()
    return mats.reshape(rotvec.shape[:-1] + (3, 3))


def matrix_to_axis_angle(R: ArrayLike) -> NDArray[np.float64]:
    """Rotation matrices ``(..., 3, 3)`` to rotation vectors ``(..., 3)``."""
    R = np.asarray(R, dtype=float)
    flat = R.reshape(-1, 3, 3)
    vecs = _ScipyRotation.from_matrix(flat).as_rotvec()
    return vecs.reshape(R.shape[:-2] + (3,))


def random_rotation(rng: np.random.Generator, size: int | None = None) -> NDArray[np.float64]:
    """Uniformly distributed rotation matrices drawn from ``rng``."""
    n = 1 if size is None else size
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    mats = _ScipyRotation.from_quat(q).as_matrix()
    return mats[0] if size is None else mats


def geodesic_angle(R1: ArrayLike, R2: ArrayLike) -> NDArray[np.float64]:
    """
    Angle of the relative rotation ``R1^T R2`` in radians.

    Uses ``atan2(|skew part|, trace part)`` which stays accurate near 0 and pi.
    """
    R1 = np.asarray(R1, dtype=float)
    R2 = np.asarray(R2, dtype=float)
    D = np.swapaxes(R1, -1, -2) @ R2
    tr = D[..., 0, 0] + D[..., 1, 1] + D[..., 2, 2]
    w = np.stack(
        (D[..., 2, 1] - D[..., 1, 2], D[..., 0, 2] - D[..., 2, 0], D[..., 1, 0] - D[..., 0, 1]),
        axis=-1,
    )
    return np.arctan2(0.5 * np.linalg.norm(w, axis=-1), 0.5 * (tr - 1.0))


def is_rotation(R: ArrayLike, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    eye = np.eye(3)
    ortho = np.abs(np.swapaxes(R, -1, -2) @ R - eye).max() <= tol
    return bool(ortho and np.all(np.abs(np.linalg.det(R) - 1.0) <= tol))


def symmetrize(M: ArrayLike) -> NDArray[np.float64]:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def cholesky(
    M: ArrayLike,
    jitter: bool = True,
    start: float = 1e-10,
    stop: float = 1e-4,
) -> NDArray[np.float64]:
    """
    Lower-triangular Cholesky factor with escalating diagonal jitter.

    A plain factorization is tried first. On failure ``eps * trace(M) / n`` is
    added to the diagonal, with ``eps`` growing tenfold from `start` up to
    `stop`.

    Parameters
    ----------
    M : array-like, shape (n, n)
        Symmetric matrix.
    jitter : bool
        If False, only the plain factorization is attempted.
    start, stop : float
        First and last relative jitter levels.

    Returns
    -------
    numpy.ndarray
        ``L`` with ``L @ L.T == M + jitter * I``.

    Raises
    ------
    NotPositiveDefinite
        If the factorization fails at every jitter level.
    """
    L, _ = cholesky_with_jitter(M, jitter=jitter, start=start, stop=stop)
    return L


def cholesky_with_jitter(
    M: ArrayLike,
    jitter: bool = True,
    start: float = 1e-10,
    stop: float = 1e-4,
) -> tuple[NDArray[np.float64], float]:
    """Same as :func:`cholesky` but also returns the absolute jitter that was added."""
    M = np.asarray(M, dtype=float)
    try:
        return np.linalg.cholesky(M), 0.0
    except np.linalg.LinAlgError:
        if not jitter:
            raise NotPositiveDefinite("matrix is not positive definite") from None

    n = M.shape[0]
    scale = np.trace(M) / n
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    eye = np.eye(n)
    eps = start
    while eps <= stop * (1 + 1e-9):
        amount = eps * scale
        try:
            return np.linalg.cholesky(M + amount * eye), amount
        except np.linalg.LinAlgError:
            eps *= 10.0
    raise NotPositiveDefinite(f"matrix is not positive definite even with jitter {stop:g}*trace/n")
