"""NumPy implementations of the ray/mesh kernels, used when the compiled module is absent."""

from __future__ import annotations

import numpy as np

_PARALLEL_EPS = 1e-12


def segment_triangle_pairs(origins, dirs, v0, e1, e2, tmin, tmax):
    """
    Moller-Trumbore test of segment ``i`` against triangle ``i``.

    Returns the hit parameter ``t`` (``origin + t * dir``) or NaN on a miss.
    """
    origins = np.asarray(origins, dtype=float)
    dirs = np.asarray(dirs, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    return _mt(origins, dirs, v0, e1, e2, tmin, tmax)


def _mt(o, d, v0, e1, e2, tmin, tmax):
    # all inputs broadcast against each other along leading axes
    pvec = np.cross(d, e2)
    det = np.sum(e1 * pvec, axis=-1)
    scale = (
        np.linalg.norm(e1, axis=-1) * np.linalg.norm(e2, axis=-1) * np.linalg.norm(d, axis=-1)
    )
    ok = np.abs(det) > _PARALLEL_EPS * scale
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = o - v0
    u = np.sum(tvec * pvec, axis=-1) * inv
    qvec = np.cross(tvec, e1)
    v = np.sum(d * qvec, axis=-1) * inv
    t = np.sum(e2 * qvec, axis=-1) * inv
    hit = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > tmin) & (t < tmax)
    return np.where(hit, t, np.nan)


def _inside_length(hits):
    total = 0.0
    for j in range(0, len(hits) - 1, 2):
        total += hits[j + 1] - hits[j]
    return total


def _capsule_intervals(ts, merge_tol):
    """Sorted, de-duplicated hits of one closed capsule paired into inside intervals."""
    ts = np.sort(ts)
    keep = [ts[0]]
    for t in ts[1:]:
        if t - keep[-1] > merge_tol:
            keep.append(t)
    repaired = 0
    if len(keep) % 2 == 1:
        # drop the crossing whose removal leaves the least inside length
        best, best_len = 0, np.inf
        for i in range(len(keep)):
            trial = keep[:i] + keep[i + 1:]
            length = _inside_length(trial)
            if length < best_len:
                best, best_len = i, length
        keep = keep[:best] + keep[best + 1:]
        repaired = 1
    intervals = [(keep[j], keep[j + 1]) for j in range(0, len(keep), 2)]
    return intervals, len(keep), repaired


def _union_length(intervals):
    if not intervals:
        return 0.0
    intervals = sorted(intervals)
    total = 0.0
    cur_a, cur_b = intervals[0]
    for a, b in intervals[1:]:
        if a > cur_b:
            total += cur_b - cur_a
            cur_a, cur_b = a, b
        elif b > cur_b:
            cur_b = b
    return total + (cur_b - cur_a)


def segment_mesh_los(origins, dirs, v0, e1, e2, face_capsule, cap_center, cap_radius, tmin, tmax, merge_tol):
    """
    Line-of-sight fraction of each segment against a union of closed capsules.

    Parameters
    ----------
    origins, dirs : array, shape (S, 3)
        Segment start points and ``end - start`` vectors.
    v0, e1, e2 : array, shape (F, 3)
        Triangle base vertex and edge vectors.
    face_capsule : int array, shape (F,)
        Capsule id of each triangle.
    cap_center, cap_radius : arrays, shape (C, 3) and (C,)
        Bounding spheres used to skip capsules far from a segment.

    Returns
    -------
    los : array, shape (S,)
    n_hits : int array, shape (S,)
    n_repairs : int array, shape (S,)
    """
    origins = np.asarray(origins, dtype=float)
    dirs = np.asarray(dirs, dtype=float)
    S = origins.shape[0]
    los = np.ones(S)
    n_hits = np.zeros(S, dtype=np.int64)
    n_rep = np.zeros(S, dtype=np.int64)

    # bounding-sphere prefilter: distance from each center to each segment
    rel = cap_center[None, :, :] - origins[:, None, :]
    dd = np.sum(dirs * dirs, axis=-1)[:, None]
    s = np.clip(np.sum(rel * dirs[:, None, :], axis=-1) / dd, 0.0, 1.0)
    closest = origins[:, None, :] + s[..., None] * dirs[:, None, :]
    near = np.linalg.norm(closest - cap_center[None], axis=-1) <= cap_radius[None] * (1 + 1e-9) + 1e-12

    for i in range(S):
        caps = np.flatnonzero(near[i])
        if caps.size == 0:
            continue
        faces = np.flatnonzero(np.isin(face_capsule, caps))
        t = _mt(origins[i], dirs[i], v0[faces], e1[faces], e2[faces], tmin, tmax)
        hit = ~np.isnan(t)
        if not hit.any():
            continue
        t_hit = t[hit]
        c_hit = face_capsule[faces][hit]
        intervals = []
        for c in np.unique(c_hit):
            iv, count, rep = _capsule_intervals(t_hit[c_hit == c], merge_tol)
            intervals.extend(iv)
            n_hits[i] += count
            n_rep[i] += rep
        los[i] = 1.0 - _union_length(intervals)
    return los, n_hits, n_rep
