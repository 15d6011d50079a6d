# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ray/mesh kernels. Semantics match ``bodyfuse._kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, NAN, INFINITY

cnp.import_array()

cdef double PARALLEL_EPS = 1e-12


cdef inline double _mt(
    double ox, double oy, double oz,
    double dx, double dy, double dz,
    double ax, double ay, double az,
    double e1x, double e1y, double e1z,
    double e2x, double e2y, double e2z,
    double tmin, double tmax,
) noexcept nogil:
    cdef double px = dy * e2z - dz * e2y
    cdef double py = dz * e2x - dx * e2z
    cdef double pz = dx * e2y - dy * e2x
    cdef double det = e1x * px + e1y * py + e1z * pz
    cdef double scale = (
        sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
        * sqrt(e2x * e2x + e2y * e2y + e2z * e2z)
        * sqrt(dx * dx + dy * dy + dz * dz)
    )
    if not fabs(det) > PARALLEL_EPS * scale:
        return NAN
    cdef double inv = 1.0 / det
    cdef double tx = ox - ax
    cdef double ty = oy - ay
    cdef double tz = oz - az
    cdef double u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0 or u > 1.0:
        return NAN
    cdef double qx = ty * e1z - tz * e1y
    cdef double qy = tz * e1x - tx * e1z
    cdef double qz = tx * e1y - ty * e1x
    cdef double v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return NAN
    cdef double t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t > tmin and t < tmax:
        return t
    return NAN


def segment_triangle_pairs(origins, dirs, v0, e1, e2, double tmin, double tmax):
    cdef double[:, ::1] o = np.ascontiguousarray(origins, dtype=np.float64)
    cdef double[:, ::1] d = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef double[:, ::1] a = np.ascontiguousarray(v0, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(e1, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(e2, dtype=np.float64)
    cdef Py_ssize_t n = o.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _mt(o[i, 0], o[i, 1], o[i, 2], d[i, 0], d[i, 1], d[i, 2],
                         a[i, 0], a[i, 1], a[i, 2], b[i, 0], b[i, 1], b[i, 2],
                         c[i, 0], c[i, 1], c[i, 2], tmin, tmax)
    return out_arr


cdef void _insertion_sort(double* x, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double key
    for i in range(1, n):
        key = x[i]
        j = i - 1
        while j >= 0 and x[j] > key:
            x[j + 1] = x[j]
            j -= 1
        x[j + 1] = key


cdef void _sort_intervals(double* a, double* b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double ka, kb
    for i in range(1, n):
        ka = a[i]
        kb = b[i]
        j = i - 1
        while j >= 0 and (a[j] > ka or (a[j] == ka and b[j] > kb)):
            a[j + 1] = a[j]
            b[j + 1] = b[j]
            j -= 1
        a[j + 1] = ka
        b[j + 1] = kb


def segment_mesh_los(origins, dirs, v0, e1, e2, face_capsule, cap_center, cap_radius,
                     double tmin, double tmax, double merge_tol):
    cdef double[:, ::1] o = np.ascontiguousarray(origins, dtype=np.float64)
    cdef double[:, ::1] d = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef double[:, ::1] a = np.ascontiguousarray(v0, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(e1, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(e2, dtype=np.float64)
    cdef double[:, ::1] cc = np.ascontiguousarray(cap_center, dtype=np.float64)
    cdef double[::1] cr = np.ascontiguousarray(cap_radius, dtype=np.float64)

    fc_np = np.ascontiguousarray(face_capsule, dtype=np.int64)
    cdef Py_ssize_t S = o.shape[0]
    cdef Py_ssize_t F = a.shape[0]
    cdef Py_ssize_t C = cc.shape[0]

    # faces grouped by capsule: order[start[k]:start[k+1]] are capsule k's faces
    order_np = np.argsort(fc_np, kind="stable").astype(np.int64)
    start_np = np.searchsorted(fc_np[order_np], np.arange(C + 1)).astype(np.int64)
    cdef long long[::1] order = order_np
    cdef long long[::1] start = start_np

    los_arr = np.ones(S, dtype=np.float64)
    hits_arr = np.zeros(S, dtype=np.int64)
    rep_arr = np.zeros(S, dtype=np.int64)
    cdef double[::1] los = los_arr
    cdef long long[::1] nhits = hits_arr
    cdef long long[::1] nrep = rep_arr

    buf_np = np.empty(F + 1, dtype=np.float64)
    ia_np = np.empty(F + 1, dtype=np.float64)
    ib_np = np.empty(F + 1, dtype=np.float64)
    cdef double[::1] buf = buf_np
    cdef double[::1] ia = ia_np
    cdef double[::1] ib = ib_np

    cdef Py_ssize_t i, k, f, q, m, n_iv, drop, j, jj
    cdef double ox, oy, oz, dx, dy, dz, dd, rx, ry, rz, s, px, py, pz, dist2, rad
    cdef double t, inside, best_len, length, cur_a, cur_b

    with nogil:
        for i in range(S):
            ox = o[i, 0]; oy = o[i, 1]; oz = o[i, 2]
            dx = d[i, 0]; dy = d[i, 1]; dz = d[i, 2]
            dd = dx * dx + dy * dy + dz * dz
            n_iv = 0
            for k in range(C):
                rx = cc[k, 0] - ox; ry = cc[k, 1] - oy; rz = cc[k, 2] - oz
                s = (rx * dx + ry * dy + rz * dz) / dd
                if s < 0.0:
                    s = 0.0
                elif s > 1.0:
                    s = 1.0
                px = ox + s * dx - cc[k, 0]
                py = oy + s * dy - cc[k, 1]
                pz = oz + s * dz - cc[k, 2]
                dist2 = px * px + py * py + pz * pz
                rad = cr[k] * (1.0 + 1e-9) + 1e-12
                if dist2 > rad * rad:
                    continue

                m = 0
                for q in range(start[k], start[k + 1]):
                    f = order[q]
                    t = _mt(ox, oy, oz, dx, dy, dz,
                            a[f, 0], a[f, 1], a[f, 2], b[f, 0], b[f, 1], b[f, 2],
                            c[f, 0], c[f, 1], c[f, 2], tmin, tmax)
                    if t == t:
                        buf[m] = t
                        m += 1
                if m == 0:
                    continue
                _insertion_sort(&buf[0], m)
                # drop duplicates from shared edges and vertices
                j = 1
                for q in range(1, m):
                    if buf[q] - buf[j - 1] > merge_tol:
                        buf[j] = buf[q]
                        j += 1
                m = j
                if m % 2 == 1:
                    drop = 0
                    best_len = INFINITY
                    for q in range(m):
                        length = 0.0
                        jj = 0
                        cur_a = 0.0
                        for j in range(m):
                            if j == q:
                                continue
                            if jj % 2 == 0:
                                cur_a = buf[j]
                            else:
                                length += buf[j] - cur_a
                            jj += 1
                        if length < best_len:
                            best_len = length
                            drop = q
                    for q in range(drop, m - 1):
                        buf[q] = buf[q + 1]
                    m -= 1
                    nrep[i] += 1
                nhits[i] += m
                for q in range(0, m, 2):
                    ia[n_iv] = buf[q]
                    ib[n_iv] = buf[q + 1]
                    n_iv += 1

            if n_iv == 0:
                continue
            _sort_intervals(&ia[0], &ib[0], n_iv)
            inside = 0.0
            cur_a = ia[0]
            cur_b = ib[0]
            for q in range(1, n_iv):
                if ia[q] > cur_b:
                    inside += cur_b - cur_a
                    cur_a = ia[q]
                    cur_b = ib[q]
                elif ib[q] > cur_b:
                    cur_b = ib[q]
            inside += cur_b - cur_a
            los[i] = 1.0 - inside
    return los_arr, hits_arr, rep_arr
