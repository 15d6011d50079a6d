"""
Parametric capsule body: kinematic tree, forward kinematics, sensor mounts,
capsule meshes, anthropometric measurements and the shape regressor.

The body frame is x-left, y-up, z-forward with the root joint pinned at the
origin. A pose is an array of 16 local joint rotations, shape ``(16, 3, 3)``,
optionally with leading batch axes.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

N_JOINTS = 16
N_SENSORS = 6
SENSOR_NAMES = ("l_forearm", "r_forearm", "l_leg", "r_leg", "head", "pelvis")
# ordered node pairs (x, y) with x < y, lexicographic
PAIRS: tuple[tuple[int, int], ...] = tuple(itertools.combinations(range(N_SENSORS), 2))
N_PAIRS = len(PAIRS)
PAIR_INDEX = {pair: k for k, pair in enumerate(PAIRS)}

SHAPE_MIN = 0.7
SHAPE_MAX = 1.4
HEIGHT_RANGE = (1.2, 2.2)
DEFAULT_RESOLUTION = 8


class InvalidShape(ValueError):
    pass


class RankDeficient(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class BodyShape:
    """Multipliers on the template: overall height, arm length, leg length and width."""

    height: float = 1.0
    arm: float = 1.0
    leg: float = 1.0
    width: float = 1.0

    def __post_init__(self) -> None:
        for name in ("height", "arm", "leg", "width"):
            value = getattr(self, name)
            if not (SHAPE_MIN <= value <= SHAPE_MAX):
                raise InvalidShape(f"{name} factor {value} outside [{SHAPE_MIN}, {SHAPE_MAX}]")

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.height, self.arm, self.leg, self.width])

    @classmethod
    def from_array(cls, s: ArrayLike) -> "BodyShape":
        h, a, l, w = (float(v) for v in np.asarray(s, dtype=float).ravel())
        return cls(h, a, l, w)


@dataclass(frozen=True)
class Anthro:
    """Height (m), weight (kg) and the selected T-pose inter-sensor distances (m)."""

    height: float
    weight: float
    distances: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.height <= 0 or self.weight <= 0 or any(d <= 0 for d in self.distances):
            raise ValueError("anthropometric values must be positive")

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.height, self.weight, *self.distances])

    @classmethod
    def from_array(cls, a: ArrayLike) -> "Anthro":
        a = np.asarray(a, dtype=float).ravel()
        return cls(float(a[0]), float(a[1]), tuple(float(v) for v in a[2:]))


@dataclass(frozen=True)
class BodyTemplate:
    """Unscaled template constants as read from the JSON data file."""

    joint_names: tuple[str, ...]
    parents: NDArray[np.int64]
    offsets: NDArray[np.float64]
    groups: tuple[str, ...]
    radii: NDArray[np.float64]
    end_names: tuple[str, ...]
    end_parents: NDArray[np.int64]
    end_offsets: NDArray[np.float64]
    end_groups: tuple[str, ...]
    end_radii: NDArray[np.float64]
    mount_segments: NDArray[np.int64]
    mount_fractions: NDArray[np.float64]
    mount_normals: NDArray[np.float64]
    mount_standoffs: NDArray[np.float64]
    anthro_pairs: tuple[tuple[int, int], ...]
    height: float
    density: float

    @classmethod
    def from_dict(cls, data: dict) -> "BodyTemplate":
        joints = data["joints"]
        names = tuple(j["name"] for j in joints)
        if len(names) != N_JOINTS:
            raise ValueError(f"template must define {N_JOINTS} joints, got {len(names)}")
        index = {n: i for i, n in enumerate(names)}
        parents = np.array([-1 if j["parent"] is None else index[j["parent"]] for j in joints])
        if parents[0] != -1 or np.any(parents[1:] < 0):
            raise ValueError("joint 0 must be the only root")
        if np.any(parents[1:] >= np.arange(1, N_JOINTS)):
            raise ValueError("joints must be listed parents-first")
        offsets = np.array([j["offset"] for j in joints], dtype=float)
        if np.any(np.linalg.norm(offsets[1:], axis=1) <= 0):
            raise ValueError("non-root joints need nonzero offsets")
        radii = np.array([0.0 if j["radius"] is None else j["radius"] for j in joints], dtype=float)

        ends = data["end_sites"]
        end_names = tuple(e["name"] for e in ends)
        end_parents = np.array([index[e["parent"]] for e in ends])
        end_offsets = np.array([e["offset"] for e in ends], dtype=float)
        end_radii = np.array([e["radius"] for e in ends], dtype=float)

        # segment k < 15 is the capsule ending at joint k+1, then the end sites
        seg_index = {n: i for i, n in enumerate(names[1:] + end_names)}
        mounts = data["mounts"]
        if tuple(m["name"] for m in mounts) != SENSOR_NAMES:
            raise ValueError(f"mounts must be ordered {SENSOR_NAMES}")
        normals = np.array([m["normal"] for m in mounts], dtype=float)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)

        sensor_index = {n: i for i, n in enumerate(SENSOR_NAMES)}
        pairs = []
        for a, b in data["anthro_pairs"]:
            x, y = sorted((sensor_index[a], sensor_index[b]))
            pairs.append((x, y))

        return cls(
            joint_names=names,
            parents=parents,
            offsets=offsets,
            groups=tuple(j["group"] for j in joints),
            radii=radii,
            end_names=end_names,
            end_parents=end_parents,
            end_offsets=end_offsets,
            end_groups=tuple(e["group"] for e in ends),
            end_radii=end_radii,
            mount_segments=np.array([seg_index[m["segment"]] for m in mounts]),
            mount_fractions=np.array([m["fraction"] for m in mounts], dtype=float),
            mount_normals=normals,
            mount_standoffs=np.array([m["standoff"] for m in mounts], dtype=float),
            anthro_pairs=tuple(pairs),
            height=float(data["height"]),
            density=float(data["density"]),
        )

    @classmethod
    def load(cls, path: str | Path | None = None) -> "BodyTemplate":
        if path is None:
            text = resources.files("bodyfuse").joinpath("data/template.json").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_dict(json.loads(text))


@functools.lru_cache(maxsize=None)
def default_template() -> BodyTemplate:
    return BodyTemplate.load()


def _scale_offsets(offsets: NDArray, groups: Sequence[str], s: NDArray) -> NDArray:
    g, arm, leg, width = s
    out = offsets * g
    for i, grp in enumerate(groups):
        if grp == "arm":
            out[i] *= arm
        elif grp == "leg":
            out[i] *= leg
        elif grp == "lateral":
            out[i, 0] *= width
        elif grp != "trunk":
            raise ValueError(f"unknown scale group {grp!r}")
    return out


class Skeleton:
    """
    Template scaled by a :class:`BodyShape`.

    Capsules are indexed by segment: segments ``0..14`` end at joints ``1..15``
    and the rest end at the end sites. Every capsule starts at its bone's joint
    and is rigidly attached to that bone.
    """

    def __init__(self, shape: BodyShape | None = None, template: BodyTemplate | None = None):
        self.shape = BodyShape() if shape is None else shape
        self.template = default_template() if template is None else template
        t = self.template
        s = self.shape.as_array()

        self.parents = t.parents
        self.offsets = _scale_offsets(t.offsets, t.groups, s)
        end_offsets = _scale_offsets(t.end_offsets, t.end_groups, s)
        radius_scale = s[0] * s[3]

        self.seg_bone = np.concatenate((t.parents[1:], t.end_parents))
        self.seg_vector = np.concatenate((self.offsets[1:], end_offsets))
        self.seg_radius = np.concatenate((t.radii[1:], t.end_radii)) * radius_scale

        seg = t.mount_segments
        self.mount_bone = self.seg_bone[seg]
        self.mount_local = (
            t.mount_fractions[:, None] * self.seg_vector[seg]
            + (self.seg_radius[seg] + t.mount_standoffs)[:, None] * t.mount_normals
        )

        h = self.standing_height()
        if not (HEIGHT_RANGE[0] <= h <= HEIGHT_RANGE[1]):
            raise InvalidShape(f"standing height {h:.3f} m outside {HEIGHT_RANGE}")

    def tpose_joint_positions(self) -> NDArray[np.float64]:
        pos = np.zeros((N_JOINTS, 3))
        for j in range(1, N_JOINTS):
            pos[j] = pos[self.parents[j]] + self.offsets[j]
        return pos

    def standing_height(self) -> float:
        """Vertical extent of the T-pose capsules, computed from the segment endpoints."""
        pos = self.tpose_joint_positions()
        start = pos[self.seg_bone]
        end = start + self.seg_vector
        lo = np.minimum(start[:, 1], end[:, 1]) - self.seg_radius
        hi = np.maximum(start[:, 1], end[:, 1]) + self.seg_radius
        return float(hi.max() - lo.min())

    def capsule_volumes(self) -> NDArray[np.float64]:
        r = self.seg_radius
        length = np.linalg.norm(self.seg_vector, axis=1)
        return np.pi * r**2 * length + 4.0 / 3.0 * np.pi * r**3

    def fk(self, pose: ArrayLike) -> "FKResult":
        """Forward kinematics for a pose array of shape ``(..., 16, 3, 3)``."""
        pose = np.asarray(pose, dtype=float)
        if pose.shape[-3:] != (N_JOINTS, 3, 3):
            raise ValueError(f"pose must have shape (..., {N_JOINTS}, 3, 3), got {pose.shape}")
        batch = pose.shape[:-3]
        G = np.empty(batch + (N_JOINTS, 3, 3))
        P = np.empty(batch + (N_JOINTS, 3))
        G[..., 0, :, :] = pose[..., 0, :, :]
        P[..., 0, :] = 0.0
        for j in range(1, N_JOINTS):
            p = self.parents[j]
            Gp = G[..., p, :, :]
            G[..., j, :, :] = Gp @ pose[..., j, :, :]
            P[..., j, :] = P[..., p, :] + Gp @ self.offsets[j]
        Gb = G[..., self.mount_bone, :, :]
        sensors = P[..., self.mount_bone, :] + np.einsum("...ij,...j->...i", Gb, self.mount_local)
        return FKResult(joints=P, global_rot=G, sensors=sensors, sensor_rot=Gb)


@dataclass(frozen=True)
class FKResult:
    joints: NDArray[np.float64]
    global_rot: NDArray[np.float64]
    sensors: NDArray[np.float64]
    sensor_rot: NDArray[np.float64]


@functools.lru_cache(maxsize=64)
def _skeleton_cached(shape: BodyShape) -> Skeleton:
    return Skeleton(shape)


def get_skeleton(shape: BodyShape | Skeleton | None = None) -> Skeleton:
    if isinstance(shape, Skeleton):
        return shape
    return _skeleton_cached(BodyShape() if shape is None else shape)


def tpose(batch: tuple[int, ...] = ()) -> NDArray[np.float64]:
    return np.broadcast_to(np.eye(3), batch + (N_JOINTS, 3, 3)).copy()


def forward_kinematics(shape: BodyShape | Skeleton, pose: ArrayLike) -> FKResult:
    """
    Joint positions, sensor positions and sensor orientations in the body frame.

    Parameters
    ----------
    shape : BodyShape or Skeleton
    pose : array-like, shape (..., 16, 3, 3)
        Local joint rotations; joint 0 is the root orientation.
    """
    return get_skeleton(shape).fk(pose)


def pairwise_differences(points: NDArray) -> NDArray[np.float64]:
    """``points[..., y] - points[..., x]`` for every pair in :data:`PAIRS`, shape ``(..., 15, 3)``."""
    ix = np.array([x for x, _ in PAIRS])
    iy = np.array([y for _, y in PAIRS])
    return points[..., iy, :] - points[..., ix, :]


def relative_sensor_positions(shape: BodyShape | Skeleton, pose: ArrayLike) -> NDArray[np.float64]:
    """Sensor-to-sensor vectors ``p(y) - p(x)`` for the 15 ordered pairs, shape ``(..., 15, 3)``."""
    return pairwise_differences(forward_kinematics(shape, pose).sensors)


# --------------------------------------------------------------------------- mesh


def capsule_triangle_count(resolution: int) -> int:
    """Triangles in one tessellated capsule: ``4 * n * m`` with ``m = max(1, n // 4)``."""
    n = int(resolution)
    return 4 * n * max(1, n // 4)


def _capsule_local(length_vec: NDArray, radius: float, n: int) -> tuple[NDArray, NDArray]:
    """Vertices and faces of a capsule from the origin to ``length_vec``."""
    m = max(1, n // 4)
    L = np.linalg.norm(length_vec)
    d = length_vec / L
    helper = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(d, helper)
    u /= np.linalg.norm(u)
    w = np.cross(d, u)
    az = 2.0 * np.pi * np.arange(n) / n
    circle = np.cos(az)[:, None] * u + np.sin(az)[:, None] * w

    verts = [length_vec + radius * d]
    for k in range(1, m + 1):
        phi = 0.5 * np.pi * k / m
        verts.extend(length_vec + radius * (np.cos(phi) * d + np.sin(phi) * circle))
    for k in range(m, 0, -1):
        phi = 0.5 * np.pi * k / m
        verts.extend(radius * (-np.cos(phi) * d + np.sin(phi) * circle))
    verts.append(-radius * d)
    verts = np.asarray(verts)

    faces = []
    top, bottom = 0, len(verts) - 1
    ring = lambda r: 1 + r * n  # noqa: E731
    for i in range(n):
        faces.append((top, ring(0) + i, ring(0) + (i + 1) % n))
    for r in range(2 * m - 1):
        a, b = ring(r), ring(r + 1)
        for i in range(n):
            i2 = (i + 1) % n
            faces.append((a + i, b + i, b + i2))
            faces.append((a + i, b + i2, a + i2))
    last = ring(2 * m - 1)
    for i in range(n):
        faces.append((bottom, last + (i + 1) % n, last + i))
    return verts, np.asarray(faces, dtype=np.int64)


class MeshRig:
    """Capsule mesh in bone-local coordinates, posed rigidly per bone."""

    def __init__(self, skeleton: Skeleton, resolution: int = DEFAULT_RESOLUTION):
        if resolution < 4:
            raise ValueError("resolution must be at least 4 segments per ring")
        self.skeleton = skeleton
        self.resolution = int(resolution)
        verts, faces, vbone, fcap = [], [], [], []
        base = 0
        for c in range(len(skeleton.seg_bone)):
            v, f = _capsule_local(skeleton.seg_vector[c], skeleton.seg_radius[c], self.resolution)
            verts.append(v)
            faces.append(f + base)
            vbone.append(np.full(len(v), skeleton.seg_bone[c]))
            fcap.append(np.full(len(f), c))
            base += len(v)
        self.local_vertices = np.concatenate(verts)
        self.faces = np.concatenate(faces)
        self.vertex_bone = np.concatenate(vbone)
        self.face_capsule = np.concatenate(fcap)
        self.face_bone = skeleton.seg_bone[self.face_capsule]
        self.n_capsules = len(skeleton.seg_bone)

    def pose(self, pose: ArrayLike) -> "BodyMesh":
        fk = self.skeleton.fk(pose)
        return self.pose_from_fk(fk)

    def pose_from_fk(self, fk: FKResult) -> "BodyMesh":
        G = fk.global_rot[self.vertex_bone]
        vertices = np.einsum("vij,vj->vi", G, self.local_vertices) + fk.joints[self.vertex_bone]
        sk = self.skeleton
        start = fk.joints[sk.seg_bone]
        end = start + np.einsum("cij,cj->ci", fk.global_rot[sk.seg_bone], sk.seg_vector)
        return BodyMesh(
            vertices=vertices,
            faces=self.faces,
            face_bone=self.face_bone,
            face_capsule=self.face_capsule,
            capsule_start=start,
            capsule_end=end,
            capsule_radius=sk.seg_radius.copy(),
        )


@dataclass(frozen=True)
class BodyMesh:
    """Posed triangle mesh; each face is tagged with its bone and capsule."""

    vertices: NDArray[np.float64]
    faces: NDArray[np.int64]
    face_bone: NDArray[np.int64]
    face_capsule: NDArray[np.int64]
    capsule_start: NDArray[np.float64]
    capsule_end: NDArray[np.float64]
    capsule_radius: NDArray[np.float64]

    @property
    def triangles(self) -> NDArray[np.float64]:
        return self.vertices[self.faces]

    @property
    def n_capsules(self) -> int:
        return len(self.capsule_radius)


def capsule_mesh(start: ArrayLike, end: ArrayLike, radius: float, resolution: int = DEFAULT_RESOLUTION) -> BodyMesh:
    """Mesh of a single free-standing capsule, tagged as capsule 0 on bone 0."""
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    v, f = _capsule_local(end - start, float(radius), int(resolution))
    zeros = np.zeros(len(f), dtype=np.int64)
    return BodyMesh(v + start, f, zeros, zeros, start[None], end[None], np.array([float(radius)]))


@functools.lru_cache(maxsize=16)
def _rig_cached(shape: BodyShape, resolution: int) -> MeshRig:
    return MeshRig(get_skeleton(shape), resolution)


def get_rig(shape: BodyShape | Skeleton | None = None, resolution: int = DEFAULT_RESOLUTION) -> MeshRig:
    if isinstance(shape, Skeleton):
        return MeshRig(shape, resolution)
    return _rig_cached(BodyShape() if shape is None else shape, int(resolution))


def build_mesh(
    shape: BodyShape | Skeleton,
    pose: ArrayLike | None = None,
    resolution: int = DEFAULT_RESOLUTION,
) -> BodyMesh:
    """Capsule triangle mesh of the body in `pose` (T-pose when omitted)."""
    rig = get_rig(shape, resolution)
    return rig.pose(tpose() if pose is None else pose)


# ------------------------------------------------------------------ anthropometry


def measure_anthro(shape: BodyShape | Skeleton, resolution: int = DEFAULT_RESOLUTION) -> Anthro:
    """
    Height, weight and the selected distances of the T-pose body.

    Height is the vertical extent of the T-pose mesh and weight is the body
    density times the summed capsule volumes (overlaps are not subtracted).
    """
    sk = get_skeleton(shape)
    mesh = get_rig(sk if not isinstance(shape, BodyShape) else shape, resolution).pose(tpose())
    y = mesh.vertices[:, 1]
    height = float(y.max() - y.min())
    weight = float(sk.template.density * sk.capsule_volumes().sum())
    rel = relative_sensor_positions(sk, tpose())
    dist = np.linalg.norm(rel, axis=-1)
    selected = tuple(float(dist[PAIR_INDEX[p]]) for p in sk.template.anthro_pairs)
    return Anthro(height, weight, selected)


@dataclass
class ShapeEstimator:
    """Affine map from the anthropometric vector to shape factors, on standardized features."""

    feature_mean: NDArray[np.float64]
    feature_scale: NDArray[np.float64]
    coef: NDArray[np.float64]
    intercept: NDArray[np.float64]
    ridge: float
    rms_residual: float = field(default=float("nan"))

    def predict_array(self, X: ArrayLike) -> NDArray[np.float64]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return ((X - self.feature_mean) / self.feature_scale) @ self.coef + self.intercept

    def to_dict(self) -> dict:
        return {
            "feature_mean": self.feature_mean.tolist(),
            "feature_scale": self.feature_scale.tolist(),
            "coef": self.coef.tolist(),
            "intercept": self.intercept.tolist(),
            "ridge": self.ridge,
            "rms_residual": self.rms_residual,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShapeEstimator":
        return cls(
            feature_mean=np.asarray(d["feature_mean"], dtype=float),
            feature_scale=np.asarray(d["feature_scale"], dtype=float),
            coef=np.asarray(d["coef"], dtype=float),
            intercept=np.asarray(d["intercept"], dtype=float),
            ridge=float(d["ridge"]),
            rms_residual=float(d.get("rms_residual", float("nan"))),
        )


def fit_ridge(X: ArrayLike, Y: ArrayLike, ridge: float = 1e-3, min_samples: int = 50) -> ShapeEstimator:
    """
    Ridge regression with an unpenalized intercept on standardized features.

    The penalty is ``ridge`` times the mean diagonal of the standardized Gram
    matrix, so uniformly duplicating the data leaves the fit unchanged.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = X.shape[0]
    if n < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {n}")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 1e-12 * np.maximum(1.0, np.abs(mean)), scale, 1.0)
    Z = (X - mean) / scale

    design = np.hstack((np.ones((n, 1)), Z))
    if np.linalg.matrix_rank(design) < 5:
        raise RankDeficient("design matrix rank below 5")

    y_mean = Y.mean(axis=0)
    gram = Z.T @ Z
    lam = ridge * np.trace(gram) / gram.shape[0]
    coef = np.linalg.solve(gram + lam * np.eye(gram.shape[0]), Z.T @ (Y - y_mean))
    est = ShapeEstimator(mean, scale, coef, y_mean, ridge)
    resid = est.predict_array(X) - Y
    est.rms_residual = float(np.sqrt(np.mean(resid**2)))
    return est


def fit_shape_estimator(
    samples: Sequence[tuple[Anthro, BodyShape]],
    ridge: float = 1e-3,
) -> ShapeEstimator:
    """Fit the anthropometrics-to-shape regressor from ``(Anthro, BodyShape)`` pairs."""
    X = np.array([a.as_array() for a, _ in samples])
    Y = np.array([s.as_array() for _, s in samples])
    return fit_ridge(X, Y, ridge=ridge)


@dataclass(frozen=True)
class ShapePrediction:
    shape: BodyShape
    clamped: bool
    raw: NDArray[np.float64]


def predict_shape(est: ShapeEstimator, a: Anthro | ArrayLike) -> ShapePrediction:
    """Apply the regressor and clamp into the admissible shape box."""
    x = a.as_array() if isinstance(a, Anthro) else np.asarray(a, dtype=float)
    raw = est.predict_array(x)[0]
    clipped = np.clip(raw, SHAPE_MIN, SHAPE_MAX)
    return ShapePrediction(BodyShape.from_array(clipped), bool(np.any(clipped != raw)), raw)


def sample_shapes(rng: np.random.Generator, n: int, spread: float = 0.06) -> list[BodyShape]:
    """Random plausible shapes around the template, truncated to [0.8, 1.2]."""
    s = np.clip(1.0 + spread * rng.standard_normal((n, 4)), 0.8, 1.2)
    return [BodyShape.from_array(row) for row in s]
