"""
Synthetic pose sequences and their ground truth.

Keyframe files are JSON objects ``{"rate": 60, "keyframes": {"<frame>": [[ax, ay, az] x 16]}}``
holding per-joint axis-angle rotations; a bare ``{"<frame>": ...}`` mapping is also read.
Frames between keyframes are slerp-interpolated per joint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.transform import Rotation, Slerp

from .body import N_JOINTS, BodyShape, Skeleton, get_skeleton, pairwise_differences, tpose
from .geometry import axis_angle_to_matrix, matrix_to_axis_angle
from .imu import synth_accelerations

KINDS = ("static-tpose", "sinusoidal-limbs", "scripted-keyframes", "file")
DEFAULT_RATE = 60.0

JOINT = {
    "pelvis": 0, "spine1": 1, "spine2": 2, "spine3": 3, "neck": 4, "head": 5,
    "l_clavicle": 6, "r_clavicle": 7, "l_shoulder": 8, "r_shoulder": 9,
    "l_elbow": 10, "r_elbow": 11, "l_hip": 12, "r_hip": 13, "l_knee": 14, "r_knee": 15,
}

# (joint, axis, offset, amplitude, frequency multiplier, phase), angles in radians;
# several rows for one joint compose in table order.
LIMB_MOTION: tuple[tuple[str, str, float, float, float, float], ...] = (
    ("pelvis", "y", 0.0, 0.35, 0.25, 0.0),
    ("spine1", "y", 0.0, 0.30, 0.40, 1.0),
    ("spine2", "x", 0.10, 0.20, 0.60, 0.3),
    ("neck", "y", 0.0, 0.40, 0.55, 2.0),
    ("neck", "x", 0.10, 0.15, 0.90, 0.5),
    # arms lowered from the T-pose and swung around the vertical, across the chest
    ("l_shoulder", "z", -1.10, 0.45, 1.00, 0.0),
    ("l_shoulder", "y", -0.70, 0.90, 0.70, 0.5),
    ("r_shoulder", "z", 1.10, 0.45, 1.00, np.pi),
    ("r_shoulder", "y", 0.70, 0.90, 0.70, np.pi + 0.5),
    ("l_elbow", "y", -1.00, 0.80, 1.30, 1.2),
    ("r_elbow", "y", 1.00, 0.80, 1.30, np.pi + 1.2),
    ("l_hip", "x", -0.25, 0.60, 1.00, 0.0),
    ("r_hip", "x", -0.25, 0.60, 1.00, np.pi),
    ("l_hip", "z", 0.10, 0.10, 0.50, 0.0),
    ("r_hip", "z", -0.10, 0.10, 0.50, np.pi),
    ("l_knee", "x", 0.60, 0.55, 1.00, -1.0),
    ("r_knee", "x", 0.60, 0.55, 1.00, np.pi - 1.0),
)


class FileFormat(ValueError):
    pass


@dataclass(frozen=True)
class TrajectorySpec:
    """
    What to generate.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    duration : float
        Seconds; ignored for keyframe input, whose span sets the length.
    rate : float
        Frames per second.
    amplitude : float
        Scale on every sinusoid amplitude (sinusoidal kind).
    frequency : float
        Base frequency in Hz; each joint runs at a fixed multiple of it.
    phase : float
        Extra phase added to every sinusoid.
    ramp : float
        Seconds over which the motion fades in from the T-pose.
    path : str, optional
        Keyframe file for ``kind="file"``.
    keyframes : dict, optional
        In-memory keyframes for ``kind="scripted-keyframes"``.
    """

    kind: str = "sinusoidal-limbs"
    duration: float = 60.0
    rate: float = DEFAULT_RATE
    amplitude: float = 1.0
    frequency: float = 0.5
    phase: float = 0.0
    ramp: float = 2.0
    path: str | None = None
    keyframes: dict | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.rate <= 0 or self.duration <= 0:
            raise ValueError("rate and duration must be positive")
        if self.ramp < 0:
            raise ValueError("ramp must be non-negative")
        if self.kind == "file" and not self.path:
            raise ValueError("file trajectories need a path")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * self.rate))


@dataclass(frozen=True)
class Trajectory:
    """Pose sequence with everything derived from it."""

    t: NDArray[np.float64]  # (T,)
    poses: NDArray[np.float64]  # (T, 16, 3, 3) local rotations
    joints: NDArray[np.float64]  # (T, 16, 3)
    global_rot: NDArray[np.float64]  # (T, 16, 3, 3)
    sensors: NDArray[np.float64]  # (T, 6, 3)
    sensor_rot: NDArray[np.float64]  # (T, 6, 3, 3)
    relative: NDArray[np.float64]  # (T, 15, 3)
    distances: NDArray[np.float64]  # (T, 15)
    accel: NDArray[np.float64]  # (T, 6, 3)
    dt: float

    def __len__(self) -> int:
        return len(self.t)


def _smoothstep(x: NDArray) -> NDArray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def sinusoidal_poses(spec: TrajectorySpec) -> NDArray[np.float64]:
    """Local joint rotations for the sinusoidal limb motion, shape (T, 16, 3, 3)."""
    T = spec.n_frames
    t = np.arange(T) * spec.dt
    env = _smoothstep(t / spec.ramp) if spec.ramp > 0 else np.ones(T)
    rots = {}
    poses = tpose((T,))
    for name, axis, offset, amp, mult, ph in LIMB_MOTION:
        w = 2.0 * np.pi * spec.frequency * mult
        angle = env * (offset + spec.amplitude * amp * np.sin(w * t + ph + spec.phase))
        R = Rotation.from_euler(axis, angle).as_matrix()
        j = JOINT[name]
        # compose in table order: earlier rows are applied last (outermost)
        rots[j] = R if j not in rots else rots[j] @ R
    for j, R in rots.items():
        poses[:, j] = R
    return poses


def _parse_keyframes(data: dict) -> tuple[NDArray[np.int64], NDArray[np.float64], float | None]:
    rate = None
    if "keyframes" in data:
        rate = data.get("rate")
        data = data["keyframes"]
    if not isinstance(data, dict) or not data:
        raise FileFormat("keyframes must be a non-empty mapping of frame index to rotations")
    frames, values = [], []
    for key, val in data.items():
        try:
            k = int(key)
        except (TypeError, ValueError) as exc:
            raise FileFormat(f"bad frame index {key!r}") from exc
        arr = np.asarray(val, dtype=float)
        if arr.shape != (N_JOINTS, 3) or not np.all(np.isfinite(arr)):
            raise FileFormat(f"frame {k}: expected {N_JOINTS} finite axis-angle triples")
        if k < 0:
            raise FileFormat("frame indices must be non-negative")
        frames.append(k)
        values.append(arr)
    order = np.argsort(frames)
    frames_arr = np.asarray(frames)[order]
    if np.any(np.diff(frames_arr) == 0):
        raise FileFormat("duplicate frame index")
    return frames_arr, np.asarray(values)[order], (None if rate is None else float(rate))


def keyframe_poses(keyframes: dict) -> NDArray[np.float64]:
    """Slerp-interpolated poses from frame 0 to the last keyframe, shape (T, 16, 3, 3)."""
    frames, rotvecs, _ = _parse_keyframes(keyframes)
    n = int(frames[-1]) + 1
    out = np.empty((n, N_JOINTS, 3, 3))
    if len(frames) == 1:
        out[:] = axis_angle_to_matrix(rotvecs[0])
        return out
    query = np.clip(np.arange(n), frames[0], frames[-1])
    for j in range(N_JOINTS):
        slerp = Slerp(frames.astype(float), Rotation.from_rotvec(rotvecs[:, j]))
        out[:, j] = slerp(query.astype(float)).as_matrix()
    # exact keyframe values, free of slerp round-off
    out[frames] = axis_angle_to_matrix(rotvecs)
    return out


def load_keyframes(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormat(f"{path}: {exc}") from exc
    _parse_keyframes(data)
    return data


def export_keyframes(path: str | Path, poses: NDArray, rate: float = DEFAULT_RATE, frames=None) -> None:
    """Write poses (T, 16, 3, 3) as a keyframe file; all frames unless `frames` is given."""
    poses = np.asarray(poses, dtype=float)
    idx = range(len(poses)) if frames is None else frames
    rv = matrix_to_axis_angle(poses)
    data = {"rate": rate, "keyframes": {str(int(k)): rv[k].tolist() for k in idx}}
    with open(path, "w") as fh:
        json.dump(data, fh)


def derive_ground_truth(poses: NDArray, shape: BodyShape | Skeleton | None, dt: float) -> Trajectory:
    sk = get_skeleton(shape)
    fk = sk.fk(poses)
    rel = pairwise_differences(fk.sensors)
    T = len(poses)
    accel = synth_accelerations(fk.sensors, dt) if T >= 3 else np.zeros_like(fk.sensors)
    return Trajectory(
        t=np.arange(T) * dt,
        poses=poses,
        joints=fk.joints,
        global_rot=fk.global_rot,
        sensors=fk.sensors,
        sensor_rot=fk.sensor_rot,
        relative=rel,
        distances=np.linalg.norm(rel, axis=-1),
        accel=accel,
        dt=dt,
    )


def generate_trajectory(spec: TrajectorySpec, shape: BodyShape | Skeleton | None = None) -> Trajectory:
    """Poses for `spec` and the sensor positions, distances and accelerations they imply."""
    dt = spec.dt
    if spec.kind == "static-tpose":
        poses = tpose((spec.n_frames,))
    elif spec.kind == "sinusoidal-limbs":
        poses = sinusoidal_poses(spec)
    else:
        data = spec.keyframes if spec.kind == "scripted-keyframes" else load_keyframes(spec.path)
        if data is None:
            raise ValueError("scripted-keyframes needs keyframes")
        _, _, rate = _parse_keyframes(data)
        if rate is not None and rate > 0:
            dt = 1.0 / rate
        poses = keyframe_poses(data)
    return derive_ground_truth(poses, shape, dt)
