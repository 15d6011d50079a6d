"""
End-to-end runs: simulate a trajectory, corrupt it, fuse it under each mode and score it.

Config files are JSON; every key is optional::

    {
      "seed": 0,
      "trajectory": {"kind": "sinusoidal-limbs", "duration": 60, "rate": 60,
                     "amplitude": 1.0, "frequency": 0.5, "phase": 0.0, "ramp": 2.0, "path": null},
      "shape": [1, 1, 1, 1],                 # or {"height": .., "arm": .., "leg": .., "width": ..}
      "anthro": {"height": 1.7, "weight": 70, "distances": [...]},   # used instead of shape
      "modes": ["none", "imu+uwb", "imu+pose", "imu+uwb+pose"],
      "imu_noise": {"sigma_white": 0.04, "sigma_bias_walk": 0.002, "initial_bias_std": 0.05,
                    "initial_bias": null},
      "error_model": {"tau_upper": 0.9, "tau_lower": 0.3, "sigma_min": 0.03, "sigma_max": 0.25,
                      "sigma_kinematics": 0.1},
      "pose": {"noise_std": 0.05, "sigma_factor": 1.0, "outlier_rate": 0.0, "outlier_scale": 10,
               "honest": true},
      "ukf": {"alpha": 0.2, "beta": 1.0, "kappa": -105},
      "pose_ut": {"alpha": 0.09, "beta": 1.0, "kappa": -93},
      "r3_scale": 10,
      "los_source": "truth",                 # or "pose": LOS from the estimated pose
      "save_states": false,
      "out_dir": null
    }

Outputs written to ``out_dir``:

``summary.json``
    configuration echo and per-mode scalar metrics.
``series.csv``
    ``frame, t`` then ``distance_mae_<mode>`` and ``accel_mae_<mode>`` per mode.
``cdf.csv``
    ``mode, error, cdf`` rows of the distance-error CDF.
``states_<mode>.csv``
    with ``save_states``: ``frame``, the 108 state values and the 15 filtered distances.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .body import N_JOINTS, N_PAIRS, PAIRS, Anthro, BodyShape, get_rig, get_skeleton
from .fusion import (
    POSE_UT_PARAMS,
    R3_SCALE,
    UKF_PARAMS,
    FusionConfig,
    FusionSession,
    PoseOracle,
    PoseSample,
    UtParams,
    pose_to_relative_positions,
)
from .geometry import rot6d_to_rotation
from .imu import ImuNoiseSpec, corrupt
from .los import DistErrorModel, corrupt_distance, pair_los, raw_range_sigma, sigma_of_los_array
from .metrics import MetricsReport, compute_metrics
from .trajectory import Trajectory, TrajectorySpec, generate_trajectory

logger = logging.getLogger(__name__)

MODES = ("none", "imu+uwb", "imu+pose", "imu+uwb+pose")
LOS_SOURCES = ("truth", "pose")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PoseNoise:
    noise_std: float = 0.05
    sigma_factor: float = 1.0
    outlier_rate: float = 0.0
    outlier_scale: float = 10.0
    honest: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    shape: BodyShape = field(default_factory=BodyShape)
    anthro: Anthro | None = None
    modes: tuple[str, ...] = MODES
    imu_noise: ImuNoiseSpec = field(default_factory=ImuNoiseSpec)
    error_model: DistErrorModel = field(default_factory=DistErrorModel)
    pose: PoseNoise = field(default_factory=PoseNoise)
    ukf: UtParams = UKF_PARAMS
    pose_ut: UtParams = POSE_UT_PARAMS
    r3_scale: float = R3_SCALE
    los_source: str = "truth"
    seed: int = 0
    save_states: bool = False
    out_dir: str | None = None

    def __post_init__(self) -> None:
        bad = [m for m in self.modes if m not in MODES]
        if bad or not self.modes:
            raise ConfigError(f"modes must be drawn from {MODES}, got {list(self.modes)}")
        if self.los_source not in LOS_SOURCES:
            raise ConfigError(f"los_source must be one of {LOS_SOURCES}")

    def to_dict(self) -> dict:
        d = {
            "seed": self.seed,
            "trajectory": {k: v for k, v in asdict(self.trajectory).items() if k != "keyframes"},
            "shape": self.shape.as_array().tolist(),
            "modes": list(self.modes),
            "imu_noise": {k: v for k, v in asdict(self.imu_noise).items() if k != "seed"},
            "error_model": asdict(self.error_model),
            "pose": asdict(self.pose),
            "ukf": asdict(self.ukf),
            "pose_ut": asdict(self.pose_ut),
            "r3_scale": self.r3_scale,
            "los_source": self.los_source,
            "save_states": self.save_states,
            "out_dir": self.out_dir,
        }
        if self.anthro is not None:
            d["anthro"] = {"height": self.anthro.height, "weight": self.anthro.weight,
                           "distances": list(map(float, self.anthro.distances))}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            kw: dict = {}
            if "trajectory" in d:
                kw["trajectory"] = TrajectorySpec(**d["trajectory"])
            if "shape" in d:
                s = d["shape"]
                kw["shape"] = BodyShape(**s) if isinstance(s, dict) else BodyShape.from_array(s)
            if d.get("anthro") is not None:
                a = d["anthro"]
                kw["anthro"] = Anthro(a["height"], a["weight"], tuple(a["distances"]))
            if "modes" in d:
                kw["modes"] = tuple(d["modes"])
            if "imu_noise" in d:
                imu = dict(d["imu_noise"])
                if imu.get("initial_bias") is not None:
                    imu["initial_bias"] = tuple(map(tuple, np.atleast_2d(imu["initial_bias"]).tolist()))
                kw["imu_noise"] = ImuNoiseSpec(**imu)
            if "error_model" in d:
                kw["error_model"] = DistErrorModel(**d["error_model"])
            if "pose" in d:
                kw["pose"] = PoseNoise(**d["pose"])
            if "ukf" in d:
                kw["ukf"] = UtParams(**d["ukf"])
            if "pose_ut" in d:
                kw["pose_ut"] = UtParams(**d["pose_ut"])
            for key in ("r3_scale", "los_source", "seed", "save_states", "out_dir"):
                if key in d:
                    kw[key] = d[key]
            return cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def fusion_config(self, mode: str) -> FusionConfig:
        return FusionConfig.for_mode(
            mode,
            dt=self.trajectory.dt,
            imu_noise=self.imu_noise,
            ukf_params=self.ukf,
            pose_params=self.pose_ut,
            error_model=self.error_model,
            r3_scale=self.r3_scale,
        )


def resolve_shape(cfg: ExperimentConfig) -> BodyShape:
    """Configured shape, or the regressor's estimate from anthropometry."""
    if cfg.anthro is None:
        return cfg.shape
    from .body import fit_shape_estimator, measure_anthro, predict_shape, sample_shapes

    shapes = sample_shapes(np.random.default_rng(cfg.seed), 200)
    est = fit_shape_estimator([(measure_anthro(s), s) for s in shapes])
    return predict_shape(est, cfg.anthro).shape


@dataclass
class Simulation:
    """Ground truth and every corrupted input, shared by all fusion modes of one run."""

    shape: BodyShape
    truth: Trajectory
    accel: NDArray  # (T, 6, 3) measured
    bias: NDArray  # (T, 6, 3) applied bias
    los: NDArray  # (T, 15) true LOS fractions
    ranges: NDArray  # (T, 15) raw UWB ranges
    raw_sigma: NDArray  # (T, 15) noise used to draw them
    sigma_d: NDArray  # (T, 15) filter range sigma
    substitute: NDArray  # (T, 15)
    poses: list[PoseSample]
    pose_estimate: NDArray  # (T, 16, 3, 3) decoded pose means
    p_hat: NDArray | None = None  # (T, 45)
    R3: NDArray | None = None  # (T, 45, 45)

    def pose_measurements(self, params: UtParams = POSE_UT_PARAMS, r3_scale: float = R3_SCALE) -> None:
        if self.p_hat is not None:
            return
        sk = get_skeleton(self.shape)
        T = len(self.poses)
        self.p_hat = np.empty((T, 3 * N_PAIRS))
        self.R3 = np.empty((T, 3 * N_PAIRS, 3 * N_PAIRS))
        for k, sample in enumerate(self.poses):
            self.p_hat[k], self.R3[k] = pose_to_relative_positions(sample, sk, params, r3_scale)


def _seeds(seed: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(3)]


def simulate(cfg: ExperimentConfig) -> Simulation:
    shape = resolve_shape(cfg)
    truth = generate_trajectory(cfg.trajectory, shape)
    imu_seed, uwb_seed, pose_seed = _seeds(cfg.seed)

    accel, bias = corrupt(truth.accel, cfg.imu_noise.with_seed(imu_seed))

    rig = get_rig(shape)
    los = np.array([pair_los(rig.pose(p), s) for p, s in zip(truth.poses, truth.sensors)])
    raw_sigma = raw_range_sigma(cfg.error_model, los)
    ranges = corrupt_distance(truth.distances, raw_sigma, np.random.default_rng(uwb_seed))

    pn = cfg.pose
    oracle = PoseOracle(pn.noise_std, pn.sigma_factor, pn.outlier_rate, pn.outlier_scale, pn.honest, seed=pose_seed)
    poses = [oracle(p) for p in truth.poses]
    pose_est = rot6d_to_rotation(np.stack([s.theta6d for s in poses]).reshape(-1, N_JOINTS, 6))

    filter_los = los
    if cfg.los_source == "pose":
        fk = get_skeleton(shape).fk(pose_est)
        filter_los = np.array([pair_los(rig.pose(p), s) for p, s in zip(pose_est, fk.sensors)])
    sigma_d, substitute = sigma_of_los_array(cfg.error_model, filter_los)

    return Simulation(shape, truth, accel, bias, los, ranges, raw_sigma, sigma_d, substitute, poses, pose_est)


@dataclass
class FusionRun:
    distances: NDArray  # (T, 15)
    accelerations: NDArray  # (T, 6, 3)
    states: NDArray | None  # (T, 108)
    nis: NDArray  # (T,)
    nis_dim: NDArray  # (T,)


def run_fusion(sim: Simulation, cfg: ExperimentConfig, mode: str) -> FusionRun:
    """Run one mode over a simulation; ``"none"`` passes raw measurements through."""
    T = len(sim.truth)
    if mode == "none":
        return FusionRun(sim.ranges.copy(), sim.accel.copy(), None, np.zeros(T), np.zeros(T, dtype=int))
    fcfg = cfg.fusion_config(mode)
    use_pose_meas = fcfg.use_pose
    if use_pose_meas:
        sim.pose_measurements(cfg.pose_ut, cfg.r3_scale)
    session = FusionSession(sim.shape, fcfg)
    dist = np.empty((T, N_PAIRS))
    acc = np.empty((T, 6, 3))
    states = np.empty((T, session.x.size))
    nis = np.empty(T)
    dim = np.empty(T, dtype=int)
    for k in range(T):
        pm = (sim.p_hat[k], sim.R3[k]) if use_pose_meas else None
        res = session.step(sim.accel[k], sim.ranges[k], sim.sigma_d[k], sim.substitute[k], pose_measurement=pm)
        dist[k] = res.distances
        acc[k] = res.accelerations
        states[k] = res.x
        nis[k] = res.nis
        dim[k] = res.nis_dim
    return FusionRun(dist, acc, states, nis, dim)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reports: dict[str, MetricsReport]
    runs: dict[str, FusionRun]
    simulation: Simulation

    def summary(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "modes": {m: r.summary() for m, r in self.reports.items()},
        }


def _fmt(x: float) -> str:
    return repr(float(x))


def write_state_csv(path: str | Path, states: NDArray, distances: NDArray) -> None:
    """``frame``, ``x0..x107`` and ``d_<x>-<y>`` per frame."""
    n_state = states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame"] + [f"x{i}" for i in range(n_state)] + [f"d_{x}-{y}" for x, y in PAIRS])
        for k in range(len(states)):
            w.writerow([k] + [_fmt(v) for v in states[k]] + [_fmt(v) for v in distances[k]])


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.json", "w") as fh:
        json.dump(result.summary(), fh, indent=2, sort_keys=True)
    t = result.simulation.truth.t
    modes = list(result.reports)
    with open(out / "series.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "t"] + [f"distance_mae_{m}" for m in modes] + [f"accel_mae_{m}" for m in modes])
        for k in range(len(t)):
            row = [k, _fmt(t[k])]
            row += [_fmt(result.reports[m].distance_series[k]) for m in modes]
            row += [_fmt(result.reports[m].accel_series[k]) for m in modes]
            w.writerow(row)
    with open(out / "cdf.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "error", "cdf"])
        for m in modes:
            r = result.reports[m]
            for x, y in zip(r.cdf_x, r.cdf_y):
                w.writerow([m, _fmt(x), _fmt(y)])
    if result.config.save_states:
        for m, run in result.runs.items():
            if run.states is not None:
                write_state_csv(out / f"states_{m.replace('+', '_')}.csv", run.states, run.distances)


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> ExperimentResult:
    """Simulate once, fuse under every configured mode and score; writes files if an output dir is set."""
    sim = simulate(cfg)
    truth = sim.truth
    reports, runs = {}, {}
    for mode in cfg.modes:
        run = run_fusion(sim, cfg, mode)
        runs[mode] = run
        reports[mode] = compute_metrics(
            truth.distances, run.distances, truth.accel, run.accelerations, truth.poses, sim.pose_estimate, sim.shape
        )
        logger.info("%s: distance MAE %.4f m", mode, reports[mode].distance_mae)
    result = ExperimentResult(cfg, reports, runs, sim)
    target = out_dir if out_dir is not None else cfg.out_dir
    if target is not None:
        write_outputs(result, target)
    return result


# ------------------------------------------------------------------ measurement files


def write_measurements(path: str | Path, sim: Simulation) -> None:
    """One JSON object per frame: ``t, accels, ranges, sigma_d, substitute, pose_mean, pose_sigma``."""
    with open(path, "w") as fh:
        for k in range(len(sim.truth)):
            rec = {
                "t": float(sim.truth.t[k]),
                "accels": sim.accel[k].tolist(),
                "ranges": sim.ranges[k].tolist(),
                "sigma_d": sim.sigma_d[k].tolist(),
                "substitute": [bool(s) for s in sim.substitute[k]],
                "pose_mean": sim.poses[k].theta6d.tolist(),
                "pose_sigma": sim.poses[k].sigma.tolist(),
            }
            fh.write(json.dumps(rec) + "\n")


@dataclass(frozen=True)
class MeasurementFrame:
    t: float
    accels: NDArray
    ranges: NDArray
    sigma_d: NDArray
    substitute: NDArray
    pose: PoseSample | None


def read_measurements(path: str | Path) -> list[MeasurementFrame]:
    frames = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                pose = None
                if rec.get("pose_mean") is not None:
                    pose = PoseSample(np.asarray(rec["pose_mean"], float), np.asarray(rec["pose_sigma"], float))
                fr = MeasurementFrame(
                    t=float(rec["t"]),
                    accels=np.asarray(rec["accels"], float).reshape(6, 3),
                    ranges=np.asarray(rec["ranges"], float).reshape(N_PAIRS),
                    sigma_d=np.asarray(rec["sigma_d"], float).reshape(N_PAIRS),
                    substitute=np.asarray(rec["substitute"], bool).reshape(N_PAIRS),
                    pose=pose,
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad measurement record ({exc})") from exc
            frames.append(fr)
    return frames


def fuse_measurements(
    frames: list[MeasurementFrame], shape: BodyShape, config: FusionConfig
) -> tuple[NDArray, NDArray]:
    """Replay measurement frames through a session; returns states (T, 108) and distances (T, 15)."""
    session = FusionSession(shape, config)
    states, dists = [], []
    for fr in frames:
        res = session.step(fr.accels, fr.ranges, fr.sigma_d, fr.substitute, pose=fr.pose, t=fr.t)
        states.append(res.x)
        dists.append(res.distances)
    return np.array(states), np.array(dists)
