"""
Command line entry point.

Exit codes: 0 on success, 2 for usage or configuration errors, 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import uwb
from .body import (
    PAIRS,
    Anthro,
    BodyShape,
    ShapeEstimator,
    fit_shape_estimator,
    measure_anthro,
    predict_shape,
    sample_shapes,
)
from .experiment import (
    MODES,
    ConfigError,
    ExperimentConfig,
    fuse_measurements,
    read_measurements,
    resolve_shape,
    run_experiment,
    simulate,
    write_measurements,
    write_state_csv,
)
from .fusion import FusionConfig
from .los import write_los_profile

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

logger = logging.getLogger("bodyfuse")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "mode", None):
        changes["modes"] = (args.mode,)
    if args.out_dir is not None:
        changes["out_dir"] = args.out_dir
    return replace(cfg, **changes) if changes else cfg


def _out_dir(args, cfg: ExperimentConfig | None = None) -> Path:
    out = Path(args.out_dir or (cfg.out_dir if cfg and cfg.out_dir else "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_table(path: Path, header: list[str], rows, fmt: str) -> Path:
    if fmt == "json":
        path = path.with_suffix(".json")
        with open(path, "w") as fh:
            json.dump([dict(zip(header, r)) for r in rows], fh)
    else:
        path = path.with_suffix(".csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    return path


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    sim = simulate(cfg)
    out = _out_dir(args, cfg)
    write_measurements(out / "measurements.jsonl", sim)
    header = ["frame", "t"] + [f"d_{x}-{y}" for x, y in PAIRS]
    rows = [[k, float(sim.truth.t[k])] + sim.truth.distances[k].tolist() for k in range(len(sim.truth))]
    path = _write_table(out / "truth", header, rows, args.format)
    print(f"wrote {out / 'measurements.jsonl'} and {path}")
    return EXIT_OK


def cmd_fuse(args) -> int:
    cfg = _load_config(args)
    mode = args.mode or "imu+uwb+pose"
    if mode == "none":
        raise ConfigError("fuse needs a fusion mode other than 'none'")
    frames = read_measurements(args.measurements)
    if len(frames) == 0:
        raise ConfigError("no measurement frames")
    fcfg = cfg.fusion_config(mode)
    if len(frames) > 1:
        fcfg = replace(fcfg, dt=frames[1].t - frames[0].t)
    states, dists = fuse_measurements(frames, resolve_shape(cfg), fcfg)
    out = _out_dir(args, cfg)
    if args.format == "json":
        path = out / "states.json"
        with open(path, "w") as fh:
            json.dump({"states": states.tolist(), "distances": dists.tolist()}, fh)
    else:
        path = out / "states.csv"
        write_state_csv(path, states, dists)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    result = run_experiment(cfg, out)
    summary = result.summary()["modes"]
    if args.format == "json":
        print(json.dumps(summary, indent=2, sort_keys=True))
    else:
        print("mode,distance_mae,distance_std,accel_mae")
        for m, s in summary.items():
            print(f"{m},{s['distance_mae']:.5f},{s['distance_std']:.5f},{s['accel_mae']:.5f}")
    return EXIT_OK


def cmd_shapefit(args) -> int:
    out = _out_dir(args)
    if args.apply:
        with open(args.estimator) as fh:
            est = ShapeEstimator.from_dict(json.load(fh))
        with open(args.apply) as fh:
            a = json.load(fh)
        try:
            anthro = Anthro(a["height"], a["weight"], tuple(a["distances"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad anthropometry file: {exc}") from exc
        pred = predict_shape(est, anthro)
        result = {"shape": pred.shape.as_array().tolist(), "clamped": pred.clamped}
        print(json.dumps(result))
        return EXIT_OK

    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    shapes = sample_shapes(rng, args.n)
    samples = [(measure_anthro(s), s) for s in shapes]
    n_train = int(round(0.8 * len(samples)))
    est = fit_shape_estimator(samples[:n_train])
    test = samples[n_train:]
    pred = [predict_shape(est, a).shape for a, _ in test]
    err = np.array([p.as_array() - s.as_array() for p, (_, s) in zip(pred, test)])
    rec = [measure_anthro(p) for p in pred]
    h_err = np.array([abs(r.height - a.height) for r, (a, _) in zip(rec, test)])
    w_err = np.array([abs(r.weight - a.weight) for r, (a, _) in zip(rec, test)])
    report = {
        "n_train": n_train,
        "n_test": len(test),
        "shape_rmse": float(np.sqrt(np.mean(err**2))),
        "height_mae_m": float(h_err.mean()),
        "weight_mae_kg": float(w_err.mean()),
    }
    with open(out / "estimator.json", "w") as fh:
        json.dump(est.to_dict(), fh, indent=2)
    with open(out / "shapefit_report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    print(json.dumps(report))
    return EXIT_OK


def cmd_los_profile(args) -> int:
    cfg = _load_config(args)
    sim = simulate(cfg)
    out = _out_dir(args, cfg)
    if args.format == "json":
        path = out / "los_profile.json"
        with open(path, "w") as fh:
            json.dump({"pairs": [f"{x}-{y}" for x, y in PAIRS], "l": sim.los.tolist(),
                       "sigma_d": sim.sigma_d.tolist()}, fh)
    else:
        path = out / "los_profile.csv"
        write_los_profile(path, sim.los, sim.sigma_d)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_ranging(args) -> int:
    if args.trials < 1 or args.distance < 0 or args.reply_delay <= 0:
        raise ConfigError("need trials >= 1, distance >= 0 and a positive reply delay")
    seed = 0 if args.seed is None else args.seed
    clocks = uwb.ClockModel.uniform(2, ppm=(0.0, args.drift_ppm), jitter=args.jitter_ps * 1e-12, seed=seed)
    dur = uwb.simulate_durations([args.distance], clocks, args.reply_delay, trials=args.trials)[:, 0]
    ads = uwb.SPEED_OF_LIGHT * uwb.ads_twr_tof(dur[:, 0], dur[:, 1], dur[:, 2], dur[:, 3])
    single = uwb.SPEED_OF_LIGHT * 0.5 * (dur[:, 0] - dur[:, 1])
    report = {
        "distance_m": args.distance,
        "drift_ppm": args.drift_ppm,
        "reply_delay_s": args.reply_delay,
        "jitter_ps": args.jitter_ps,
        "trials": args.trials,
        "ads_twr_mean_abs_error_m": float(np.mean(np.abs(ads - args.distance))),
        "single_sided_mean_abs_error_m": float(np.mean(np.abs(single - args.distance))),
    }
    if args.out_dir is not None:
        out = _out_dir(args)
        transcripts = [
            uwb.RangingTranscript((0, 1), *map(float, row), true_distance=args.distance) for row in dur
        ]
        uwb.dump_transcripts(transcripts, out / "transcripts.jsonl")
    if args.format == "csv":
        print(",".join(report))
        print(",".join(str(v) for v in report.values()))
    else:
        print(json.dumps(report, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out-dir", default=None)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="bodyfuse", description="IMU + UWB + pose fusion toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="simulate a trajectory and its measurements")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("fuse", parents=[common], help="run a fusion session over a measurement file")
    s.add_argument("measurements", help="JSON-lines measurement file")
    s.add_argument("--mode", choices=MODES[1:], default=None)
    s.set_defaults(func=cmd_fuse)

    s = sub.add_parser("experiment", parents=[common], help="full simulate, fuse and score run")
    s.add_argument("--mode", choices=MODES, default=None, help="run a single mode")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("shapefit", parents=[common], help="train or apply the shape regressor")
    s.add_argument("--n", type=int, default=500, help="synthetic bodies (80%% train)")
    s.add_argument("--apply", default=None, help="anthropometry JSON to predict a shape for")
    s.add_argument("--estimator", default="estimator.json", help="estimator JSON used with --apply")
    s.set_defaults(func=cmd_shapefit)

    s = sub.add_parser("los-profile", parents=[common], help="per-pair LOS fraction and range sigma")
    s.set_defaults(func=cmd_los_profile)

    s = sub.add_parser("ranging", parents=[common], help="simulate double-sided two-way ranging")
    s.add_argument("--drift-ppm", type=float, default=40.0, help="responder clock offset")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--distance", type=float, default=5.0)
    s.add_argument("--reply-delay", type=float, default=uwb.DEFAULT_REPLY_DELAY)
    s.add_argument("--jitter-ps", type=float, default=0.0, help="timestamp jitter std in picoseconds")
    s.set_defaults(func=cmd_ranging)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"bodyfuse: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - surface anything else as a runtime failure
        logger.debug("runtime failure", exc_info=True)
        print(f"bodyfuse: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
