"""
Time the LOS kernels: compiled extension against the NumPy fallback.

Run with ``python3 benchmarks/bench_los.py [--frames N] [--repeat R]``.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from bodyfuse import kernels
from bodyfuse.body import PAIRS, BodyShape, get_rig
from bodyfuse.los import los_batch
from bodyfuse.trajectory import TrajectorySpec, generate_trajectory


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--frames", type=int, default=120)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    shape = BodyShape()
    tr = generate_trajectory(TrajectorySpec(duration=args.frames / 60.0), shape)
    rig = get_rig(shape)
    meshes = [rig.pose(p) for p in tr.poses]

    ix = [x for x, _ in PAIRS]
    iy = [y for _, y in PAIRS]
    print(f"{len(meshes)} frames x {len(PAIRS)} pairs, {len(meshes[0].faces)} triangles per mesh")

    backends = ["python"] + (["compiled"] if kernels.COMPILED_BACKEND is not None else [])
    timings = {}
    results = {}
    for name in backends:
        def run():
            return [los_batch(m, s[ix], s[iy], backend=name)[0] for m, s in zip(meshes, tr.sensors)]

        results[name] = np.array(run())
        best = min(timeit.repeat(run, number=1, repeat=args.repeat))
        timings[name] = best
        print(f"{name:>9}: {1e3 * best / len(meshes):8.3f} ms per frame")
    if len(backends) == 2:
        diff = np.abs(results["python"] - results["compiled"]).max()
        print(f"  speedup: {timings['python'] / timings['compiled']:.1f}x, max LOS difference {diff:.1e}")
    else:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
