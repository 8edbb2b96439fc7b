"""Compare the compiled kernel against the pure Python fallback.

Times the three hot paths: batch expression evaluation, single
Runge-Kutta stages, and full trajectory tracing.  Run from the
repository root:

    python3 benchmarks/bench_backends.py [--scene scenes/annulus.json]
"""

import argparse
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import travflow
from travflow import Scene, boundary_seeds, trace_many
from travflow import _backend


def time_call(function, repeats):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        function()
        best = min(best, time.perf_counter() - started)
    return best


def bench_eval(scene, points, repeats):
    kernel = _backend.kernel
    return time_call(lambda: kernel.eval_program_batch(scene.z_program, points),
                     repeats)


def bench_rk(scene, repeats):
    kernel = _backend.kernel
    dim = scene.dimension
    y = np.full(dim, 0.25)
    k = np.zeros((7, dim))
    y_out = np.zeros(dim)
    err = np.zeros(dim)

    def run():
        for _ in range(2000):
            kernel.rk_step(scene.v_program, y, 1e-3, 1.0, k, y_out, err)

    return time_call(run, repeats)


def bench_trace(scene, seeds, repeats):
    return time_call(lambda: trace_many(scene, seeds, want_polyline=False),
                     repeats)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scene", default="scenes/annulus.json")
    parser.add_argument("--points", type=int, default=20000,
                        help="batch size for expression evaluation")
    parser.add_argument("--seeds", type=int, default=40,
                        help="boundary seeds per curve for tracing")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)

    scene = Scene.load(args.scene)
    rng = np.random.default_rng(0)
    points = rng.uniform(scene.bbox_lo, scene.bbox_hi,
                         size=(args.points, scene.dimension))
    seeds = boundary_seeds(scene, args.seeds, seed=0)

    rows = []
    for backend in ("compiled", "python"):
        try:
            travflow.set_backend(backend)
        except travflow.TravflowError as exc:
            print(f"{backend}: unavailable ({exc})")
            continue
        rows.append((backend,
                     bench_eval(scene, points, args.repeats),
                     bench_rk(scene, args.repeats),
                     bench_trace(scene, seeds, args.repeats)))
    travflow.set_backend(None)

    print(f"scene: {args.scene}  ({args.points} points, "
          f"{len(seeds)} traces, best of {args.repeats})")
    print(f"{'backend':<10} {'eval batch':>12} {'rk 2000x':>12} {'trace':>12}")
    for name, t_eval, t_rk, t_trace in rows:
        print(f"{name:<10} {t_eval * 1e3:>10.2f}ms {t_rk * 1e3:>10.2f}ms "
              f"{t_trace * 1e3:>10.2f}ms")
    if len(rows) == 2:
        print(f"{'speedup':<10} "
              f"{rows[1][1] / rows[0][1]:>11.1f}x "
              f"{rows[1][2] / rows[0][2]:>11.1f}x "
              f"{rows[1][3] / rows[0][3]:>11.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
