"""Compare the numba and pure-numpy path kernels on every simulation mode.

Each case runs the same killed-path batch on both backends, checks that the
exit steps agree exactly and reports wall times. The first numba call of a
case compiles (or loads from cache) and is timed separately.

    python benchmarks/bench_backends.py --paths 20000 --repeat 3
"""
from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from levykern import ProcessSpec, annulus, ball, intervals, logstable, mixed, relativistic, stable
from levykern.simulate import PathConfig, run_paths
from levykern.simulate.engine import _process_plan, pick_backend

# the last column is the small-jump cutoff; spatial jumps above it arrive at rate ~eps^-alpha,
# so the perturbed case uses a coarser cutoff and leaves the rest to the Gaussian surrogate
CASES = [
    ("cauchy d=1", ProcessSpec(1, stable(1.0)), intervals([(-1, 1)]), 0.0, 1e-4),
    ("stable 1.5 d=1", ProcessSpec(1, stable(1.5)), intervals([(-1, 1)]), 0.0, 1e-4),
    ("stable 0.8 d=2", ProcessSpec(2, stable(0.8)), ball(1.0, d=2), [0.0, 0.0], 1e-4),
    ("mixed d=1", ProcessSpec(1, mixed(1.5, 0.5)), intervals([(-1, 1)]), 0.0, 1e-4),
    ("relativistic d=1", ProcessSpec(1, relativistic(1.0, 1.0)), intervals([(-1, 1)]), 0.0, 1e-4),
    ("logstable d=2", ProcessSpec(2, logstable(1.0, 0.25)), annulus(1.0, 2.0), [1.5, 0.0], 1e-4),
    ("perturbed d=2", ProcessSpec(2, stable(1.5), "perturbed"), ball(1.0, d=2), [0.0, 0.0],
     1e-2),
]


def timed(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(paths, h, horizon, repeat, seed):
    rows = []
    for name, p, D, x, eps in CASES:
        cfg = PathConfig(h=h, horizon=horizon, n_paths=paths, base_seed=seed, eps=eps)
        mode = _process_plan(p, cfg)[0]
        t0 = time.perf_counter()
        run_paths(p, D, x, cfg.replace(n_paths=8), use_numba=True)
        warm = time.perf_counter() - t0
        t_nb, a = timed(lambda: run_paths(p, D, x, cfg, use_numba=True), repeat)
        t_np, b = timed(lambda: run_paths(p, D, x, cfg, use_numba=False), repeat)
        same = bool(np.array_equal(a.exit_step, b.exit_step))
        auto = "numba" if pick_backend(mode, p.d) else "numpy"
        rows.append(dict(case=name, mode=mode, eps=eps, numba_s=t_nb, numpy_s=t_np,
                         speedup=t_np / t_nb, first_call_s=warm, auto=auto, identical=same))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=20000)
    ap.add_argument("--h", type=float, default=1e-3)
    ap.add_argument("--horizon", type=float, default=0.2)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--csv", help="also write the table here")
    args = ap.parse_args(argv)

    rows = bench(args.paths, args.h, args.horizon, args.repeat, args.seed)
    head = f"{'case':<18} {'mode':>4} {'eps':>6} {'numba s':>9} {'numpy s':>9} {'numpy/numba':>11} " \
           f"{'1st call s':>10} {'auto':>6} {'identical':>9}"
    print(head)
    print("-" * len(head))
    for r in rows:
        print(f"{r['case']:<18} {r['mode']:>4} {r['eps']:>6.0e} {r['numba_s']:>9.3f} {r['numpy_s']:>9.3f} "
              f"{r['speedup']:>11.2f} {r['first_call_s']:>10.2f} {r['auto']:>6} "
              f"{str(r['identical']):>9}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0 if all(r["identical"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
