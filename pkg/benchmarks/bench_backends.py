"""Compare the numba and pure-numpy kernel backends.

Times the three hot paths (coverage integral, log-Laplace evaluation and the
Monte Carlo per-drop reduction) on both backends, checks that they agree, and
prints the speedup.  The first numba call is excluded from timing (JIT warm-up).

    python3 benchmarks/bench_backends.py [--repeat 3] [--drops 200000]
"""

import argparse
import time

import numpy as np

from mmshare import _accel
from mmshare._plan import build_plan
from mmshare.coverage import OUTER_SPEC
from mmshare.interference import INNER_SPEC
from mmshare.model import Link, make_system_preset


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(n_drops, seed=0):
    sc = make_system_preset("sys3")
    plan = build_plan(sc, 0, 0, Link.LOS, None)
    T = 10.0 ** (np.arange(-30.0, 51.0, 1.0) / 10.0)
    xs = np.geomspace(1.0, 2000.0, 4000)
    ts = 1e8 * xs ** 2

    rng = np.random.default_rng(seed)
    per_drop = 40
    drop = np.repeat(np.arange(n_drops), per_drop)
    avg = rng.exponential(size=drop.size)
    rx = avg * rng.exponential(size=drop.size)
    acc = rng.random(drop.size) < 0.5
    grp = rng.integers(0, 2, size=drop.size)
    on = rng.random(drop.size) < 0.8

    return {
        "coverage (81 thresholds)": lambda k: k.coverage(plan, T, INNER_SPEC, OUTER_SPEC)[0],
        "log_laplace (4000 points)": lambda k: k.log_laplace(plan, ts, xs, INNER_SPEC)[0],
        f"mc_serve_reduce ({n_drops} drops)": lambda k: k.mc_serve_reduce(drop, n_drops, avg, rx, acc, grp, on)[1],
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--drops", type=int, default=200_000)
    args = ap.parse_args(argv)

    if "numba" not in _accel.available_backends():
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'kernel':<34}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max rel diff':>15}")
    for name, run in cases(args.drops).items():
        res = {}
        for backend in ("numba", "numpy"):
            with _accel.use_backend(backend):
                k = _accel.kernels()
                if backend == "numba":
                    run(k)
                res[backend] = best_of(lambda: run(k), args.repeat)
        (t_nb, a), (t_np, b) = res["numba"], res["numpy"]
        scale = np.maximum(np.abs(b), 1e-300)
        diff = float(np.max(np.abs(a - b) / scale))
        print(f"{name:<34}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x{diff:>15.2e}")


if __name__ == "__main__":
    main()
