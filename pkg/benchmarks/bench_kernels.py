"""Compare the compiled and numpy kernels on the pointwise drift.

Usage::

    python benchmarks/bench_kernels.py --sizes 66 130 258 --m 1 2 --repeat 20
"""
import argparse
import timeit

import numpy as np

from wickcgl.kernels import available_backends


def _field(n, batch, rng):
    shape = (batch, n, n)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def bench(backends, n, batch, m, repeat, seed=0):
    rng = np.random.default_rng(seed)
    u, w = _field(n, batch, rng), _field(n, batch, rng)
    c, nu, tau1 = 0.37, 1.0 + 0.5j, 1.0
    rows = {}
    ref = None
    for name, mod in backends.items():
        out = mod.wick_drift(u, c, m, nu, tau1)
        if ref is None:
            ref = out
        err = float(np.max(np.abs(out - ref)) / np.max(np.abs(ref)))
        t_drift = min(timeit.repeat(lambda: mod.wick_drift(u, c, m, nu, tau1), number=1, repeat=repeat))
        t_incr = min(timeit.repeat(lambda: mod.wick_drift_increment(u, w, c, m, nu, tau1, 0.5),
                                   number=1, repeat=repeat))
        rows[name] = (t_drift, t_incr, err)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[66, 130, 258], help="physical grid side n")
    ap.add_argument("--batch", type=int, default=8)
    ap.add_argument("--m", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the numpy fallback is timed")
    print(f"{'n':>5} {'m':>2} {'backend':>8} {'drift ms':>10} {'incr ms':>10} {'rel err':>9} {'speedup':>8}")
    for n in args.sizes:
        for m in args.m:
            rows = bench(backends, n, args.batch, m, args.repeat)
            base = rows["python"][0]
            for name, (td, ti, err) in rows.items():
                print(f"{n:5d} {m:2d} {name:>8} {1e3 * td:10.3f} {1e3 * ti:10.3f} {err:9.1e} {base / td:8.2f}")


if __name__ == "__main__":
    main()
