"""Time the compiled and pure-Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 8:50,32:200,64:400]

Each size is ``k:d`` (basis rows : space dimension). Results are also checked
for agreement between the backends.
"""
import argparse
import time

import numpy as np

from hilbert_kle._backend import available_backends


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def make_inputs(rng, k, d, n):
    A = rng.standard_normal((d, d))
    G = A @ A.T / d + np.eye(d)
    B = rng.standard_normal((k, d))
    V = rng.standard_normal((n, d))
    w = np.full(n, 1.0 / n)
    return G, B, B @ G, V, V @ G, w


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="8:50,32:200,64:400")
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; timing the Python kernels only")
    rng = np.random.default_rng(args.seed)

    print(f"{'kernel':<18}{'k':>5}{'d':>6}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for item in args.sizes.split(","):
        k, d = (int(x) for x in item.split(":"))
        G, B, GB, V, GV, w = make_inputs(rng, k, d, args.samples)

        times, outs = {}, {}
        for name, mod in backends.items():
            outs[name] = mod.g_orthonormalize(B, GB, 1e-10)
            times[name] = best_of(lambda: mod.g_orthonormalize(B, GB, 1e-10), args.repeat)
        _report("g_orthonormalize", k, d, times)
        Q, GQ, _ = outs["python"]
        if "cython" in outs:
            assert np.allclose(outs["cython"][0], Q, atol=1e-10)

        times, vals = {}, {}
        for name, mod in backends.items():
            vals[name] = mod.residual_energy(V, GV, Q, GQ, w)
            times[name] = best_of(lambda: mod.residual_energy(V, GV, Q, GQ, w), args.repeat)
        _report("residual_energy", k, d, times)
        if "cython" in vals:
            assert abs(vals["cython"] - vals["python"]) <= 1e-10 * max(abs(vals["python"]), 1.0)


def _report(label, k, d, times):
    row = f"{label:<18}{k:>5}{d:>6}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times.values())
    if "cython" in times:
        row += f"{times['python'] / times['cython']:>9.1f}x"
    print(row)


if __name__ == "__main__":
    main()
