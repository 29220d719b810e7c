"""Compare the compiled kernels against the pure-Python fallback.

Runs the three hot workloads on both backends, checks the outputs are
bit-identical, and reports wall times.

    python benchmarks/bench_backends.py [--scale N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lqlab import _pure

try:
    from lqlab import _core
except ImportError:
    _core = None


def time_call(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_vi(impl, n_nodes, sweeps):
    x = np.linspace(-2.0, 2.0, n_nodes)
    dx = x[1] - x[0]
    rate = 1.0 + 5.0 / dx
    r_coef = (rate - 1.0) / rate

    def run():
        v = np.zeros(n_nodes)
        res = np.empty(sweeps)
        vmax = np.empty(sweeps)
        impl.vi_run(v, x, dx, 0.5, 1.0, 1.0, 1.0, r_coef, 1.0 / rate,
                    -4.0, 4.0, 0, 0.0, 1e12, sweeps, res, vmax)
        return v

    return time_call(run)


def bench_qlearn(impl, episodes):
    n_s, n_a = 161, 41
    xs = np.linspace(-2.0, 2.0, n_s)
    us = np.linspace(-4.0, 4.0, n_a)
    x, u = np.meshgrid(xs, us, indexing="ij")
    raw = x + 0.1 * (0.5 * x + u)
    t = (np.minimum(np.maximum(raw, -2.0), 2.0) + 2.0) / (xs[1] - xs[0])
    idx = np.floor(t + 0.5)
    next_idx = np.clip(np.where(idx - t == 0.5, idx - 1, idx), 0, n_s - 1).astype(np.int64)
    cost = 0.1 * (x * x + u * u)
    u_abs = np.abs(us)

    def run():
        q = np.zeros((n_s, n_a))
        visits = np.zeros((n_s, n_a), dtype=np.int64)
        state = 0
        for _ in range(episodes):
            state, _, trip = impl.q_episode(
                q, visits, next_idx, cost, u_abs, 0.9048374180359595,
                0, 0.8, 0.1, 50, 1e6, state,
            )
            if trip:
                break
        return q

    return time_call(run)


def bench_fa(impl, steps):
    def run():
        w = np.zeros(6)
        impl.fa_run(w, steps, 0.1, 0.5, 1.0, 1.0, 1.0, 0.9048374180359595,
                    -2.0, 2.0, -4.0, 4.0, 1, 0.5, 1e6, 0)
        return w

    return time_call(run)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scale", type=int, default=1,
                        help="multiply workload sizes by this factor")
    args = parser.parse_args()
    k = args.scale

    workloads = [
        ("value-iteration sweeps (401 nodes x %d)" % (2000 * k),
         lambda impl: bench_vi(impl, 401, 2000 * k)),
        ("q-learning episodes (161x41 table, %d eps)" % (2000 * k),
         lambda impl: bench_qlearn(impl, 2000 * k)),
        ("fa updates (%d steps)" % (200000 * k),
         lambda impl: bench_fa(impl, 200000 * k)),
    ]

    print(f"{'workload':<48} {'pure':>10} {'compiled':>10} {'speedup':>9}")
    for name, bench in workloads:
        t_pure, out_pure = bench(_pure)
        if _core is None:
            print(f"{name:<48} {t_pure:>9.3f}s {'n/a':>10} {'n/a':>9}")
            continue
        t_core, out_core = bench(_core)
        same = np.array_equal(out_pure, out_core)
        tag = "" if same else "  OUTPUT MISMATCH"
        print(f"{name:<48} {t_pure:>9.3f}s {t_core:>9.3f}s {t_pure / t_core:>8.1f}x{tag}")
    if _core is None:
        print("\ncompiled backend not built; install with Cython and a C compiler")


if __name__ == "__main__":
    main()
