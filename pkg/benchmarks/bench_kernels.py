#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-python fallback.

Measures the two hot loops behind the package: fixed-step RK4 integration
and the central-daemon protocol scheduler.

Usage: python benchmarks/bench_kernels.py [--steps N] [--nodes N] [--repeat K]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from uwsnsim._kernels import _pure

try:
    from uwsnsim._kernels import _core
except ImportError:
    _core = None

VITAL_PARAMS = np.array([0.33, 0.035, 0.0018, 0.0018, 0.017, 0, 0, 0.1, 0.1, 0])
Y0 = np.array([0.9, 0.1, 0.0, 0.0, 0.0, 0.0])


def bench_integrate(impl, n_steps: int, repeat: int) -> float:
    times = np.zeros(2)
    states = np.zeros((2, 6))
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        rc = impl.integrate_loop(5, VITAL_PARAMS, Y0, 0.01, n_steps, 0,
                                 10**9, times, states)
        assert rc == -1
        best = min(best, time.perf_counter() - t0)
    return n_steps / best  # steps per second


def make_graph(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    neigh = [set() for _ in range(n)]
    p = 8.0 / n
    for u in range(n):
        hits = np.nonzero(rng.random(n - u - 1) < p)[0]
        for h in hits:
            v = u + 1 + int(h)
            neigh[u].add(v)
            neigh[v].add(u)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for k in range(n):
        indptr[k + 1] = indptr[k] + len(neigh[k])
    indices = np.concatenate([sorted(neigh[k]) for k in range(n)]).astype(np.int64)
    return indptr, indices


def bench_scheduler(impl, n: int, repeat: int) -> float:
    indptr, indices = make_graph(n)
    cap = 2 * n + 2
    best = float("inf")
    moves = 0
    for _ in range(repeat):
        state = np.ones(n, dtype=np.int8)   # all probing
        comp = np.zeros(n, dtype=np.int8)
        mv = [np.zeros(cap, dtype=np.int64)] + \
             [np.zeros(cap, dtype=np.int8) for _ in range(6)]
        lk = [np.zeros(n + 1, dtype=np.int64), np.zeros(n + 1, dtype=np.int64)]
        t0 = time.perf_counter()
        moves, _, quiescent = impl.run_central(indptr, indices, state, comp,
                                               0, 0, cap, *mv, *lk)
        assert quiescent
        best = min(best, time.perf_counter() - t0)
    return moves / best  # moves per second


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=200_000,
                    help="RK4 steps per run (default 200000)")
    ap.add_argument("--nodes", type=int, default=5_000,
                    help="scheduler graph size (default 5000)")
    ap.add_argument("--repeat", type=int, default=3, help="best-of repetitions")
    args = ap.parse_args()

    backends = [("pure", _pure)]
    if _core is not None:
        backends.insert(0, ("compiled", _core))
    else:
        print("note: compiled kernel not built; showing the fallback only")

    rows = []
    for name, impl in backends:
        rk4 = bench_integrate(impl, args.steps, args.repeat)
        sched = bench_scheduler(impl, args.nodes, args.repeat)
        rows.append((name, rk4, sched))

    print(f"{'backend':<10} {'RK4 steps/s':>14} {'scheduler moves/s':>20}")
    for name, rk4, sched in rows:
        print(f"{name:<10} {rk4:>14,.0f} {sched:>20,.0f}")
    if len(rows) == 2:
        print(f"{'speedup':<10} {rows[0][1] / rows[1][1]:>13.1f}x "
              f"{rows[0][2] / rows[1][2]:>19.1f}x")


if __name__ == "__main__":
    main()
