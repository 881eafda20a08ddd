"""Compare the compiled trajectory kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 8] [--repeat 5]
"""
import argparse
import time

import numpy as np

from chiral_dimers import _kernels_py, kernels, operators as ops
from chiral_dimers.chain import ChainParams
from chiral_dimers.observables import neighbour_pairs
from chiral_dimers.trajectories import Propagators, TrajectoryConfig, unravel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    n = args.n
    if kernels.BACKEND != "compiled":
        print("compiled kernels unavailable; only the fallback will be timed")
    gen = unravel(ChainParams(n, rabi=0.5, gamma_l=0.4), check=False)
    cfg = TrajectoryConfig(t_final=20.0, dt_max=0.125)
    prop = Propagators(gen, cfg.dt_max, cfg.levels)
    psi0 = ops.ground_state(n)
    pairs = np.array(neighbour_pairs(n), dtype=np.int64)
    end = int(cfg.grid_ticks()[-1])
    rng = np.random.default_rng(1)
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    psi /= np.linalg.norm(psi)
    w = np.ascontiguousarray(gen.weights[0])

    def adv(mod):
        def run():
            p = psi0.copy()
            # threshold below any reachable norm: pure no-jump propagation to the end
            mod.advance(prop.U, prop.H, prop.orders, prop.h0, prop.K, p, 1e-300, 0, end)
        return run

    rows = [
        ("advance (no-jump, t=20)", adv(kernels), adv(_kernels_py)),
        ("collective_lower", lambda: kernels.collective_lower(psi, w, n),
         lambda: _kernels_py.collective_lower(psi, w, n)),
        ("pair_marginals", lambda: kernels.pair_marginals(psi, n, pairs),
         lambda: _kernels_py.pair_marginals(psi, n, pairs)),
    ]
    print(f"N = {n}, backend = {kernels.BACKEND}, best of {args.repeat}")
    print(f"{'kernel':28s} {'compiled [ms]':>14s} {'numpy [ms]':>12s} {'speedup':>8s}")
    for name, fast, slow in rows:
        a = best_of(fast, args.repeat) * 1e3
        b = best_of(slow, args.repeat) * 1e3
        print(f"{name:28s} {a:14.3f} {b:12.3f} {b / a:8.1f}")


if __name__ == "__main__":
    main()
