"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on identical inputs under both backends; the script checks
that the outputs agree before reporting timings.
"""
import argparse
import timeit

import numpy as np

from matchbandit import _pykernels
from matchbandit.environment import generate_synthetic
from matchbandit.matching import greedy_order

try:
    from matchbandit import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def epoch_case(m=10, n_states=10, tau=2000, seed=0):
    env, _ = generate_synthetic(m, n_states, "mixed", seed=seed)
    p = env.packed
    rows = np.arange(m) * m + np.arange(m)          # the diagonal matching
    cum, kind, p0, p1, tid = p.subset(rows)
    rng = np.random.default_rng(seed)
    u_trans, u_rew = rng.random((tau, m)), rng.random((tau, m))
    states = env.current_states.astype(np.int64)

    def call(k):
        s = states.copy()
        sums, hits = np.zeros(m), np.zeros(m, dtype=np.int64)
        k.simulate_epoch(cum, s, kind, p0, p1, tid, p.tables, u_trans, u_rew,
                         5e-4, 0, sums, hits, 0, 0)
        return sums
    return call


def greedy_case(m=40, seed=0):
    rng = np.random.default_rng(seed)
    w = rng.random((m, m))
    order = greedy_order(w)
    class_of = rng.integers(0, 4, m * m).astype(np.int64)
    caps = np.array([m // 4] * 4, dtype=np.int64)
    return lambda k: k.greedy_scan(order, class_of, caps, m, m)


def cucb_case(m=4, n_states=4, tau=300, seed=0):
    env, inst = generate_synthetic(m, n_states, "bernoulli", seed=seed)
    p = env.packed
    rng = np.random.default_rng(seed)
    u_trans, u_rew = rng.random((tau, m)), rng.random((tau, m))
    class_of = inst.class_of.ravel().astype(np.int64)
    caps = inst.capacities.astype(np.int64)
    ref = np.zeros(m * m, dtype=np.uint8)

    def call(k):
        sums, counts = np.zeros(m * m), np.zeros(m * m, dtype=np.int64)
        plays = np.zeros(m * m, dtype=np.int64)
        st = env.current_states.astype(np.int64).copy()
        k.cucb_epoch(p.cum, p.kind, p.p0, p.p1, p.tid, p.tables, class_of, caps, m, m, st,
                     sums, counts, 0, u_trans, u_rew, ref, plays, 2.0)
        return sums
    return call


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled extension not available; run pip install -e . first")
    cases = {"simulate_epoch (10 arms x 2000 it)": epoch_case(),
             "greedy_scan (40 x 40)": greedy_case(),
             "cucb_epoch (4 x 4, 300 it)": cucb_case()}
    print(f"{'kernel':36s} {'cython ms':>10s} {'python ms':>10s} {'speed-up':>9s}")
    for name, call in cases.items():
        assert np.array_equal(call(_ckernels), call(_pykernels)), name
        tc = min(timeit.repeat(lambda: call(_ckernels), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: call(_pykernels), number=1, repeat=args.repeat))
        print(f"{name:36s} {tc * 1e3:10.3f} {tp * 1e3:10.3f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
