"""Compiled kernels versus the numpy/Python fallback on the Monte Carlo and Z_N loops.

Run from the repository root:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from coherent_repeater import kernels
from coherent_repeater.chain import RepeaterPlan
from coherent_repeater.montecarlo import SegmentModel


def _time(fn, repeat=3):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    try:
        fast = kernels.get_backend("cython")
    except ImportError:
        print("compiled kernels not built; nothing to compare")
        return
    slow = kernels.get_backend("python")
    plan = RepeaterPlan(1.0, 25.0, 3)
    model = SegmentModel.from_plan(plan)
    cases = [
        ("cycle N=7 P=0.1, 1e5 trials", lambda k: k.cycle_trials(7, 0.1, 1, 0, 100_000)),
        ("cycle N=3 P_total, 1e5 trials", lambda k: k.cycle_trials(3, plan.P_total, 1, 0, 100_000)),
        ("pumping N=3, 2e3 trials",
         lambda k: k.pumping_trials(3, model.p_distribution, list(model.round_success), 1, 0, 2_000)),
        ("Z_N tail N=63 P=1e-5", lambda k: k.z_tail_sum(63, 1e-5, 1e-12)),
    ]
    print(f"{'case':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} identical")
    for name, fn in cases:
        ts, a = _time(lambda: fn(slow), repeat=1)
        tf, b = _time(lambda: fn(fast))
        if isinstance(a, tuple):
            same = all(np.array_equal(x, y) for x, y in zip(a, b))
        else:
            same = abs(a - b) <= 1e-12 * abs(a)
        print(f"{name:34s} {ts:11.4f} {tf:11.4f} {ts / tf:8.1f} {same}")


if __name__ == "__main__":
    main()
