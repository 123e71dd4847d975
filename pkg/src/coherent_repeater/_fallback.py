"""Pure numpy/Python versions of the hot loops (same streams as the compiled core)."""

from __future__ import annotations

import math

import numpy as np

from .rng import LockstepXoshiro, Xoshiro256StarStar

_CHUNK = 1 << 16


def z_tail_sum(N: int, P: float, tol: float = 1e-12) -> float:
    """sum_{t>=0} (1 - (1 - (1-P)^t)^N), stopped once the remaining tail is below tol."""
    log_q = math.log1p(-P)
    total = 0.0
    comp = 0.0
    start = 0
    while True:
        t = np.arange(start, start + _CHUNK, dtype=float)
        # 1 - (1 - (1-P)^t)^N with 1 - (1-P)^t = -expm1(t log(1-P))
        with np.errstate(divide="ignore"):
            terms = -np.expm1(N * np.log(-np.expm1(t * log_q)))
        # Kahan over chunk sums (each chunk summed pairwise by numpy)
        y = float(terms.sum()) - comp
        s = total + y
        comp = (s - total) - y
        total = s
        last = terms[-1]
        if last / P < tol * total:
            return total
        start += _CHUNK


def _geometric(u, inv_log_q):
    # number of Bernoulli trials up to and including the first success
    return 1.0 + np.floor(np.log(1.0 - u) / inv_log_q)


def cycle_trials(N: int, p: float, seed: int, start: int, count: int):
    """Per-trial (max, sum, sum of squares) of N geometric(p) cycle counts."""
    log_q = math.log1p(-p) if p < 1.0 else -math.inf
    rng = LockstepXoshiro(seed, start, count)
    mx = np.zeros(count, dtype=np.int64)
    sm = np.zeros(count, dtype=np.int64)
    sq = np.zeros(count, dtype=np.int64)
    for _ in range(N):
        g = _geometric(rng.random(), log_q).astype(np.int64)
        np.maximum(mx, g, out=mx)
        sm += g
        sq += g * g
    return mx, sm, sq


def _pump_segment(rng: Xoshiro256StarStar, p_dist: float, round_success) -> tuple:
    attempts = 0
    first_pass = True
    while True:
        while True:
            attempts += 1
            if rng.random() < p_dist:
                break
            first_pass = False
        ok = True
        for ps in round_success:
            while True:
                attempts += 1
                if rng.random() < p_dist:
                    break
                first_pass = False
            if not rng.random() < ps:
                ok = False
                first_pass = False
                break
        if ok:
            return attempts, first_pass


def pumping_trials(N: int, p_dist: float, round_success, seed: int, start: int, count: int):
    """Per-trial (max, sum, sum of squares, first-pass count) of pumping attempts."""
    round_success = [float(x) for x in round_success]
    mx = np.zeros(count, dtype=np.int64)
    sm = np.zeros(count, dtype=np.int64)
    sq = np.zeros(count, dtype=np.int64)
    fp = np.zeros(count, dtype=np.int64)
    for i in range(count):
        rng = Xoshiro256StarStar.from_seed(seed, start + i)
        for _ in range(N):
            a, first = _pump_segment(rng, p_dist, round_success)
            mx[i] = max(mx[i], a)
            sm[i] += a
            sq[i] += a * a
            fp[i] += first
    return mx, sm, sq, fp
