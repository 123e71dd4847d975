"""Discrete-attempt Monte Carlo of segment preparation and chain waiting times.

Two retry models are available:

* ``cycle`` (default): a segment repeats whole cycles, each succeeding with
  probability P_total; the chain waits for the slowest of N segments. This is
  the event counted by Z_N and is the one compared against it.
* ``pumping``: distributions are retried individually and a failed pumping
  round restarts the segment from scratch. Counts are distribution attempts.
  Reported for information only; never compared with Z_N.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .chain import RepeaterPlan, expected_attempts
from .rng import Xoshiro256StarStar


@dataclass(frozen=True)
class SegmentModel:
    """Success probabilities of one distribution attempt and of each pumping round."""

    p_distribution: float
    round_success: tuple

    def __post_init__(self):
        if not 0.0 < self.p_distribution <= 1.0:
            raise ValueError("p_distribution must lie in (0, 1]")
        if any(not 0.0 < p <= 1.0 for p in self.round_success):
            raise ValueError("round success probabilities must lie in (0, 1]")

    @classmethod
    def from_plan(cls, plan: RepeaterPlan) -> "SegmentModel":
        # a round succeeds on either accepted outcome: 2 P_n
        return cls(2.0 * plan.p_dist, tuple(2.0 * p for p in plan.schedule.probabilities))

    @property
    def first_pass_probability(self) -> float:
        """Probability that k+1 distributions and k rounds all succeed in one pass."""
        k = len(self.round_success)
        return self.p_distribution ** (k + 1) * math.prod(self.round_success)


def simulate_segment(model: SegmentModel | RepeaterPlan, rng: Xoshiro256StarStar) -> int:
    """Distribution attempts until one purified pair exists (pumping semantics)."""
    if isinstance(model, RepeaterPlan):
        model = SegmentModel.from_plan(model)
    from ._fallback import _pump_segment

    attempts, _ = _pump_segment(rng, model.p_distribution, model.round_success)
    return attempts


@dataclass(frozen=True)
class TrialConfig:
    """Either a plan or an explicit (segments, p_cycle) pair, plus trial count and seed."""

    trials: int
    seed: int
    plan: RepeaterPlan | None = None
    segments: int | None = None
    p_cycle: float | None = None
    segment_model: SegmentModel | None = None
    mode: str = "cycle"
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.mode not in ("cycle", "pumping"):
            raise ValueError("mode must be 'cycle' or 'pumping'")
        if self.plan is None and self.segments is None:
            raise ValueError("give a plan or an explicit segment count")

    @property
    def n_segments(self) -> int:
        return int(self.segments if self.segments is not None else self.plan.segments)

    @property
    def cycle_probability(self) -> float:
        return float(self.p_cycle if self.p_cycle is not None else self.plan.P_total)

    @property
    def model(self) -> SegmentModel:
        if self.segment_model is not None:
            return self.segment_model
        return SegmentModel.from_plan(self.plan)


@dataclass(frozen=True)
class TrialStats:
    mode: str
    trials: int
    segments: int
    success_probability: float
    success_probability_se: float
    mean_attempts: float
    mean_attempts_se: float
    mean_max: float
    mean_max_se: float
    first_pass_probability: float | None = None
    first_pass_probability_se: float | None = None
    analytic_mean_max: float | None = None

    @property
    def z_score(self) -> float | None:
        if self.analytic_mean_max is None or self.mean_max_se == 0:
            return None
        return (self.mean_max - self.analytic_mean_max) / self.mean_max_se

    def row(self) -> dict:
        return {
            "mode": self.mode,
            "trials": self.trials,
            "N": self.segments,
            "p_hat": self.success_probability,
            "p_hat_se": self.success_probability_se,
            "mean_attempts": self.mean_attempts,
            "mean_attempts_se": self.mean_attempts_se,
            "mean_max": self.mean_max,
            "mean_max_se": self.mean_max_se,
            "Z_N": self.analytic_mean_max if self.analytic_mean_max is not None else "",
            "first_pass": self.first_pass_probability if self.first_pass_probability is not None else "",
            "first_pass_se": self.first_pass_probability_se
            if self.first_pass_probability_se is not None
            else "",
        }


def _run_chunk(args):
    mode, N, params, seed, start, count, backend = args
    impl = kernels.get_backend(backend)
    if mode == "cycle":
        return impl.cycle_trials(N, params, seed, start, count) + (None,)
    p_dist, rs = params
    return impl.pumping_trials(N, p_dist, list(rs), seed, start, count)


def _chunks(trials: int, workers: int):
    workers = max(1, min(workers, trials))
    edges = np.linspace(0, trials, workers + 1).astype(int)
    return [(int(a), int(b - a)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def estimate_chain(config: TrialConfig, backend: str | None = None) -> TrialStats:
    """Simulate ``config.trials`` independent chains and summarise.

    Trial t always uses random stream t, so the statistics are identical for
    any worker count.
    """
    N = config.n_segments
    if config.mode == "cycle":
        params = config.cycle_probability
        if not 0.0 < params <= 1.0:
            raise ValueError(f"cycle probability {params} must lie in (0, 1]")
    else:
        m = config.model
        params = (m.p_distribution, tuple(m.round_success))
    backend = backend or kernels.BACKEND
    jobs = [(config.mode, N, params, config.seed, s, c, backend) for s, c in _chunks(config.trials, config.workers)]
    if len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(jobs[0])]
    mx = np.concatenate([p[0] for p in parts]).astype(float)
    sm = np.concatenate([p[1] for p in parts]).astype(float)
    sq = np.concatenate([p[2] for p in parts]).astype(float)
    T = config.trials
    draws = T * N

    mean_att = sm.sum() / draws
    var_att = max(sq.sum() / draws - mean_att**2, 0.0) * draws / max(draws - 1, 1)
    se_att = math.sqrt(var_att / draws)
    p_hat = 1.0 / mean_att
    p_se = se_att / mean_att**2  # delta method

    mean_max = mx.mean()
    se_max = mx.std(ddof=1) / math.sqrt(T) if T > 1 else 0.0

    fp = fp_se = None
    analytic = None
    if config.mode == "pumping":
        hits = np.concatenate([p[3] for p in parts]).sum()
        fp = hits / draws
        fp_se = math.sqrt(max(fp * (1 - fp), 0.0) / draws)
        # per-pass success: the P_pd estimator
        p_hat, p_se = fp, fp_se
    else:
        analytic = expected_attempts(N, params)
    return TrialStats(
        config.mode, T, N, p_hat, p_se, mean_att, se_att, mean_max, se_max, fp, fp_se, analytic
    )
