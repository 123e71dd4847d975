"""Chain-level analysis: swap composition, waiting factor Z_N, rescaled rates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .distribution import ELL0_KM, ChannelParams, fidelity_from, p_dist_from
from .purification import fidelity_after, pump_schedule, required_base_fidelity

LIGHT_SPEED_FIBER = 2.0e8  # m/s
ALTERNATING_SUM_MAX_N = 20


class InfeasiblePlan(ValueError):
    """No segment length reaches the requested final fidelity."""


def compose_pair(Fa: float, Fb: float) -> float:
    """Fidelity after swapping two same-family rank-2 pairs."""
    return Fa * Fb + (1.0 - Fa) * (1.0 - Fb)


def chain_fidelity(F: float, N: int) -> float:
    """Fidelity of N equal segments joined by N-1 swaps: (1 + (2F-1)^N) / 2."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if not 0.5 - 1e-12 <= F <= 1.0 + 1e-12:
        raise ValueError(f"F={F} outside [1/2, 1]")
    return 0.5 * (1.0 + (2.0 * F - 1.0) ** N)


def required_segment_fidelity(F_final: float, N: int) -> float:
    """Inverse of ``chain_fidelity`` in F."""
    if not 0.5 < F_final <= 1.0:
        raise ValueError(f"F_final={F_final} outside (1/2, 1]")
    return 0.5 * (1.0 + (2.0 * F_final - 1.0) ** (1.0 / N))


def _inv_success(j: int, P: float) -> float:
    # 1 / (1 - (1-P)^j), accurate for tiny P
    return -1.0 / math.expm1(j * math.log1p(-P)) if P < 1.0 else 1.0


def expected_attempts(N: int, P: float) -> float:
    """Z_N(P): mean of the maximum of N independent geometric(P) counts.

    For N <= 20 the alternating binomial sum is added exactly with
    ``math.fsum``; beyond that it cancels too badly and the survival-function
    series sum_t (1 - (1 - (1-P)^t)^N) is summed instead.
    """
    N = int(N)
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if not 0.0 < P <= 1.0:
        raise ValueError(f"P={P} must lie in (0, 1]")
    if P == 1.0:
        return 1.0
    if N <= ALTERNATING_SUM_MAX_N:
        terms = [
            math.comb(N, j) * (1 if j % 2 else -1) * _inv_success(j, P) for j in range(1, N + 1)
        ]
        return math.fsum(terms)
    from .kernels import z_tail_sum

    return z_tail_sum(N, P)


@dataclass(frozen=True)
class RateModel:
    """Rates are reported as R*S = v / (14 l Z_N); S only rescales the cycle time."""

    light_speed: float = LIGHT_SPEED_FIBER
    scheduling_factor: float = 1.0

    def __post_init__(self):
        if self.scheduling_factor < 1:
            raise ValueError("scheduling factor S must be >= 1")

    def cycle_time(self, ell_km: float) -> float:
        """T0 = S * 14 l / v in seconds."""
        return self.scheduling_factor * 14.0 * ell_km * 1e3 / self.light_speed


@dataclass(frozen=True)
class RepeaterPlan:
    """Operating point of an N-segment repeater with k pumping rounds per segment."""

    alpha_sq: float
    ell_km: float
    segments: int
    rounds: int = 4
    p_sw: float = 1.0
    ell0_km: float = ELL0_KM

    def __post_init__(self):
        ChannelParams(self.alpha_sq, self.ell_km, self.ell0_km)
        if int(self.segments) < 1:
            raise ValueError(f"segments must be >= 1, got {self.segments}")
        if int(self.rounds) < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if not 0.0 < self.p_sw <= 1.0:
            raise ValueError(f"p_sw={self.p_sw} must lie in (0, 1]")

    @property
    def channel(self) -> ChannelParams:
        return ChannelParams(self.alpha_sq, self.ell_km, self.ell0_km)

    @property
    def eta(self) -> float:
        return self.channel.eta

    @property
    def f(self) -> float:
        return fidelity_from(self.alpha_sq, self.eta)

    @property
    def p_dist(self) -> float:
        return p_dist_from(self.alpha_sq, self.eta)

    @cached_property
    def schedule(self):
        return pump_schedule(self.f, self.rounds, self.channel)

    @property
    def F_k(self) -> float:
        return self.schedule.final_fidelity

    @property
    def P_pd(self) -> float:
        return self.schedule.p_pd

    @property
    def P_total(self) -> float:
        """p_sw^2 P_pd; the square (two swap stages) is kept for every N."""
        return self.p_sw**2 * self.P_pd

    @property
    def F_final(self) -> float:
        return chain_fidelity(self.F_k, self.segments)

    @property
    def Z_N(self) -> float:
        return expected_attempts(self.segments, self.P_total)

    @property
    def L_km(self) -> float:
        return self.segments * self.ell_km

    @property
    def rate_rescaled(self) -> float:
        return rescaled_rate(self)

    def row(self) -> dict:
        return {
            "alpha_sq": self.alpha_sq,
            "N": self.segments,
            "ell_km": self.ell_km,
            "L_km": self.L_km,
            "f": self.f,
            "F4" if self.rounds == 4 else f"F{self.rounds}": self.F_k,
            "F_final": self.F_final,
            "P_pd": self.P_pd,
            "P_total": self.P_total,
            "Z_N": self.Z_N,
            "rate_rescaled": self.rate_rescaled,
        }


def rescaled_rate(plan: RepeaterPlan, model: RateModel = RateModel()) -> float:
    """R*S = v / (14 l Z_N(P_total)) in pairs per second."""
    if plan.ell_km <= 0:
        raise ValueError("rate is undefined at zero segment length")
    T0_over_S = model.cycle_time(plan.ell_km) / model.scheduling_factor
    return 1.0 / (T0_over_S * plan.Z_N)


def plan_segment_length(
    F_final: float, N: int, alpha_sq: float, rounds: int = 4, ell0_km: float = ELL0_KM
) -> float:
    """Longest segment length whose chain reaches exactly ``F_final``.

    Inverts the swap composition for F_k, the pumping recursion for f and
    the distribution fidelity for eta. Returns ``math.inf`` when even an
    opaque fibre (eta -> 0) leaves f above the requirement.
    """
    if not 0.5 < F_final <= 1.0:
        raise InfeasiblePlan(f"F_final={F_final} must lie in (1/2, 1]")
    if alpha_sq <= 0:
        raise InfeasiblePlan("alpha_sq must be positive")
    F_k = required_segment_fidelity(F_final, N)
    f = required_base_fidelity(F_k, rounds)
    if f >= 1.0:
        return 0.0
    one_minus_eta = -math.log(2.0 * f - 1.0) / (2.0 * alpha_sq)
    if one_minus_eta >= 1.0:
        return math.inf
    return -ell0_km * math.log1p(-one_minus_eta)


def plan_for(F_final: float, N: int, alpha_sq: float, rounds: int = 4, p_sw: float = 1.0) -> RepeaterPlan:
    ell = plan_segment_length(F_final, N, alpha_sq, rounds)
    if not math.isfinite(ell) or ell <= 0:
        raise InfeasiblePlan(f"no finite positive segment length for F_final={F_final}, N={N}")
    return RepeaterPlan(alpha_sq, ell, N, rounds, p_sw)


def forward_final_fidelity(ell_km: float, N: int, alpha_sq: float, rounds: int = 4, ell0_km: float = ELL0_KM) -> float:
    """Forward model used to check ``plan_segment_length`` round trips."""
    eta = math.exp(-ell_km / ell0_km)
    return chain_fidelity(fidelity_after(fidelity_from(alpha_sq, eta), rounds), N)
