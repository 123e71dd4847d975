"""Two-node entanglement distribution with coherent light and on/off detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import coherent as cs
from . import fock
from .bell import BellDiagonalPair, bell_offdiagonal_norm, bell_weights

ELL0_KM = 25.0

PATTERNS = ("no_click_click", "click_no_click", "inconclusive")

# conclusive pattern -> (sign tag, dominant, secondary) of the conditional pair
PATTERN_PAIRS = {
    "no_click_click": ("-", "phi-", "psi-"),
    "click_no_click": ("+", "phi+", "psi+"),
}

# H (x) H acting on Bell labels
HADAMARD_FRAME = {"phi+": "phi+", "phi-": "psi+", "psi+": "phi-", "psi-": "psi-"}


@dataclass(frozen=True)
class ChannelParams:
    """Mean photon number, segment length and attenuation length (km)."""

    alpha_sq: float
    ell_km: float
    ell0_km: float = ELL0_KM

    def __post_init__(self):
        if not self.alpha_sq > 0:
            raise ValueError(f"alpha_sq must be > 0, got {self.alpha_sq}")
        if not self.ell_km >= 0:
            raise ValueError(f"ell_km must be >= 0, got {self.ell_km}")
        if not self.ell0_km > 0:
            raise ValueError(f"ell0_km must be > 0, got {self.ell0_km}")

    @property
    def eta(self) -> float:
        return math.exp(-self.ell_km / self.ell0_km)


class ChannelMetrics(NamedTuple):
    f: float
    p_dist: float


def fidelity_from(alpha_sq: float, eta: float) -> float:
    return 0.5 * (1.0 + math.exp(-2.0 * alpha_sq * (1.0 - eta)))


def p_dist_from(alpha_sq: float, eta: float) -> float:
    return 0.5 * -math.expm1(-2.0 * eta * alpha_sq)


def analytic_metrics(params: ChannelParams) -> ChannelMetrics:
    """Closed-form pair fidelity and per-pattern success probability."""
    eta = params.eta
    return ChannelMetrics(fidelity_from(params.alpha_sq, eta), p_dist_from(params.alpha_sq, eta))


@dataclass(frozen=True)
class DistributionOutcome:
    pattern: str
    probability: float
    pair: BellDiagonalPair | None
    rho: np.ndarray | None = field(default=None, repr=False, compare=False)


def _pair_from_rho(rho, pattern: str, tol: float = 1e-9) -> BellDiagonalPair:
    sign, dom, sec = PATTERN_PAIRS[pattern]
    w = bell_weights(rho)
    stray = max(v for k, v in w.items() if k not in (dom, sec))
    if stray > tol or bell_offdiagonal_norm(rho) > tol:
        raise ArithmeticError(f"conditional state for {pattern} is not rank-2 Bell-diagonal: {w}")
    return BellDiagonalPair(dom, sec, float(w[dom]), sign)


def protocol_state(params: ChannelParams) -> cs.CoherentSuperposition:
    """Atoms and light after both nodes have acted, before discrimination.

    Both atoms start in |0>; the pulse of amplitude alpha is real.
    """
    a = math.sqrt(params.alpha_sq)
    se = math.sqrt(params.eta)
    s = cs.CoherentSuperposition.product("00", [a], basis="z").to_basis("x")
    s = cs.apply_controlled_phase(s, 0, 0, -math.pi / 2)
    s = cs.apply_loss(s, 0, params.eta)
    s = cs.apply_controlled_displacement(s, 0, 1, -1j * se * a)
    s = cs.apply_controlled_phase(s, 0, 1, -math.pi / 2)
    s = cs.apply_controlled_displacement(s, 0, None, se * a, conditioned=False)
    return s


def discriminate(state: cs.CoherentSuperposition, params: ChannelParams) -> dict:
    """Coherent-state discrimination: splitter with reference i sqrt(eta) alpha, two on/off detectors.

    Returns ``{(outcome_port_a, outcome_port_b): (probability, state)}``.
    """
    ref = 1j * math.sqrt(params.eta * params.alpha_sq)
    s = cs.add_mode(state, ref)
    s = cs.apply_beam_splitter(s, 0, 1)
    out = {}
    for o1, p1, s1 in cs.measure_on_off(s, 0):
        if s1 is None:
            out[(o1, "no_click")] = (0.0, None)
            out[(o1, "click")] = (0.0, None)
            continue
        for o2, p2, s2 in cs.measure_on_off(s1, 0):
            out[(o1, o2)] = (p1 * p2, s2)
    return out


def _run_coherent(params: ChannelParams) -> dict:
    branches = discriminate(protocol_state(params), params)
    rhos = {}
    for key, (p, st) in branches.items():
        rhos[key] = (p, st.qubit_density() if st is not None else None)
    return rhos


def _run_fock(params: ChannelParams, cutoff=None) -> dict:
    a2, eta = params.alpha_sq, params.eta
    cutoff = fock.distribution_cutoff(a2) if cutoff is None else fock._as_cutoff(cutoff)
    rho = fock.evolve_distribution_numeric(a2, eta, cutoff)
    d = cutoff.dim
    lam, vecs = rho.eigh()
    ref = fock.coherent_vector(1j * math.sqrt(eta * a2), cutoff)
    acc = {
        (o1, o2): np.zeros((4, 4), complex)
        for o1 in ("no_click", "click")
        for o2 in ("no_click", "click")
    }
    report = []
    for w, v in zip(lam, vecs.T):
        if w < 1e-14:
            continue
        psi = np.einsum("ijm,r->ijmr", v.reshape(2, 2, d), ref)
        psi = fock.passive_two_mode(psi, 2, 3, fock.beam_splitter_matrix(), cutoff)
        fock._check_tail(psi, (2, 3), cutoff, report)
        flat = psi.reshape(4, d, d)
        parts = {
            ("no_click", "no_click"): flat[:, :1, :1],
            ("no_click", "click"): flat[:, :1, 1:],
            ("click", "no_click"): flat[:, 1:, :1],
            ("click", "click"): flat[:, 1:, 1:],
        }
        for key, blk in parts.items():
            b = blk.reshape(4, -1)
            acc[key] += w * (b @ b.conj().T)
    out = {}
    for key, r in acc.items():
        p = float(np.trace(r).real)
        out[key] = (p, r / p if p > 1e-15 else None)
    return out


def run_distribution(params: ChannelParams, engine: str = "coherent", cutoff=None) -> list:
    """Full distribution round: protocol, discrimination, pattern postselection.

    Returns three DistributionOutcome entries (two conclusive patterns and the
    inconclusive one). The ideal model never produces two clicks; an
    ArithmeticError is raised if that branch carries weight above 1e-12.
    """
    if engine == "coherent":
        branches = _run_coherent(params)
    elif engine == "fock":
        branches = _run_fock(params, cutoff)
    else:
        raise ValueError(f"unknown engine {engine!r}; use 'coherent' or 'fock'")
    p_cc = branches[("click", "click")][0]
    if p_cc > 1e-12:
        raise ArithmeticError(f"two-click probability {p_cc:.3e} should vanish")
    outcomes = []
    for pattern, key in (
        ("no_click_click", ("no_click", "click")),
        ("click_no_click", ("click", "no_click")),
    ):
        p, rho = branches[key]
        pair = _pair_from_rho(rho, pattern) if rho is not None else None
        outcomes.append(DistributionOutcome(pattern, p, pair, rho))
    p_inc, rho_inc = branches[("no_click", "no_click")]
    outcomes.append(DistributionOutcome("inconclusive", p_inc, None, rho_inc))
    return outcomes


def apply_hadamard_frame(pair: BellDiagonalPair) -> BellDiagonalPair:
    """Relabel a pair after a Hadamard on each qubit; fidelity and sign unchanged."""
    return BellDiagonalPair(
        HADAMARD_FRAME[pair.dominant], HADAMARD_FRAME[pair.secondary], pair.fidelity, pair.sign
    )
