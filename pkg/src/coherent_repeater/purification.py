"""Entanglement pumping with XX gates and computational-basis postselection.

Qubit order inside a round is (stationary A, stationary B, fresh A, fresh B);
the XX gate couples the two atoms sharing a cavity, i.e. (0, 2) and (1, 3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bell import PAULI_X, BellDiagonalPair, apply_gate, bell_offdiagonal_norm, bell_weights, project_bits

XX_GATE = (np.eye(4) - 1j * np.kron(PAULI_X, PAULI_X)) / math.sqrt(2)  # exp(-i pi/4 X X)

BITS = ((0, 0), (0, 1), (1, 0), (1, 1))
ODD = ((0, 1), (1, 0))
EVEN = ((0, 0), (1, 1))

# Accepted outcomes keyed by (stationary sign, fresh sign).
# Fresh atoms measured (every round but the last):
FRESH_MEASURED_ACCEPT = {
    ("+", "+"): ODD,
    ("-", "+"): ODD,
    ("-", "-"): EVEN,
    ("+", "-"): EVEN,
}
# Stationary atoms measured inside the cavities (last round):
STATIONARY_MEASURED_ACCEPT = {
    ("+", "+"): ODD,
    ("+", "-"): ODD,
    ("-", "-"): EVEN,
    ("-", "+"): EVEN,
}


def _flip(sign: str) -> str:
    return "-" if sign == "+" else "+"


def _build_table(accept: dict, survivor_from: int) -> dict:
    """Expand to the full 16-entry map (s_stat, s_fresh, bits) -> survivor sign or None."""
    table = {}
    for (s_stat, s_fresh), ok in accept.items():
        survivor = _flip((s_stat, s_fresh)[survivor_from])
        for bits in BITS:
            table[(s_stat, s_fresh, bits)] = survivor if bits in ok else None
    return table


FRESH_MEASURED_TABLE = _build_table(FRESH_MEASURED_ACCEPT, survivor_from=0)
STATIONARY_MEASURED_TABLE = _build_table(STATIONARY_MEASURED_ACCEPT, survivor_from=1)


def xx_gate(state, qubits=(0, 1), n_qubits: int = 2) -> np.ndarray:
    """Apply ``exp(-i pi/4 X X)`` to two qubits of a state vector or density matrix."""
    return apply_gate(XX_GATE, state, qubits, n_qubits)


# --- closed-form recursion --------------------------------------------------------


def round_probability(F_prev: float, f: float) -> float:
    """Probability of each accepted outcome of one pumping round."""
    return 0.5 * (1.0 - F_prev + f * (2.0 * F_prev - 1.0))


def next_fidelity(F_prev: float, f: float) -> float:
    return f * F_prev / (1.0 - F_prev + f * (2.0 * F_prev - 1.0))


def fidelity_after(f: float, rounds: int) -> float:
    """Closed form of the recursion: f^(n+1) / (f^(n+1) + (1-f)^(n+1))."""
    a, b = f ** (rounds + 1), (1.0 - f) ** (rounds + 1)
    return a / (a + b)


PROB_FIN_COEFFS = (15, -180, 1130, -4700, 14088, -31584, 53776, -69600, 67648, -48000, 23552, -7168, 1024)


def prob_fin_polynomial(f):
    """The printed degree-14 expansion of the four-round purification factor.

    Coefficients of f^2 .. f^14 as given. This does not coincide with the
    product 2^4 P1 P2 P3 P4 of the recursion except at f = 1/2 and f = 1; it
    is kept only for comparison (see ``purification_factor``).
    """
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    for c in reversed(PROB_FIN_COEFFS):
        out = out * f + c
    out = out * f * f
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PumpSchedule:
    f: float
    rounds: int
    fidelities: tuple
    probabilities: tuple
    purification_factor: float
    p_dist: float | None = None

    @property
    def final_fidelity(self) -> float:
        return self.fidelities[-1]

    @property
    def p_pd(self) -> float | None:
        """2^k prod P_n times (2 P_dist)^(k+1); None without channel data.

        The exponent k+1 counts one distribution per round plus the initial
        pair. It is explicit for k = 4 and extrapolated by the same count
        for other k.
        """
        if self.p_dist is None:
            return None
        return self.purification_factor * (2.0 * self.p_dist) ** (self.rounds + 1)


def pump_schedule(f: float, rounds: int = 4, params=None) -> PumpSchedule:
    """Iterate the pumping recursion from F_0 = f.

    ``params`` (a ChannelParams) adds the distribution factor so that
    ``p_pd`` is defined.
    """
    if not f > 0.5:
        raise ValueError(f"f={f} must exceed 1/2 (f = 1/2 is the recursion fixed point)")
    if f > 1.0 + 1e-15:
        raise ValueError(f"f={f} exceeds 1")
    if int(rounds) < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    F = f
    fids, probs = [], []
    for _ in range(int(rounds)):
        p = round_probability(F, f)
        F = next_fidelity(F, f)
        fids.append(F)
        probs.append(p)
    factor = 2.0 ** rounds * math.prod(probs)
    p_dist = None
    if params is not None:
        from .distribution import analytic_metrics

        p_dist = analytic_metrics(params).p_dist
    return PumpSchedule(f, int(rounds), tuple(fids), tuple(probs), factor, p_dist)


def purification_factor(f: float, rounds: int = 4) -> float:
    """2^k prod P_n; telescopes to f^(k+1) + (1-f)^(k+1)."""
    return pump_schedule(f, rounds).purification_factor


def required_base_fidelity(F_target: float, rounds: int = 4) -> float:
    """Invert the recursion: the f whose ``rounds``-round fidelity equals ``F_target``.

    Uses the closed form f = r / (1 + r) with r = (F / (1 - F))^(1/(k+1)).
    """
    if not 0.5 < F_target <= 1.0:
        raise ValueError(f"target {F_target} outside (1/2, 1]")
    if F_target == 1.0:
        return 1.0
    r = (F_target / (1.0 - F_target)) ** (1.0 / (rounds + 1))
    return r / (1.0 + r)


# --- density-matrix simulation -------------------------------------------------------


class PumpOutcome(NamedTuple):
    bits: tuple
    probability: float
    accepted: bool
    pair: BellDiagonalPair | None


def _check_pumping_form(pair: BellDiagonalPair, role: str) -> None:
    if not pair.is_pumping_form:
        raise ValueError(
            f"{role} pair ({pair.dominant}/{pair.secondary}, sign {pair.sign}) is not in pumping form; "
            "pairs mixing phi and psi states must pass through the Hadamard frame first"
        )


def pump_round(stationary: BellDiagonalPair, fresh: BellDiagonalPair, measured: str = "fresh") -> list:
    """Simulate one pumping round on the 4-qubit density matrix.

    Returns a PumpOutcome for each of the four measured bit patterns. The
    accepted ones carry the surviving pair (on the unmeasured atoms); each
    accepted pattern has probability P_n, so a round succeeds with 2 P_n.
    Rejected patterns carry no pair: the protocol discards everything.
    """
    _check_pumping_form(stationary, "stationary")
    _check_pumping_form(fresh, "fresh")
    if measured == "fresh":
        targets, table = (2, 3), FRESH_MEASURED_TABLE
    elif measured == "stationary":
        targets, table = (0, 1), STATIONARY_MEASURED_TABLE
    else:
        raise ValueError("measured must be 'fresh' or 'stationary'")
    rho = np.kron(stationary.density_matrix(), fresh.density_matrix())
    rho = apply_gate(XX_GATE, rho, (0, 2), 4)
    rho = apply_gate(XX_GATE, rho, (1, 3), 4)
    out = []
    for bits in BITS:
        red = project_bits(rho, targets, bits, 4)
        p = float(np.trace(red).real)
        survivor = table[(stationary.sign, fresh.sign, bits)]
        if survivor is None or p <= 0:
            out.append(PumpOutcome(bits, p, False, None))
            continue
        red = red / p
        expected = BellDiagonalPair.pumping(survivor, 1.0)
        w = bell_weights(red)
        stray = max(v for k, v in w.items() if k not in (expected.dominant, expected.secondary))
        if stray > 1e-10 or bell_offdiagonal_norm(red) > 1e-10:
            raise ArithmeticError(f"accepted outcome {bits} left a state outside the rank-2 form: {w}")
        pair = BellDiagonalPair(expected.dominant, expected.secondary, float(w[expected.dominant]), survivor)
        out.append(PumpOutcome(bits, p, True, pair))
    return out


def simulate_schedule(f: float, rounds: int = 4, sign: str = "+", fresh_signs=None):
    """Run ``rounds`` simulated rounds (last one measures the stationary pair).

    Returns ``(fidelities, per-outcome probabilities)`` along the accepted
    branch, for comparison with ``pump_schedule``.
    """
    fresh_signs = fresh_signs or [sign] * rounds
    stat = BellDiagonalPair.pumping(sign, f)
    fids, probs = [], []
    for n in range(rounds):
        fresh = BellDiagonalPair.pumping(fresh_signs[n], f)
        measured = "stationary" if n == rounds - 1 else "fresh"
        acc = [o for o in pump_round(stat, fresh, measured) if o.accepted]
        stat = acc[0].pair
        fids.append(stat.fidelity)
        probs.append(acc[0].probability)
    return fids, probs
