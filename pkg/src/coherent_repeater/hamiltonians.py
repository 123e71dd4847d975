"""Full three-level atom + cavity dynamics versus the effective qubit-mode models.

The full model is the interaction-picture Hamiltonian (hbar = 1)

    H(t) = Delta a^dag a - i (exp(-i Delta_L t) V - h.c.),
    V = (g/2) |e><0| a + (Omega/2) (|e><1| + |e><0|),

on the atomic basis (|0>, |1>, |e>) times a truncated cavity mode. It is
periodic with period 2 pi / Delta_L, so long evolutions use the one-period
(Floquet) propagator raised to an integer power plus a remainder.

Effective models act on the two ground levels only:

* ``stated``: the conditional displacement (J1/2)(a + a^dag) sigma^X for
  displacement mode and (J2/2)(sigma^X a^dag a + sigma^X/2) for phase mode,
  each inside the light-shift frame exp(-i Omega^2/(4 Delta_L) sigma^X t) and,
  for Delta != 0, the cavity frame exp(-i Delta a^dag a t).
* ``restored`` (displacement mode only): adds back the unconditional drive
  (J1/2)(a + a^dag) and the cavity Stark shift g^2/(8 Delta_L) a^dag a.
* ``second_order``: the exact adiabatic-elimination generator
  Delta a^dag a + P_g V^dag V P_g / Delta_L.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .bell import PAULI_X
from .fock import TRUNCATION_LIMIT, FockCutoff, TruncationError, coherent_vector

#: empirical constant in the leakage bound max P_e <= C (Omega / (2 Delta_L))^2,
#: pinned from the sweep in benchmarks/hamiltonian_sweep.csv
LEAKAGE_CONSTANT = 16.0

#: factor standing in for ">>" in the regime flags
REGIME_MARGIN = 10.0

NORM_TOLERANCE = 1e-9

MODES = ("displacement", "phase")
MODELS = ("stated", "restored", "second_order")


class IntegrationError(RuntimeError):
    """The adaptive integrator failed (for example, step size underflow)."""


@dataclass(frozen=True)
class FullHamiltonianParams:
    """Couplings and detunings of the driven atom-cavity system (rad/s)."""

    g: float
    omega: float
    delta_l: float
    delta_c: float
    cutoff: FockCutoff = FockCutoff(20)

    def __post_init__(self):
        if self.delta_l == 0:
            raise ValueError("Delta_L must be nonzero")
        if self.g < 0 or self.omega < 0:
            raise ValueError("couplings must be non-negative")
        if not isinstance(self.cutoff, FockCutoff):
            object.__setattr__(self, "cutoff", FockCutoff(int(self.cutoff)))

    @property
    def delta(self) -> float:
        """Two-photon detuning Delta = Delta_L - Delta_C."""
        return self.delta_l - self.delta_c

    @property
    def light_shift(self) -> float:
        """Omega^2 / (2 Delta_L), the splitting of the dressed ground states."""
        return self.omega**2 / (2 * self.delta_l)

    @property
    def small_delta(self) -> float:
        """delta = Delta - Omega^2 / (2 Delta_L)."""
        return self.delta - self.light_shift

    @property
    def dispersive(self) -> bool:
        scale = REGIME_MARGIN * max(self.g, self.omega)
        return abs(self.delta_l) >= scale and abs(self.delta_c) >= scale

    @property
    def strong_driving(self) -> bool:
        rate = max(abs(self.delta), self.g * self.omega / (8 * abs(self.delta_l)))
        return abs(self.light_shift) >= REGIME_MARGIN * rate

    @property
    def phase_regime(self) -> bool:
        # light shift above delta, and delta far from the sideband coupling
        J = self.g * self.omega / (8 * abs(self.delta_l))
        d = abs(self.small_delta)
        return abs(self.light_shift) > d and d >= REGIME_MARGIN * J / 2

    def regime_ok(self, mode: str) -> bool:
        if mode == "displacement":
            return self.dispersive and self.strong_driving
        if mode == "phase":
            return self.dispersive and self.phase_regime
        raise ValueError(f"unknown mode {mode!r}")


class EffectiveCouplings(NamedTuple):
    J1: float
    J2: float


def effective_couplings(params: FullHamiltonianParams) -> EffectiveCouplings:
    """J1 = g Omega / (4 Delta_L) and J2 = g^2 Omega^2 / (32 Delta_L^2 delta).

    J2 is nan when delta = 0 (no dispersive phase coupling).
    """
    g, om, dl = params.g, params.omega, params.delta_l
    J1 = g * om / (4 * dl)
    d = params.small_delta
    if d == 0:
        J2 = 0.0 if g * om == 0 else math.nan
    else:
        J2 = g**2 * om**2 / (32 * dl**2 * d)
    return EffectiveCouplings(J1, J2)


# --- operators ---------------------------------------------------------------------


def _ladder(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1)


def _atom_proj(i: int, j: int) -> np.ndarray:
    P = np.zeros((3, 3))
    P[i, j] = 1.0
    return P


def full_operators(params: FullHamiltonianParams):
    """(V, N) on the 3 x (n_max + 1) space, atom index major."""
    d = params.cutoff.dim
    a = _ladder(d)
    I = np.eye(d)
    V = 0.5 * params.g * np.kron(_atom_proj(2, 0), a) + 0.5 * params.omega * np.kron(
        _atom_proj(2, 1) + _atom_proj(2, 0), I
    )
    N = np.kron(np.eye(3), a.T @ a)
    return V.astype(complex), N.astype(complex)


def full_hamiltonian(params: FullHamiltonianParams, t: float) -> np.ndarray:
    V, N = full_operators(params)
    ph = np.exp(-1j * params.delta_l * t)
    return params.delta * N - 1j * (ph * V - np.conj(ph) * V.conj().T)


# --- full integration --------------------------------------------------------------


class FullEvolution(NamedTuple):
    """Final states (columns), max |e> population and max mode tail over the run."""

    states: np.ndarray
    leakage: float
    tail: float
    norm_error: float


def _solve(params, y0, t_span, t_eval=None, rtol=1e-12, atol=1e-14):
    V, N = full_operators(params)
    Vd = V.conj().T
    DN = params.delta * N
    shape = y0.shape

    def rhs(t, y):
        Y = y.reshape(shape)
        ph = np.exp(-1j * params.delta_l * t)
        return (-1j * (DN @ Y) - (ph * (V @ Y) - np.conj(ph) * (Vd @ Y))).ravel()

    sol = solve_ivp(rhs, t_span, y0.ravel(), method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
    if sol.status != 0:
        raise IntegrationError(sol.message)
    return sol


def _populations(params, Y):
    """(excited population, mode tail weight) per column of Y."""
    d = params.cutoff.dim
    P = np.abs(Y) ** 2
    excited = P[2 * d :].sum(axis=0)
    per_n = P.reshape(3, d, -1).sum(axis=0)
    tail = per_n[max(params.cutoff.n_max - 1, 1) :].sum(axis=0)
    return excited, tail


def integrate_full(
    params: FullHamiltonianParams,
    initial: np.ndarray,
    t: float,
    method: str = "floquet",
    samples_per_period: int = 16,
    rtol: float = 1e-12,
    check: bool = True,
) -> FullEvolution:
    """Evolve ``initial`` (vector or matrix of column states) under the full model.

    ``method="floquet"`` integrates one drive period as a matrix ODE with DOP853
    and reuses it; ``method="direct"`` integrates the states over [0, t].
    Leakage is sampled ``samples_per_period`` times per drive period.
    Raises TruncationError if the weight above n_max - 2 exceeds the limit and
    IntegrationError if the integrator fails or the norm drifts beyond 1e-9.
    """
    Y0 = np.asarray(initial, dtype=complex)
    vector = Y0.ndim == 1
    if vector:
        Y0 = Y0[:, None]
    D = 3 * params.cutoff.dim
    if Y0.shape[0] != D:
        raise ValueError(f"state dimension {Y0.shape[0]} does not match {D}")
    norms0 = np.linalg.norm(Y0, axis=0)
    if np.any(np.abs(norms0 - 1) > 1e-12):
        raise ValueError("initial states must be normalized")
    if t < 0:
        raise ValueError("t must be non-negative")
    T = 2 * math.pi / abs(params.delta_l)

    leak = tail_max = 0.0

    def record(Y):
        nonlocal leak, tail_max
        ex, tl = _populations(params, Y)
        leak = max(leak, float(ex.max()))
        tail_max = max(tail_max, float(tl.max()))

    if method == "direct":
        n_eval = max(2, int(math.ceil(samples_per_period * t / T)) + 1)
        sol = _solve(params, Y0, (0.0, t), t_eval=np.linspace(0.0, t, n_eval), rtol=rtol)
        record(sol.y.reshape(D, -1))
        final = sol.y[:, -1].reshape(D, Y0.shape[1])
    elif method == "floquet":
        k, rem = divmod(t, T)
        k = int(k)
        taus = np.linspace(0.0, T, samples_per_period + 1)
        sol = _solve(params, np.eye(D, dtype=complex), (0.0, T), t_eval=taus, rtol=rtol)
        U_tau = sol.y.T.reshape(-1, D, D)
        U_T = U_tau[-1]
        final = Y0
        block = []
        for i in range(k + 1):
            block.append(final)
            if len(block) == 256 or i == k:
                B = np.concatenate(block, axis=1)
                for U in U_tau[:-1]:
                    record(U @ B)
                block = []
            if i < k:
                final = U_T @ final
        if rem > 0:
            r_eval = np.linspace(0.0, rem, max(2, int(math.ceil(samples_per_period * rem / T)) + 1))
            sol_r = _solve(params, np.eye(D, dtype=complex), (0.0, rem), t_eval=r_eval, rtol=rtol)
            U_r = sol_r.y.T.reshape(-1, D, D)
            for U in U_r:
                record(U @ final)
            final = U_r[-1] @ final
    else:
        raise ValueError(f"unknown method {method!r}")

    norm_err = float(np.max(np.abs(np.linalg.norm(final, axis=0) - 1)))
    if check:
        if tail_max > TRUNCATION_LIMIT:
            raise TruncationError(f"mode weight {tail_max:.2e} above n_max-2; raise the cutoff")
        if norm_err > NORM_TOLERANCE:
            raise IntegrationError(f"norm drift {norm_err:.2e} exceeds {NORM_TOLERANCE:g}")
    return FullEvolution(final[:, 0] if vector else final, leak, tail_max, norm_err)


# --- effective models --------------------------------------------------------------


def effective_generator(params: FullHamiltonianParams, mode: str, model: str = "stated") -> np.ndarray:
    """Time-independent generator on the ground block, frames excluded."""
    d = params.cutoff.dim
    a = _ladder(d)
    n = a.T @ a
    I2, Id = np.eye(2), np.eye(d)
    J1, J2 = effective_couplings(params)
    if model == "second_order":
        V, N = full_operators(params)
        G = (V.conj().T @ V)[: 2 * d, : 2 * d] / params.delta_l
        return params.delta * N[: 2 * d, : 2 * d] + G
    if mode == "displacement":
        H = 0.5 * J1 * np.kron(PAULI_X, a + a.T)
        if model == "restored":
            H = H + 0.5 * J1 * np.kron(I2, a + a.T) + params.g**2 / (8 * params.delta_l) * np.kron(I2, n)
        elif model != "stated":
            raise ValueError(f"unknown model {model!r}")
        return H.astype(complex)
    if mode == "phase":
        if model != "stated":
            raise ValueError("phase mode offers the 'stated' and 'second_order' models")
        return (0.5 * J2 * (np.kron(PAULI_X, n) + 0.5 * np.kron(PAULI_X, Id))).astype(complex)
    raise ValueError(f"unknown mode {mode!r}")


def effective_propagator(params: FullHamiltonianParams, mode: str, t: float, model: str = "stated") -> np.ndarray:
    """Ground-block propagator of an effective model including its frames."""
    H = effective_generator(params, mode, model)
    if model == "second_order":
        return expm(-1j * H * t)
    d = params.cutoff.dim
    n = np.diag(np.arange(d, dtype=float))
    U = expm(-1j * (params.omega**2 / (4 * params.delta_l)) * t * np.kron(PAULI_X, np.eye(d)))
    if params.delta != 0:
        U = expm(-1j * params.delta * t * np.kron(np.eye(2), n)) @ U
    return U @ expm(-1j * H * t)


def test_states(cutoff: FockCutoff, alpha: complex = 1.0) -> np.ndarray:
    """Columns |q> (x) |m> for q in {0, 1} and m in {vacuum, coherent(alpha)}."""
    modes = [coherent_vector(0.0, cutoff), coherent_vector(alpha, cutoff)]
    cols = [np.kron(np.eye(2)[q], m) for q in (0, 1) for m in modes]
    return np.array(cols, dtype=complex).T


test_states.__test__ = False  # not a pytest test


def _embed(ground: np.ndarray, d: int) -> np.ndarray:
    return np.concatenate([ground, np.zeros((d,) + ground.shape[1:], dtype=complex)], axis=0)


@dataclass(frozen=True)
class RegimeReport:
    mode: str
    t: float
    infidelity: dict
    leakage: float
    tail: float
    norm_error: float
    regime_ok: bool


def compare_models(
    params: FullHamiltonianParams,
    mode: str,
    t: float,
    states: np.ndarray | None = None,
    models=None,
    method: str = "floquet",
) -> RegimeReport:
    """Worst-case 1 - |<effective|full>|^2 over ``states`` for each model."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    ok = params.regime_ok(mode)
    if not ok:
        warnings.warn(f"parameters outside the {mode} regime; computing anyway", stacklevel=2)
    if models is None:
        models = ("stated", "restored", "second_order") if mode == "displacement" else ("stated", "second_order")
    d = params.cutoff.dim
    S = test_states(params.cutoff) if states is None else np.asarray(states, dtype=complex)
    if S.ndim == 1:
        S = S[:, None]
    evo = integrate_full(params, _embed(S, d), t, method=method)
    ground = evo.states[: 2 * d]
    result = {}
    for m in models:
        E = effective_propagator(params, mode, t, m) @ S
        overlaps = np.abs(np.einsum("ij,ij->j", E.conj(), ground)) ** 2
        result[m] = float(np.clip(1.0 - overlaps.min(), 0.0, 1.0))
    return RegimeReport(mode, t, result, evo.leakage, evo.tail, evo.norm_error, ok)


def regime_error(
    params: FullHamiltonianParams,
    mode: str,
    t: float,
    states: np.ndarray | None = None,
    model: str = "stated",
) -> float:
    """Worst-case infidelity between the full and one effective evolution."""
    return compare_models(params, mode, t, states, models=(model,)).infidelity[model]


def displacement_time(params: FullHamiltonianParams, beta_abs: float) -> float:
    """Duration giving |beta| = J1 t / 2."""
    J1 = effective_couplings(params).J1
    if J1 == 0:
        raise ValueError("J1 = 0: no displacement")
    return 2 * beta_abs / abs(J1)


def phase_time(params: FullHamiltonianParams, theta_abs: float) -> float:
    """Duration giving |theta| = J2 t / 2."""
    J2 = effective_couplings(params).J2
    if not J2 or math.isnan(J2):
        raise ValueError("J2 undefined or zero: no phase coupling")
    return 2 * theta_abs / abs(J2)


def leakage_bound(params: FullHamiltonianParams, constant: float = LEAKAGE_CONSTANT) -> float:
    return constant * (params.omega / (2 * params.delta_l)) ** 2


# --- sweeps ------------------------------------------------------------------------

SWEEP_COLUMNS = (
    "mode", "g", "omega", "delta_l", "delta_c", "n_max", "t",
    "model", "infidelity", "leakage", "leakage_ratio",
)


def displacement_sweep(ratios=(10, 20, 40, 80), g: float = 1.0, beta_abs: float = 0.3, n_max: int = 20):
    """Rows for g = Omega, Delta = 0 and Delta_L / g over ``ratios`` at fixed |beta|."""
    rows = []
    for r in ratios:
        p = FullHamiltonianParams(g, g, r * g, r * g, FockCutoff(n_max))
        t = displacement_time(p, beta_abs)
        rep = compare_models(p, "displacement", t)
        for m, v in rep.infidelity.items():
            rows.append(_sweep_row(p, t, m, v, rep.leakage))
    return rows


def phase_sweep(g: float = 1.0, omega: float = 10.0, delta_l: float = 500.0, theta_abs: float = 0.3, n_max: int = 20):
    """Illustrative phase-mode point with Omega^2 / (2 Delta_L) = 5 delta."""
    shift = omega**2 / (2 * delta_l)
    delta = shift + shift / 5
    p = FullHamiltonianParams(g, omega, delta_l, delta_l - delta, FockCutoff(n_max))
    t = phase_time(p, theta_abs)
    rep = compare_models(p, "phase", t)
    return [_sweep_row(p, t, m, v, rep.leakage) for m, v in rep.infidelity.items()]


def _sweep_row(p, t, model, infid, leak):
    return {
        "mode": "displacement" if p.delta == 0 else "phase",
        "g": p.g, "omega": p.omega, "delta_l": p.delta_l, "delta_c": p.delta_c,
        "n_max": p.cutoff.n_max, "t": t, "model": model,
        "infidelity": infid, "leakage": leak,
        "leakage_ratio": leak / (p.omega / (2 * p.delta_l)) ** 2 if p.omega else 0.0,
    }


def write_sweep(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
