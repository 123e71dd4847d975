"""Truncated Fock-space oracle: mode operators, coherent vectors, density matrices.

Everything here is dense linear algebra on small matrices. Operators that
are exponentials of unbounded generators (displacements) are built in a
padded space and then cut back to the working cutoff, so their low-lying
matrix elements are exact to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm, logm
from scipy.stats import poisson

from .bell import HADAMARD, PAULI_X

TAIL_TOLERANCE = 1e-10
TRUNCATION_LIMIT = 1e-8


class TruncationError(ValueError):
    """Raised when a state leaks too much weight to the top of the Fock cutoff."""


@dataclass(frozen=True)
class FockCutoff:
    """Fock cutoff ``n_max``; the mode dimension is ``n_max + 1``."""

    n_max: int

    def __post_init__(self):
        if int(self.n_max) < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.n_max}")

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @classmethod
    def for_mean_photons(cls, mean: float) -> "FockCutoff":
        """Cutoff whose Poisson tail above ``n_max`` is far below 1e-10."""
        mean = max(float(mean), 0.0)
        return cls(int(math.ceil(mean + 10.0 * math.sqrt(mean) + 10.0)))


def _as_cutoff(cutoff) -> FockCutoff:
    return cutoff if isinstance(cutoff, FockCutoff) else FockCutoff(int(cutoff))


@lru_cache(maxsize=64)
def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def _padding(n_max: int, beta_abs: float = 0.0) -> int:
    return n_max + 40 + int(math.ceil(4 * beta_abs * beta_abs + 12 * beta_abs))


@dataclass(frozen=True)
class ModeOperators:
    """Single-mode operators at a fixed cutoff."""

    cutoff: FockCutoff
    annihilate: np.ndarray = field(repr=False)
    create: np.ndarray = field(repr=False)
    number: np.ndarray = field(repr=False)

    def displacement(self, beta: complex) -> np.ndarray:
        """``exp(beta a^dag - conj(beta) a)`` via Pade expm in a padded space."""
        return displacement_matrix(complex(beta), self.cutoff.n_max)

    def phase_rotation(self, theta: float) -> np.ndarray:
        """``exp(i theta a^dag a)``, diagonal."""
        return np.diag(np.exp(1j * theta * np.arange(self.cutoff.dim)))


def mode_operators(cutoff) -> ModeOperators:
    cutoff = _as_cutoff(cutoff)
    a = _ladder(cutoff.dim)
    return ModeOperators(cutoff, a, a.conj().T.copy(), np.diag(np.arange(cutoff.dim)).astype(complex))


@lru_cache(maxsize=256)
def displacement_matrix(beta: complex, n_max: int) -> np.ndarray:
    big = _padding(n_max, abs(beta))
    a = _ladder(big + 1)
    D = expm(beta * a.conj().T - np.conj(beta) * a)
    out = D[: n_max + 1, : n_max + 1].copy()
    out.setflags(write=False)
    return out


def coherent_vector(alpha: complex, cutoff) -> np.ndarray:
    """Fock amplitudes of ``|alpha>``, renormalised after truncation.

    Raises TruncationError when the discarded Poisson tail exceeds 1e-10.
    """
    cutoff = _as_cutoff(cutoff)
    alpha = complex(alpha)
    mean = abs(alpha) ** 2
    tail = float(poisson.sf(cutoff.n_max, mean)) if mean > 0 else 0.0
    if tail > TAIL_TOLERANCE:
        raise TruncationError(
            f"cutoff n_max={cutoff.n_max} too small for |alpha|^2={mean:.4g} (tail {tail:.2e})"
        )
    n = np.arange(cutoff.dim)
    # log-space to stay finite for large n
    logmag = -mean / 2 + n * (math.log(abs(alpha)) if mean > 0 else 0.0) - 0.5 * np.array(
        [math.lgamma(k + 1) for k in n]
    )
    vec = np.exp(logmag) * np.exp(1j * n * np.angle(alpha))
    if mean == 0:
        vec = np.zeros(cutoff.dim, dtype=complex)
        vec[0] = 1.0
    return vec / np.linalg.norm(vec)


# --- two-mode passive unitaries -------------------------------------------------


@lru_cache(maxsize=64)
def _sector_blocks(M_key: tuple, n_max: int):
    M = np.array(M_key, dtype=complex).reshape(2, 2)
    H = -1j * logm(M)
    blocks = []
    for n in range(n_max + 1):
        n1 = np.arange(n + 1)
        n2 = n - n1
        G = np.diag(H[0, 0] * n1 + H[1, 1] * n2).astype(complex)
        # a^dag b : |n1, n2> -> sqrt((n1+1) n2) |n1+1, n2-1>
        up = np.sqrt((n1[:-1] + 1) * n2[:-1])
        G[n1[1:], n1[:-1]] += H[0, 1] * up
        G[n1[:-1], n1[1:]] += H[1, 0] * up
        blocks.append((n1, n2, expm(1j * G)))
    return blocks


def passive_two_mode(psi: np.ndarray, axis_a: int, axis_b: int, M, cutoff) -> np.ndarray:
    """Apply the passive unitary whose mode transform is ``(x, y) -> M (x, y)``.

    The unitary is built one photon-number sector at a time, which is exact
    for total photon number <= n_max. Sectors above that are only partly
    representable and are left untouched (documented truncation mask); the
    tail check keeps their weight negligible.
    """
    cutoff = _as_cutoff(cutoff)
    M = np.asarray(M, dtype=complex)
    key = tuple(np.round(M.ravel(), 15).tolist())
    psi = np.moveaxis(np.asarray(psi, dtype=complex), (axis_a, axis_b), (-2, -1))
    out = psi.copy()
    for n1, n2, U in _sector_blocks(key, cutoff.n_max):
        sub = psi[..., n1, n2]
        out[..., n1, n2] = sub @ U.T
    return np.moveaxis(out, (-2, -1), (axis_a, axis_b))


def beam_splitter_matrix() -> np.ndarray:
    """Balanced splitter with T = 1/sqrt2, R = i/sqrt2: (x, y) -> ((x+iy), (ix+y))/sqrt2."""
    return np.array([[1, 1j], [1j, 1]], dtype=complex) / np.sqrt(2)


def loss_matrix(eta: float) -> np.ndarray:
    """Mode/environment splitter: (gamma, 0) -> (sqrt(eta) gamma, sqrt(1-eta) gamma)."""
    t, r = math.sqrt(eta), math.sqrt(1 - eta)
    return np.array([[t, -r], [r, t]], dtype=complex)


# --- density matrices ------------------------------------------------------------


class DensityMatrix:
    """Complex density matrix over a tensor product with subsystem ``dims``."""

    def __init__(self, dims, data, check: bool = True):
        self.dims = tuple(int(d) for d in dims)
        size = int(np.prod(self.dims))
        data = np.asarray(data, dtype=complex).reshape(size, size)
        self.data = 0.5 * (data + data.conj().T)
        if check:
            self.validate()

    @classmethod
    def from_pure(cls, psi, dims) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        return cls(dims, np.outer(psi, psi.conj()))

    def validate(self, tol: float = 1e-10, eig_tol: float = 1e-9) -> None:
        tr = np.trace(self.data).real
        if abs(tr - 1) > tol:
            raise ValueError(f"trace {tr} differs from 1")
        lam = np.linalg.eigvalsh(self.data)
        if lam[0] < -eig_tol:
            raise ValueError(f"negative eigenvalue {lam[0]:.3e}")

    @property
    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def tensor(self) -> np.ndarray:
        return self.data.reshape(self.dims + self.dims)

    def partial_trace(self, keep) -> "DensityMatrix":
        """Reduced state on the subsystems listed in ``keep`` (in that order)."""
        keep = list(keep)
        n = len(self.dims)
        trace_out = [k for k in range(n) if k not in keep]
        t = self.tensor()
        letters = "abcdefghijklmnopqrstuvwxyz"
        row = list(letters[:n])
        col = list(letters[n : 2 * n])
        for k in trace_out:
            col[k] = row[k]
        out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
        red = np.einsum("".join(row) + "".join(col) + "->" + out, t)
        kd = tuple(self.dims[k] for k in keep)
        size = int(np.prod(kd))
        return DensityMatrix(kd, red.reshape(size, size), check=False)

    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))

    def eigh(self):
        return np.linalg.eigh(self.data)

    def __repr__(self):
        return f"DensityMatrix(dims={self.dims}, trace={self.trace:.6f})"


def tail_weight(psi: np.ndarray, mode_axes, n_max: int) -> float:
    """Largest probability weight above ``n_max - 2`` over the given axes."""
    psi = np.asarray(psi)
    prob = np.abs(psi) ** 2
    worst = 0.0
    for ax in mode_axes:
        marg = np.moveaxis(prob, ax, -1).reshape(-1, prob.shape[ax]).sum(axis=0)
        worst = max(worst, float(marg[max(n_max - 1, 1) :].sum()))
    return worst


def _check_tail(psi, mode_axes, cutoff: FockCutoff, report: list) -> None:
    w = tail_weight(psi, mode_axes, cutoff.n_max)
    report.append(w)
    if w > TRUNCATION_LIMIT:
        raise TruncationError(f"weight {w:.2e} above n_max-2 exceeds {TRUNCATION_LIMIT:g}")


# --- qubit-controlled mode unitaries on state tensors -------------------------------

_PLUS = 0.5 * (np.eye(2) + PAULI_X)
_MINUS = 0.5 * (np.eye(2) - PAULI_X)


def controlled_mode_op(psi, q_axis: int, m_axis: int, op_plus, op_minus) -> np.ndarray:
    """Apply ``|+><+| (x) op_plus + |-><-| (x) op_minus`` on (qubit, mode) axes."""
    psi = np.moveaxis(psi, (q_axis, m_axis), (0, 1))
    out = np.einsum("ij,mn,jn...->im...", _PLUS, op_plus, psi) + np.einsum(
        "ij,mn,jn...->im...", _MINUS, op_minus, psi
    )
    return np.moveaxis(out, (0, 1), (q_axis, m_axis))


def single_mode_op(psi, m_axis: int, op) -> np.ndarray:
    psi = np.moveaxis(psi, m_axis, 0)
    out = np.tensordot(op, psi, axes=(1, 0))
    return np.moveaxis(out, 0, m_axis)


def single_qubit_op(psi, q_axis: int, op) -> np.ndarray:
    return single_mode_op(psi, q_axis, op)


def hadamard_all_qubits(psi, q_axes) -> np.ndarray:
    for ax in q_axes:
        psi = single_qubit_op(psi, ax, HADAMARD)
    return psi


def distribution_cutoff(alpha_sq: float) -> FockCutoff:
    """Cutoff covering the largest intermediate amplitude (2 alpha) of the protocol."""
    return FockCutoff.for_mean_photons(4.0 * alpha_sq)


def evolve_distribution_numeric(alpha_sq: float, eta: float, cutoff=None, report=None) -> DensityMatrix:
    """Run the two-node sequence in the Fock representation.

    Order: controlled phase -pi/2 on qubit 1, fibre loss as a splitter onto an
    explicit environment mode, controlled displacement by -i sqrt(eta) alpha on
    qubit 2, controlled phase -pi/2 on qubit 2, unconditional displacement by
    sqrt(eta) alpha. The environment is then traced out.

    Returns the state over (qubit1, qubit2, mode) with qubits in the
    computational basis and both atoms initially in |0>.
    """
    if alpha_sq < 0:
        raise ValueError("alpha_sq must be >= 0")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta={eta} outside [0, 1]")
    cutoff = distribution_cutoff(alpha_sq) if cutoff is None else _as_cutoff(cutoff)
    report = [] if report is None else report
    alpha = math.sqrt(alpha_sq)
    se = math.sqrt(eta)
    d = cutoff.dim
    ops = mode_operators(cutoff)

    # axes: q1, q2, mode, env
    psi = np.einsum("i,j,m,e->ijme", [1, 0], [1, 0], coherent_vector(alpha, cutoff), coherent_vector(0, cutoff))
    psi = psi.astype(complex)
    checks = (2, 3)

    psi = controlled_mode_op(psi, 0, 2, ops.phase_rotation(-np.pi / 2), ops.phase_rotation(np.pi / 2))
    _check_tail(psi, checks, cutoff, report)
    psi = passive_two_mode(psi, 2, 3, loss_matrix(eta), cutoff)
    _check_tail(psi, checks, cutoff, report)
    beta = -1j * se * alpha
    psi = controlled_mode_op(psi, 1, 2, ops.displacement(beta), ops.displacement(-beta))
    _check_tail(psi, checks, cutoff, report)
    psi = controlled_mode_op(psi, 1, 2, ops.phase_rotation(-np.pi / 2), ops.phase_rotation(np.pi / 2))
    psi = single_mode_op(psi, 2, ops.displacement(se * alpha))
    _check_tail(psi, checks, cutoff, report)

    # trace the environment: rho = sum_e |psi_e><psi_e|
    flat = psi.reshape(4 * d, d)
    rho = flat @ flat.conj().T
    return DensityMatrix((2, 2, d), rho / np.trace(rho).real)


def on_off_projectors(dim: int):
    """(no_click, click) projectors on one mode as diagonal masks."""
    no_click = np.zeros(dim)
    no_click[0] = 1.0
    return {"no_click": no_click, "click": 1.0 - no_click}
