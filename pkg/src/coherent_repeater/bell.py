"""Two-qubit Bell states, rank-2 Bell-diagonal pairs and small qubit helpers."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

SQRT2 = np.sqrt(2.0)

KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2

BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")

BELL_STATES = {
    "phi+": (np.kron(KET0, KET0) + np.kron(KET1, KET1)) / SQRT2,
    "phi-": (np.kron(KET0, KET0) - np.kron(KET1, KET1)) / SQRT2,
    "psi+": (np.kron(KET0, KET1) + np.kron(KET1, KET0)) / SQRT2,
    "psi-": (np.kron(KET0, KET1) - np.kron(KET1, KET0)) / SQRT2,
}

# columns in BELL_LABELS order
BELL_MATRIX = np.stack([BELL_STATES[k] for k in BELL_LABELS], axis=1)


def kron_all(*ops):
    """Kronecker product of the arguments, left to right."""
    return reduce(np.kron, ops)


def projector(vec):
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


def bell_family(label: str) -> str:
    return label[:3]


def bell_matrix_elements(rho) -> np.ndarray:
    """Return the 4x4 matrix of ``rho`` in the Bell basis (BELL_LABELS order)."""
    rho = np.asarray(rho, dtype=complex)
    return BELL_MATRIX.conj().T @ rho @ BELL_MATRIX


def bell_weights(rho) -> dict:
    """Diagonal Bell-basis populations of a two-qubit density matrix."""
    diag = np.real(np.diag(bell_matrix_elements(rho)))
    return dict(zip(BELL_LABELS, diag))


def bell_offdiagonal_norm(rho) -> float:
    """Largest off-diagonal Bell-basis element, used for rank checks."""
    m = bell_matrix_elements(rho)
    return float(np.max(np.abs(m - np.diag(np.diag(m)))))


@dataclass(frozen=True)
class BellDiagonalPair:
    """Rank-2 Bell-diagonal pair ``F |dominant><dominant| + (1-F) |secondary><secondary|``.

    ``sign`` is the protocol's +/- tag. In pumping form a '+' pair is a
    phi+/phi- mixture and a '-' pair a psi+/psi- mixture; pairs straight out
    of the distribution step mix families (phi-/psi- or phi+/psi+).
    """

    dominant: str
    secondary: str
    fidelity: float
    sign: str = "+"

    def __post_init__(self):
        if self.dominant not in BELL_STATES or self.secondary not in BELL_STATES:
            raise ValueError(f"unknown Bell label in ({self.dominant}, {self.secondary})")
        if self.dominant == self.secondary:
            raise ValueError("dominant and secondary states must differ")
        if self.sign not in ("+", "-"):
            raise ValueError(f"sign must be '+' or '-', got {self.sign!r}")
        if not (0.5 - 1e-12 <= self.fidelity <= 1.0 + 1e-12):
            raise ValueError(f"fidelity {self.fidelity} outside [1/2, 1]")

    @classmethod
    def pumping(cls, sign: str, fidelity: float) -> "BellDiagonalPair":
        """Pair in pumping form: '+' -> phi+/phi-, '-' -> psi+/psi-."""
        if sign == "+":
            return cls("phi+", "phi-", fidelity, "+")
        if sign == "-":
            return cls("psi+", "psi-", fidelity, "-")
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")

    @property
    def family(self) -> str:
        fam = bell_family(self.dominant)
        return fam if fam == bell_family(self.secondary) else "mixed"

    @property
    def is_pumping_form(self) -> bool:
        expected = ("phi+", "phi-") if self.sign == "+" else ("psi+", "psi-")
        return (self.dominant, self.secondary) == expected

    def density_matrix(self) -> np.ndarray:
        F = self.fidelity
        return F * projector(BELL_STATES[self.dominant]) + (1 - F) * projector(
            BELL_STATES[self.secondary]
        )

    @classmethod
    def from_density_matrix(
        cls, rho, sign: str = "+", tol: float = 1e-9, prefer=()
    ) -> "BellDiagonalPair":
        """Read a rank-2 Bell-diagonal pair off a density matrix.

        ``prefer`` lists labels that win ties (e.g. the empty secondary slot
        of a pure state). Raises ValueError if ``rho`` has Bell-basis
        coherences or more than two populated Bell states (beyond ``tol``).
        """
        rho = np.asarray(rho, dtype=complex)
        rho = rho / np.trace(rho).real
        if bell_offdiagonal_norm(rho) > tol:
            raise ValueError("state is not Bell-diagonal")
        w = bell_weights(rho)
        prefer = list(prefer)
        rank = {k: (prefer.index(k) if k in prefer else len(prefer)) for k in BELL_LABELS}
        order = sorted(BELL_LABELS, key=lambda k: (-round(w[k], 11), rank[k]))
        if w[order[2]] > tol:
            raise ValueError(f"state has rank > 2 in the Bell basis: {w}")
        fid = min(max(w[order[0]], 0.5), 1.0)
        return cls(order[0], order[1], fid, sign)


def apply_gate(gate, state, targets, n_qubits: int) -> np.ndarray:
    """Apply a k-qubit ``gate`` to ``targets`` of an n-qubit vector or density matrix."""
    gate = np.asarray(gate, dtype=complex)
    targets = list(targets)
    k = len(targets)
    if gate.shape != (2**k, 2**k):
        raise ValueError(f"gate shape {gate.shape} does not act on {k} qubits")
    if len(set(targets)) != k or any(not 0 <= t < n_qubits for t in targets):
        raise ValueError(f"bad target qubits {targets} for {n_qubits} qubits")
    state = np.asarray(state, dtype=complex)
    g = gate.reshape((2,) * (2 * k))
    size = 2**n_qubits
    if state.shape == (size,):
        t = state.reshape((2,) * n_qubits)
        t = np.tensordot(g, t, axes=(list(range(k, 2 * k)), targets))
        return np.moveaxis(t, list(range(k)), targets).reshape(size)
    if state.shape == (size, size):
        t = state.reshape((2,) * (2 * n_qubits))
        t = np.tensordot(g, t, axes=(list(range(k, 2 * k)), targets))
        t = np.moveaxis(t, list(range(k)), targets)
        cols = [n_qubits + q for q in targets]
        t = np.tensordot(t, g.conj(), axes=(cols, list(range(k, 2 * k))))
        t = np.moveaxis(t, list(range(2 * n_qubits - k, 2 * n_qubits)), cols)
        return t.reshape(size, size)
    raise ValueError(f"state shape {state.shape} is not a {n_qubits}-qubit vector or density matrix")


def project_bits(rho, targets, bits, n_qubits: int) -> np.ndarray:
    """Unnormalised reduced state of the other qubits after finding ``bits`` on ``targets``."""
    t = np.asarray(rho, dtype=complex).reshape((2,) * (2 * n_qubits))
    index = [slice(None)] * (2 * n_qubits)
    for q, b in zip(targets, bits):
        index[q] = b
        index[n_qubits + q] = b
    red = t[tuple(index)]
    m = n_qubits - len(targets)
    return red.reshape(2**m, 2**m)
