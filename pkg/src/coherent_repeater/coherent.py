"""Exact algebra for superpositions of qubit labels times coherent states.

A state is a list of terms ``c_k |q_k> |gamma_k>`` where ``q_k`` is a tuple
of qubit labels and ``gamma_k`` a tuple of coherent amplitudes, one per
live optical mode. Mixedness never has to be expanded: light that is lost
to the environment is kept as an extra coherent amplitude per term (an env
record), and a detector click is kept as a herald amplitude whose pair
factor is ``<h_j|h_i> - <h_j|0><0|h_i>``. The reduced state of qubits and
live modes is then

    rho = sum_ij c_i conj(c_j) K_ji |q_i, gamma_i><q_j, gamma_j|

with ``K`` the product of all env and herald pair factors.

Qubit labels are integers 0/1 under a basis tag: in the ``"x"`` basis 0
means |+> and 1 means |->, in the ``"z"`` basis they are |0>, |1>.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

PRUNE_TOL = 1e-14
_MERGE_DECIMALS = 13

_LABELS = {"x": ("+", "-"), "z": ("0", "1")}


def _key(values) -> bytes:
    # adding 0.0 folds -0.0 into 0.0 so equal amplitudes hash equal
    return (np.round(values, _MERGE_DECIMALS) + 0.0).tobytes()


def coherent_overlap(beta, gamma):
    """``<beta|gamma> = exp(-|beta|^2/2 - |gamma|^2/2 + conj(beta) gamma)``; broadcasts."""
    beta = np.asarray(beta, dtype=complex)
    gamma = np.asarray(gamma, dtype=complex)
    out = np.exp(-0.5 * np.abs(beta) ** 2 - 0.5 * np.abs(gamma) ** 2 + np.conj(beta) * gamma)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class CoherentTerm:
    amplitude: complex
    qubit_labels: tuple
    mode_amplitudes: tuple


class CoherentSuperposition:
    """Immutable term list; every operation returns a new state."""

    __slots__ = ("amplitudes", "qubits", "modes", "env", "heralds", "basis")

    def __init__(self, amplitudes, qubits, modes, env=None, heralds=None, basis="x"):
        if basis not in _LABELS:
            raise ValueError(f"basis must be 'x' or 'z', got {basis!r}")
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        T = amps.size
        self.amplitudes = amps
        self.qubits = np.asarray(qubits, dtype=np.int8).reshape(T, -1)
        self.modes = np.asarray(modes, dtype=complex).reshape(T, -1)
        self.env = np.zeros((T, 0), complex) if env is None else np.asarray(env, complex).reshape(T, -1)
        self.heralds = (
            np.zeros((T, 0), complex) if heralds is None else np.asarray(heralds, complex).reshape(T, -1)
        )
        self.basis = basis
        for arr in (self.amplitudes, self.qubits, self.modes, self.env, self.heralds):
            arr.setflags(write=False)

    # -- construction ---------------------------------------------------------

    @classmethod
    def product(cls, qubit_labels, mode_amplitudes, basis="z") -> "CoherentSuperposition":
        """Single product term; labels are '0'/'1' (z) or '+'/'-' (x)."""
        names = _LABELS[basis]
        q = [names.index(str(lbl)) for lbl in qubit_labels]
        return cls([1.0], [q], [list(mode_amplitudes)], basis=basis)

    @classmethod
    def from_terms(cls, terms, basis="x", env_records=None) -> "CoherentSuperposition":
        names = _LABELS[basis]
        amps = [t.amplitude for t in terms]
        q = [[names.index(str(lbl)) for lbl in t.qubit_labels] for t in terms]
        m = [list(t.mode_amplitudes) for t in terms]
        return cls(amps, q, m, env=env_records, basis=basis)

    def _replace(self, **kw) -> "CoherentSuperposition":
        fields = dict(
            amplitudes=self.amplitudes,
            qubits=self.qubits,
            modes=self.modes,
            env=self.env,
            heralds=self.heralds,
            basis=self.basis,
        )
        fields.update(kw)
        return CoherentSuperposition(**fields)

    # -- views ----------------------------------------------------------------

    @property
    def n_terms(self) -> int:
        return self.amplitudes.size

    @property
    def n_qubits(self) -> int:
        return self.qubits.shape[1]

    @property
    def n_modes(self) -> int:
        return self.modes.shape[1]

    @property
    def terms(self) -> list:
        names = _LABELS[self.basis]
        return [
            CoherentTerm(complex(c), tuple(names[b] for b in q), tuple(complex(g) for g in m))
            for c, q, m in zip(self.amplitudes, self.qubits, self.modes)
        ]

    @property
    def env_records(self) -> list:
        return [tuple(complex(e) for e in row) for row in self.env]

    @property
    def is_pure(self) -> bool:
        return self.env.shape[1] == 0 and self.heralds.shape[1] == 0

    def __repr__(self):
        return (
            f"CoherentSuperposition(terms={self.n_terms}, qubits={self.n_qubits}, "
            f"modes={self.n_modes}, env={self.env.shape[1]}, heralds={self.heralds.shape[1]}, "
            f"basis={self.basis!r})"
        )

    # -- Gram structure ---------------------------------------------------------

    def environment_kernel(self) -> np.ndarray:
        """``E[i, j] = <env_i|env_j>`` including herald pair factors (Hermitian PSD)."""
        T = self.n_terms
        K = np.ones((T, T), dtype=complex)
        for col in self.env.T:
            K *= coherent_overlap(col[:, None], col[None, :])
        for col in self.heralds.T:
            ov = coherent_overlap(col[:, None], col[None, :])
            vac = np.exp(-0.5 * np.abs(col) ** 2)
            K *= ov - np.outer(vac, vac)
        return K

    def system_gram(self) -> np.ndarray:
        """``S[i, j] = <q_i, gamma_i|q_j, gamma_j>`` over qubits and live modes."""
        S = self._qubit_overlap().astype(complex)
        for col in self.modes.T:
            S *= coherent_overlap(col[:, None], col[None, :])
        return S

    def _qubit_overlap(self) -> np.ndarray:
        return np.all(self.qubits[:, None, :] == self.qubits[None, :, :], axis=2)

    def gram(self) -> np.ndarray:
        """Full Gram matrix of the terms (system times environment)."""
        return self.system_gram() * self.environment_kernel()

    def norm(self) -> float:
        c = self.amplitudes
        return float(np.real(c.conj() @ self.gram() @ c))

    def weight_matrix(self) -> np.ndarray:
        """``A[i, j] = c_i conj(c_j) <env_j|env_i>`` so that rho = sum A_ij |i><j|."""
        c = self.amplitudes
        return np.outer(c, c.conj()) * self.environment_kernel().T

    def purity(self) -> float:
        A = self.weight_matrix()
        S = self.system_gram()
        AS = A @ S
        return float(np.real(np.trace(AS @ AS)) / np.real(np.trace(AS)) ** 2)

    # -- hygiene ----------------------------------------------------------------

    def normalized(self) -> "CoherentSuperposition":
        n = self.norm()
        if n <= 0:
            raise ValueError("cannot normalise a zero state")
        return self._replace(amplitudes=self.amplitudes / np.sqrt(n))

    def simplified(self) -> "CoherentSuperposition":
        """Merge terms with identical labels and amplitudes, then prune tiny ones."""
        keys = {}
        order = []
        amps = []
        for k in range(self.n_terms):
            key = (
                self.qubits[k].tobytes(),
                _key(self.modes[k]),
                _key(self.env[k]),
                _key(self.heralds[k]),
            )
            if key in keys:
                amps[keys[key]] += self.amplitudes[k]
            else:
                keys[key] = len(order)
                order.append(k)
                amps.append(self.amplitudes[k])
        amps = np.array(amps, dtype=complex)
        keep = np.abs(amps) >= PRUNE_TOL
        idx = np.array(order, dtype=int)[keep]
        return CoherentSuperposition(
            amps[keep],
            self.qubits[idx],
            self.modes[idx],
            self.env[idx],
            self.heralds[idx],
            self.basis,
        )

    # -- conversions ---------------------------------------------------------------

    def to_basis(self, basis: str) -> "CoherentSuperposition":
        """Explicit Hadamard on every qubit to switch between 'z' and 'x' labels."""
        if basis not in _LABELS:
            raise ValueError(f"basis must be 'x' or 'z', got {basis!r}")
        if basis == self.basis or self.n_qubits == 0:
            return self._replace(basis=basis)
        amps, qubits = self.amplitudes, self.qubits
        rows = np.arange(self.n_terms)
        for q in range(self.n_qubits):
            # H|b> = (|0> + (-1)^b |1>)/sqrt2 in either direction
            sign = 1 - 2 * qubits[:, q].astype(int)
            q0 = qubits.copy()
            q0[:, q] = 0
            q1 = qubits.copy()
            q1[:, q] = 1
            amps = np.concatenate([amps, amps * sign]) / np.sqrt(2)
            qubits = np.concatenate([q0, q1])
            rows = np.concatenate([rows, rows])
        out = CoherentSuperposition(
            amps, qubits, self.modes[rows], self.env[rows], self.heralds[rows], basis
        )
        return out.simplified()

    def term_vectors(self, cutoff) -> np.ndarray:
        """Columns ``|q_k> (x) |gamma_k>`` in the z basis and truncated Fock space."""
        from .fock import coherent_vector

        vecs = []
        for q, m in zip(self.qubits, self.modes):
            v = np.ones(1, dtype=complex)
            for b in q:
                if self.basis == "z":
                    qv = np.array([1, 0] if b == 0 else [0, 1], dtype=complex)
                else:
                    qv = np.array([1, 1 - 2 * int(b)], dtype=complex) / np.sqrt(2)
                v = np.kron(v, qv)
            for g in m:
                v = np.kron(v, coherent_vector(g, cutoff))
            vecs.append(v)
        return np.stack(vecs, axis=1)

    def to_density_matrix(self, cutoff):
        """Dense density matrix over qubits (z basis) and live modes, trace 1."""
        from .fock import DensityMatrix, _as_cutoff

        cutoff = _as_cutoff(cutoff)
        V = self.term_vectors(cutoff)
        rho = V @ self.weight_matrix() @ V.conj().T
        dims = (2,) * self.n_qubits + (cutoff.dim,) * self.n_modes
        return DensityMatrix(dims, rho / np.trace(rho).real)

    def qubit_density(self) -> np.ndarray:
        """Reduced qubit state in the computational basis (live modes traced)."""
        M = np.ones((self.n_terms, self.n_terms), dtype=complex)
        for col in self.modes.T:
            M *= coherent_overlap(col[None, :], col[:, None])  # <gamma_j|gamma_i>
        A = self.weight_matrix() * M
        nq = self.n_qubits
        dim = 2**nq
        idx = np.zeros(self.n_terms, dtype=int)
        for q in range(nq):
            idx = 2 * idx + self.qubits[:, q]
        B = np.zeros((self.n_terms, dim), dtype=complex)
        B[np.arange(self.n_terms), idx] = 1.0
        rho = B.T @ A @ B
        if self.basis == "x":
            from .bell import HADAMARD, kron_all

            H = kron_all(*([HADAMARD] * nq)) if nq else np.eye(1)
            rho = H @ rho @ H.conj().T
        rho = 0.5 * (rho + rho.conj().T)
        return rho / np.trace(rho).real


def _check_mode(state: CoherentSuperposition, mode: int) -> int:
    if not 0 <= mode < state.n_modes:
        raise IndexError(f"mode {mode} out of range for {state.n_modes} modes")
    return mode


def _check_qubit(state: CoherentSuperposition, qubit: int) -> int:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    return qubit


def _x_sign(state: CoherentSuperposition, qubit: int) -> np.ndarray:
    if state.basis != "x":
        raise ValueError("controlled operations need the qubit in the x basis; call to_basis('x') first")
    return 1 - 2 * state.qubits[:, qubit].astype(int)


def apply_controlled_phase(state: CoherentSuperposition, mode: int, qubit: int, theta: float):
    """``exp(i theta sigma^X a^dag a)``: gamma -> exp(+-i theta) gamma for |+>, |->."""
    _check_mode(state, mode)
    _check_qubit(state, qubit)
    s = _x_sign(state, qubit)
    modes = state.modes.copy()
    modes[:, mode] *= np.exp(1j * theta * s)
    return state._replace(modes=modes).simplified()


def apply_controlled_displacement(
    state: CoherentSuperposition, mode: int, qubit, beta: complex, conditioned: bool = True
):
    """``D(beta sigma^X)`` when conditioned, else the plain displacement ``D(beta)``.

    The composition phase ``exp(i Im(shift conj(gamma)))`` of
    ``D(shift)|gamma>`` is folded into each term amplitude.
    """
    _check_mode(state, mode)
    if conditioned:
        _check_qubit(state, qubit)
        shift = beta * _x_sign(state, qubit)
    else:
        shift = np.full(state.n_terms, complex(beta))
    gamma = state.modes[:, mode]
    phase = np.exp(1j * np.imag(shift * np.conj(gamma)))
    modes = state.modes.copy()
    modes[:, mode] = gamma + shift
    return state._replace(amplitudes=state.amplitudes * phase, modes=modes).simplified()


def apply_beam_splitter(state: CoherentSuperposition, mode_a: int, mode_b: int):
    """Balanced splitter (T = 1/sqrt2, R = i/sqrt2): (x, y) -> ((x+iy)/sqrt2, (ix+y)/sqrt2).

    Feed the signal on ``mode_a`` and the reference on ``mode_b``.
    """
    _check_mode(state, mode_a)
    _check_mode(state, mode_b)
    if mode_a == mode_b:
        raise ValueError("beam splitter needs two distinct modes")
    x = state.modes[:, mode_a]
    y = state.modes[:, mode_b]
    modes = state.modes.copy()
    modes[:, mode_a] = (x + 1j * y) / np.sqrt(2)
    modes[:, mode_b] = (1j * x + y) / np.sqrt(2)
    return state._replace(modes=modes).simplified()


def apply_loss(state: CoherentSuperposition, mode: int, eta: float):
    """Fibre loss: gamma -> sqrt(eta) gamma, with sqrt(1-eta) gamma kept as an env record."""
    _check_mode(state, mode)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta={eta} outside [0, 1]")
    if eta == 1.0:
        return state
    gamma = state.modes[:, mode]
    modes = state.modes.copy()
    modes[:, mode] = np.sqrt(eta) * gamma
    env = np.concatenate([state.env, (np.sqrt(1 - eta) * gamma)[:, None]], axis=1)
    return state._replace(modes=modes, env=env).simplified()


def add_mode(state: CoherentSuperposition, amplitude: complex = 0.0):
    """Append a mode holding the same coherent amplitude in every term."""
    modes = np.concatenate([state.modes, np.full((state.n_terms, 1), complex(amplitude))], axis=1)
    return state._replace(modes=modes)


class MeasurementBranch(NamedTuple):
    outcome: str
    probability: float
    state: CoherentSuperposition | None


def measure_on_off(state: CoherentSuperposition, mode: int) -> list:
    """On/off detection of one mode; returns no_click and click branches.

    The measured mode is removed from both conditional states, which are
    renormalised. A branch with zero probability carries ``state=None``.
    """
    _check_mode(state, mode)
    total = state.norm()
    gamma = state.modes[:, mode]
    rest = np.delete(state.modes, mode, axis=1)

    vac = state._replace(amplitudes=state.amplitudes * np.exp(-0.5 * np.abs(gamma) ** 2), modes=rest)
    click = state._replace(
        modes=rest, heralds=np.concatenate([state.heralds, gamma[:, None]], axis=1)
    )
    out = []
    for name, branch in (("no_click", vac), ("click", click)):
        branch = branch.simplified()
        p = branch.norm() / total if branch.n_terms else 0.0
        p = min(max(p, 0.0), 1.0)
        if p <= 1e-15:
            out.append(MeasurementBranch(name, 0.0, None))
        else:
            out.append(MeasurementBranch(name, p, branch.normalized()))
    return out


def trace_mode(state: CoherentSuperposition, mode: int):
    """Discard a mode by moving its amplitude into the env records."""
    _check_mode(state, mode)
    gamma = state.modes[:, mode]
    env = np.concatenate([state.env, gamma[:, None]], axis=1)
    return state._replace(modes=np.delete(state.modes, mode, axis=1), env=env).simplified()
