import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coherent_repeater.bell import (
    BELL_LABELS,
    BELL_MATRIX,
    BELL_STATES,
    HADAMARD,
    BellDiagonalPair,
    apply_gate,
    bell_weights,
    kron_all,
    project_bits,
)

fidelities = st.floats(0.5, 1.0)


def test_bell_basis_is_orthonormal():
    assert np.allclose(BELL_MATRIX.conj().T @ BELL_MATRIX, np.eye(4), atol=1e-15)


def test_pumping_form_labels():
    p = BellDiagonalPair.pumping("+", 0.9)
    m = BellDiagonalPair.pumping("-", 0.9)
    assert (p.dominant, p.secondary, p.family) == ("phi+", "phi-", "phi")
    assert (m.dominant, m.secondary, m.family) == ("psi+", "psi-", "psi")
    assert p.is_pumping_form and m.is_pumping_form


def test_distribution_form_is_mixed_family():
    pair = BellDiagonalPair("phi-", "psi-", 0.8, "-")
    assert pair.family == "mixed"
    assert not pair.is_pumping_form


@pytest.mark.parametrize(
    "args",
    [("phi+", "phi+", 0.9), ("phi+", "chi", 0.9), ("phi+", "phi-", 0.4), ("phi+", "phi-", 1.01)],
)
def test_invalid_pairs_rejected(args):
    with pytest.raises(ValueError):
        BellDiagonalPair(*args)


def test_invalid_sign_rejected():
    with pytest.raises(ValueError):
        BellDiagonalPair("phi+", "phi-", 0.9, "x")


@given(fidelities, st.sampled_from(BELL_LABELS), st.sampled_from(BELL_LABELS))
def test_density_matrix_round_trip(F, dom, sec):
    if dom == sec:
        return
    pair = BellDiagonalPair(dom, sec, F)
    rho = pair.density_matrix()
    assert np.isclose(np.trace(rho).real, 1.0, atol=1e-14)
    assert np.allclose(rho, rho.conj().T)
    w = bell_weights(rho)
    assert np.isclose(w[dom], F, atol=1e-14)
    assert np.isclose(w[sec], 1 - F, atol=1e-14)
    if 0.5 + 1e-9 < F < 1 - 1e-9:
        back = BellDiagonalPair.from_density_matrix(rho, pair.sign)
        assert (back.dominant, back.secondary) == (dom, sec)
        assert np.isclose(back.fidelity, F, atol=1e-12)


def test_from_density_matrix_rejects_rank_three():
    rho = 0.5 * np.outer(BELL_STATES["phi+"], BELL_STATES["phi+"].conj())
    rho += 0.3 * np.outer(BELL_STATES["phi-"], BELL_STATES["phi-"].conj())
    rho += 0.2 * np.outer(BELL_STATES["psi+"], BELL_STATES["psi+"].conj())
    with pytest.raises(ValueError):
        BellDiagonalPair.from_density_matrix(rho)


def test_from_density_matrix_rejects_coherences():
    v = (BELL_STATES["phi+"] + BELL_STATES["psi+"]) / np.sqrt(2)
    with pytest.raises(ValueError):
        BellDiagonalPair.from_density_matrix(np.outer(v, v.conj()))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_apply_gate_matches_explicit_kron(seed):
    rng = np.random.default_rng(seed)
    n = 3
    g = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    full = kron_all(g, np.eye(2))  # targets (0, 1)
    assert np.allclose(apply_gate(g, psi, (0, 1), n), full @ psi, atol=1e-13)
    # targets (2, 0): permute into place with a swap-based explicit operator
    perm = np.zeros((8, 8))
    for i in range(8):
        b = [(i >> 2) & 1, (i >> 1) & 1, i & 1]
        j = (b[2] << 2) | (b[0] << 1) | b[1]  # qubit order (2, 0, 1)
        perm[j, i] = 1
    explicit = perm.T @ kron_all(g, np.eye(2)) @ perm
    assert np.allclose(apply_gate(g, psi, (2, 0), n), explicit @ psi, atol=1e-13)
    rho = np.outer(psi, psi.conj())
    assert np.allclose(apply_gate(g, rho, (2, 0), n), explicit @ rho @ explicit.conj().T, atol=1e-12)


def test_apply_gate_shape_checks():
    with pytest.raises(ValueError):
        apply_gate(np.eye(4), np.ones(4), (0,), 2)
    with pytest.raises(ValueError):
        apply_gate(np.eye(2), np.ones(4), (2,), 2)


def test_project_bits_on_product_state():
    psi = kron_all(np.array([0, 1]), HADAMARD @ np.array([1, 0]))
    rho = np.outer(psi, psi.conj())
    red = project_bits(rho, (0,), (1,), 2)
    assert np.isclose(np.trace(red).real, 1.0)
    assert np.allclose(red, 0.5 * np.ones((2, 2)))
    assert np.isclose(np.trace(project_bits(rho, (0,), (0,), 2)).real, 0.0)
