import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_genlaguerre, gammaln

from coherent_repeater.fock import (
    DensityMatrix,
    FockCutoff,
    TruncationError,
    beam_splitter_matrix,
    coherent_vector,
    displacement_matrix,
    loss_matrix,
    mode_operators,
    passive_two_mode,
)

amps = st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False)


def displacement_element(m, n, beta):
    # <m|D(beta)|n> via generalized Laguerre polynomials
    x = abs(beta) ** 2
    if m >= n:
        pref = beta ** (m - n) * math.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
        return pref * math.exp(-x / 2) * eval_genlaguerre(n, m - n, x)
    pref = (-np.conj(beta)) ** (n - m) * math.exp(0.5 * (gammaln(m + 1) - gammaln(n + 1)))
    return pref * math.exp(-x / 2) * eval_genlaguerre(m, n - m, x)


def test_cutoff_rules():
    assert FockCutoff(5).dim == 6
    with pytest.raises(ValueError):
        FockCutoff(0)
    c = FockCutoff.for_mean_photons(4.0)
    assert c.n_max == math.ceil(4 + 10 * 2 + 10)


@settings(max_examples=25)
@given(amps)
def test_displacement_matches_laguerre_closed_form(beta):
    D = displacement_matrix(complex(beta), 12)
    for m in range(8):
        for n in range(8):
            assert abs(D[m, n] - displacement_element(m, n, complex(beta))) < 1e-12


@settings(max_examples=25)
@given(amps)
def test_displacement_of_vacuum_is_coherent(alpha):
    cut = FockCutoff(30)
    ops = mode_operators(cut)
    vac = np.zeros(cut.dim, complex)
    vac[0] = 1
    assert np.allclose(ops.displacement(alpha) @ vac, coherent_vector(alpha, cut), atol=1e-10)


def test_coherent_vector_truncation_error():
    with pytest.raises(TruncationError):
        coherent_vector(3.0, FockCutoff(10))


def test_coherent_vector_amplitudes():
    v = coherent_vector(0.7j, FockCutoff(25))
    n = np.arange(26)
    ref = np.exp(-0.49 / 2) * (0.7j) ** n / np.array([math.sqrt(math.factorial(k)) for k in n])
    assert np.allclose(v, ref, atol=1e-14)


def test_phase_rotation_rotates_amplitude():
    cut = FockCutoff(25)
    ops = mode_operators(cut)
    v = ops.phase_rotation(0.4) @ coherent_vector(1.0, cut)
    assert np.allclose(v, coherent_vector(np.exp(0.4j), cut), atol=1e-12)


@settings(max_examples=20)
@given(amps, amps)
def test_beam_splitter_maps_coherent_products(x, y):
    cut = FockCutoff(40)
    psi = np.einsum("i,j->ij", coherent_vector(x, cut), coherent_vector(y, cut))
    out = passive_two_mode(psi, 0, 1, beam_splitter_matrix(), cut)
    a = (x + 1j * y) / math.sqrt(2)
    b = (1j * x + y) / math.sqrt(2)
    ref = np.einsum("i,j->ij", coherent_vector(a, cut), coherent_vector(b, cut))
    assert np.max(np.abs(out - ref)) < 1e-9


@pytest.mark.parametrize("eta", [1.0, 0.7, 0.2, 0.0])
def test_loss_matrix_splits_coherent_state(eta):
    cut = FockCutoff(25)
    alpha = 1.2
    psi = np.einsum("i,j->ij", coherent_vector(alpha, cut), coherent_vector(0, cut))
    out = passive_two_mode(psi, 0, 1, loss_matrix(eta), cut)
    ref = np.einsum(
        "i,j->ij",
        coherent_vector(math.sqrt(eta) * alpha, cut),
        coherent_vector(math.sqrt(1 - eta) * alpha, cut),
    )
    assert np.max(np.abs(out - ref)) < 1e-9


def test_density_matrix_partial_trace_of_product():
    rng = np.random.default_rng(3)
    a = rng.normal(size=2) + 1j * rng.normal(size=2)
    b = rng.normal(size=5) + 1j * rng.normal(size=5)
    a /= np.linalg.norm(a)
    b /= np.linalg.norm(b)
    rho = DensityMatrix.from_pure(np.kron(a, b), (2, 5))
    assert np.isclose(rho.trace, 1.0)
    assert np.isclose(rho.purity(), 1.0)
    assert np.allclose(rho.partial_trace([0]).data, np.outer(a, a.conj()))
    assert np.allclose(rho.partial_trace([1]).data, np.outer(b, b.conj()))


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix((2,), np.array([[1.0, 0], [0, 1.0]]))  # trace 2
    with pytest.raises(ValueError):
        DensityMatrix((2,), np.array([[1.5, 0], [0, -0.5]]))  # negative eigenvalue
