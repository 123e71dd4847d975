import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from coherent_repeater.bell import BellDiagonalPair
from coherent_repeater.purification import (
    fidelity_after,
    next_fidelity,
    prob_fin_polynomial,
    pump_round,
    pump_schedule,
    purification_factor,
    required_base_fidelity,
    simulate_schedule,
)

fids = st.floats(0.5 + 1e-6, 1.0)


def test_simulation_matches_recursion_on_random_inputs():
    rng = np.random.default_rng(7)
    for _ in range(200):
        f = rng.uniform(0.5 + 1e-3, 1.0)
        signs = list(rng.choice(["+", "-"], 4))
        F, P = simulate_schedule(f, 4, sign=signs[0], fresh_signs=signs)
        s = pump_schedule(f, 4)
        assert max(abs(a - b) for a, b in zip(F, s.fidelities)) < 1e-10
        assert max(abs(a - b) for a, b in zip(P, s.probabilities)) < 1e-10


@given(fids, st.integers(1, 8))
def test_closed_form_matches_iteration(f, k):
    F = f
    for _ in range(k):
        F = next_fidelity(F, f)
    assert abs(F - fidelity_after(f, k)) < 1e-12


def test_four_rounds_from_three_quarters():
    # 3^5 / (3^5 + 1)
    assert abs(fidelity_after(0.75, 4) - 243 / 244) < 1e-15


@given(fids, st.integers(1, 6))
def test_fidelity_increases_each_round(f, k):
    s = pump_schedule(f, k)
    seq = (f,) + s.fidelities
    assert all(b >= a - 1e-15 for a, b in zip(seq, seq[1:]))


@given(st.floats(0.5 + 1e-4, 1 - 1e-6), st.integers(1, 6))
def test_inversion_agrees_with_root_finder(F, k):
    f = required_base_fidelity(F, k)
    ref = brentq(lambda x: fidelity_after(x, k) - F, 0.5 + 1e-15, 1.0, xtol=1e-15)
    assert abs(f - ref) < 1e-10
    assert abs(fidelity_after(f, k) - F) < 1e-9


@given(fids, st.integers(1, 6))
def test_factor_telescopes(f, k):
    assert math.isclose(purification_factor(f, k), f ** (k + 1) + (1 - f) ** (k + 1), rel_tol=1e-12)


def test_factor_at_unit_fidelity_reduces_to_distribution():
    from coherent_repeater.distribution import ChannelParams, analytic_metrics

    p = ChannelParams(1.0, 25.0)
    s = pump_schedule(1.0, 4, p)
    eta = math.exp(-1)
    assert math.isclose(s.p_pd, (1 - math.exp(-2 * eta)) ** 5, rel_tol=1e-12)
    assert s.p_dist == analytic_metrics(p).p_dist


def test_printed_polynomial_vs_product_form():
    f = np.linspace(0.5, 1.0, 1001)
    poly = prob_fin_polynomial(f)
    prod = np.array([purification_factor(x, 4) for x in f[1:]])
    assert math.isclose(prob_fin_polynomial(1.0), 1.0, rel_tol=1e-12)
    assert math.isclose(prob_fin_polynomial(0.5), 2 * 0.5**5, rel_tol=1e-12)
    # the expansion is not the product: it departs in the interior
    assert np.max(np.abs(poly[1:] / prod - 1)) > 1e-3


def test_each_accepted_outcome_has_round_probability():
    stat = BellDiagonalPair.pumping("+", 0.8)
    fresh = BellDiagonalPair.pumping("+", 0.7)
    out = pump_round(stat, fresh)
    acc = [o for o in out if o.accepted]
    assert len(acc) == 2
    P = 0.5 * (1 - 0.8 + 0.7 * (2 * 0.8 - 1))
    for o in acc:
        assert abs(o.probability - P) < 1e-12
    assert abs(sum(o.probability for o in out) - 1) < 1e-12


@pytest.mark.parametrize("measured", ["fresh", "stationary"])
@pytest.mark.parametrize("s1,s2", [("+", "+"), ("+", "-"), ("-", "+"), ("-", "-")])
def test_accepted_pair_fidelity(measured, s1, s2):
    out = pump_round(BellDiagonalPair.pumping(s1, 0.9), BellDiagonalPair.pumping(s2, 0.6), measured)
    for o in out:
        if o.accepted:
            assert abs(o.pair.fidelity - next_fidelity(0.9, 0.6)) < 1e-12


def test_mixed_family_rejected():
    bad = BellDiagonalPair("phi+", "psi+", 0.8, "+")
    with pytest.raises(ValueError):
        pump_round(bad, BellDiagonalPair.pumping("+", 0.8))


@pytest.mark.parametrize("f", [0.5, 0.3, 1.2])
def test_invalid_base_fidelity(f):
    with pytest.raises(ValueError):
        pump_schedule(f)
