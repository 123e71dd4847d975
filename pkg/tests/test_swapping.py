import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coherent_repeater.bell import BellDiagonalPair
from coherent_repeater.chain import chain_fidelity
from coherent_repeater.swapping import (
    analytic_swap_fidelity,
    coarsen_outcomes,
    outcome_lookup,
    swap_pairs,
    swap_pairs_via_gate,
    table_mismatches,
)


def _pair(F, sign="+"):
    return BellDiagonalPair.pumping(sign, F)


@pytest.mark.parametrize("F", [0.5, 0.7, 0.9, 1.0])
def test_equal_pairs_fidelity(F):
    p = _pair(F)
    for o in swap_pairs(p, p, p):
        assert abs(o.pair.fidelity - F * (3 - 6 * F + 4 * F * F)) < 1e-10
        assert abs(o.probability - 1 / 16) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 1.0))
def test_swap_equals_three_link_chain(F):
    assert abs(analytic_swap_fidelity(F) - chain_fidelity(F, 3)) < 1e-12


def test_direct_projection_equals_gate_readout():
    a, b, c = _pair(0.9), _pair(0.7, "-"), _pair(0.8)
    for x, y in zip(swap_pairs(a, b, c), swap_pairs_via_gate(a, b, c)):
        assert (x.i, x.j) == (y.i, y.j)
        assert abs(x.probability - y.probability) < 1e-12
        assert np.max(np.abs(x.rho - y.rho)) < 1e-12


def test_brute_force_labels_symmetric_in_records():
    p = _pair(0.9)
    labels = {(o.i, o.j): o.labels for o in swap_pairs(p, p, p)}
    for (i, j), lab in labels.items():
        assert labels[(j, i)] == lab


def test_printed_table_lookup():
    assert outcome_lookup(3, 1) == ("phi-", "phi+")
    assert outcome_lookup(4, 3) == ("psi+", "psi-")
    with pytest.raises(IndexError):
        outcome_lookup(0, 1)


def test_printed_table_disagrees_with_brute_force():
    # the table is reproduced for reference only; the simulation is authoritative
    assert len(table_mismatches()) == 16


def test_coarsened_readout_keeps_probability():
    p = _pair(0.9)
    merged = coarsen_outcomes(swap_pairs(p, p, p))
    assert len(merged) == 9
    assert abs(sum(o.probability for o in merged) - 1) < 1e-12


def test_mixed_family_rejected():
    bad = BellDiagonalPair("phi+", "psi+", 0.8, "+")
    with pytest.raises(ValueError):
        swap_pairs(bad, _pair(0.9), _pair(0.9))
