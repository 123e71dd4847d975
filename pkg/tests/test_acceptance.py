"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line listing its clauses and then
asserts that all clauses hold. Tolerances are the stated ones; criteria whose
literal values are not attainable fail visibly rather than being relaxed.
"""

import math
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from coherent_repeater.bell import BellDiagonalPair
from coherent_repeater.chain import (
    RepeaterPlan,
    chain_fidelity,
    expected_attempts,
    forward_final_fidelity,
    plan_for,
    plan_segment_length,
)
from coherent_repeater.cli import fig2_row
from coherent_repeater.distribution import ChannelParams, run_distribution
from coherent_repeater.hamiltonians import displacement_sweep
from coherent_repeater.montecarlo import TrialConfig, estimate_chain
from coherent_repeater.purification import (
    fidelity_after,
    prob_fin_polynomial,
    pump_schedule,
    purification_factor,
    simulate_schedule,
)
from coherent_repeater.swapping import analytic_swap_fidelity, swap_pairs

GRID = [(a, l) for a in (0.25, 1.0, 2.0, 3.0) for l in (0.0, 5.0, 25.0, 50.0)]


def _verdict(capsys, number, title, clauses):
    ok = all(v for v, _ in clauses.values())
    parts = "; ".join(f"{k} {'ok' if v else 'FAILED'} ({d})" for k, (v, d) in clauses.items())
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number} [{title}]: {parts}")
    failed = [k for k, (v, _) in clauses.items() if not v]
    assert not failed, f"criterion {number}: failed clauses {failed}"


def test_criterion_1_distribution_closed_forms(capsys):
    t0 = time.perf_counter()
    err = 0.0
    for a2, ell in GRID:
        eta = math.exp(-ell / 25)
        f = 0.5 * (1 + math.exp(-2 * a2 * (1 - eta)))
        pd = 0.5 * (1 - math.exp(-2 * eta * a2))
        for engine in ("coherent", "fock"):
            for o in run_distribution(ChannelParams(a2, ell), engine)[:2]:
                err = max(err, abs(o.pair.fidelity - f), abs(o.probability - pd))
    dt = time.perf_counter() - t0
    _verdict(capsys, 1, "distribution closed forms", {
        "f and P_dist to 1e-8, both engines": (err <= 1e-8, f"max error {err:.1e}"),
        "runtime < 10 s": (dt < 10, f"{dt:.2f} s"),
    })


def test_criterion_2_purification(capsys):
    rng = np.random.default_rng(20240)
    sim = 0.0
    for _ in range(200):
        f = rng.uniform(0.5 + 1e-3, 1.0)
        signs = list(rng.choice(["+", "-"], 4))
        F, P = simulate_schedule(f, 4, sign=signs[0], fresh_signs=signs)
        s = pump_schedule(f, 4)
        sim = max(sim, *(abs(a - b) for a, b in zip(F + P, s.fidelities + s.probabilities)))
    F4 = fidelity_after(0.75, 4)
    fs = np.linspace(0.5, 1.0, 1001)[1:]
    poly_rel = max(abs(prob_fin_polynomial(x) / purification_factor(x, 4) - 1) for x in fs)
    eta = math.exp(-1)
    pd = 2 * 0.5 * (1 - math.exp(-2 * eta))
    at_one = prob_fin_polynomial(1.0) * pd**5
    unit = abs(at_one / (1 - math.exp(-2 * eta)) ** 5 - 1)
    _verdict(capsys, 2, "purification recursion", {
        "simulation vs recursion to 1e-10 on 200 inputs": (sim <= 1e-10, f"max {sim:.1e}"),
        "F4(0.75) = 0.99596 +- 1e-5": (abs(F4 - 0.99596) <= 1e-5, f"F4 = {F4:.8f} = 243/244"),
        "F4(0.75) near unity": (F4 > 0.99, f"{F4:.6f}"),
        "printed polynomial = product form to 1e-9 rel on 1000 points": (poly_rel <= 1e-9, f"max rel {poly_rel:.2e}"),
        "polynomial at f=1 gives (1-exp(-2 eta a2))^5": (unit <= 1e-9, f"rel {unit:.1e}"),
    })


def test_criterion_3_swapping(capsys):
    pair = BellDiagonalPair.pumping("+", 0.9)
    out = swap_pairs(pair, pair, pair)
    matches = sum(bool(o.matches_table) for o in out)
    fs = 0.0
    for F in np.linspace(0.5, 1.0, 51):
        p = BellDiagonalPair.pumping("+", float(F))
        fs = max(fs, max(abs(o.pair.fidelity - F * (3 - 6 * F + 4 * F * F)) for o in swap_pairs(p, p, p)))
    ch = max(abs(chain_fidelity(F, 3) - F * (3 - 6 * F + 4 * F * F)) for F in np.linspace(0.5, 1.0, 1001))
    _verdict(capsys, 3, "entanglement swapping", {
        "16 brute-force outcomes match the printed table": (matches == 16, f"{matches}/16 match"),
        "conditional fidelity = F(3-6F+4F^2) to 1e-10": (fs <= 1e-10, f"max {fs:.1e}"),
        "chain_fidelity(F,3) = F(3-6F+4F^2) to 1e-12": (ch <= 1e-12, f"max {ch:.1e}"),
    })


def _largest_steps(a2, step):
    ells = np.arange(0.0, 200.0 + step / 2, step)
    rows = [fig2_row((a2, float(l), 25.0)) for l in ells]
    return rows, max(float(np.max(np.abs(np.diff([r[k] for r in rows])))) for k in ("F1", "F2", "F4", "F_S"))


def test_criterion_4_distance_curves(capsys):
    t0 = time.perf_counter()
    ordered = pd_dec = finite = True
    ratios = []
    for a2 in (1.0, 2.0, 3.0):
        rows, coarse = _largest_steps(a2, 0.5)
        _, fine = _largest_steps(a2, 0.25)
        # a jump would survive refinement; a continuous curve halves its largest step
        ratios.append(coarse / fine)
        for r in rows:
            finite &= all(math.isfinite(r[k]) for k in ("f", "F1", "F2", "F4", "F_S", "P_pd"))
            ordered &= r["F4"] >= r["F2"] >= r["F1"] >= r["f"] >= 0.5 and r["F_S"] <= r["F4"]
        pds = [r["P_pd"] for r in rows]
        pd_dec &= all(b < a for a, b in zip(pds, pds[1:]))
    for f in np.linspace(0.5, 1.0, 2001)[1:]:
        F1, F2, F4 = (fidelity_after(f, k) for k in (1, 2, 4))
        ordered &= F4 >= F2 >= F1 >= f > 0.5 and chain_fidelity(F4, 3) <= F4
    dt = time.perf_counter() - t0
    _verdict(capsys, 4, "distance curves", {
        "continuous": (bool(finite) and min(ratios) > 1.8,
                       "largest step shrinks x" + "/".join(f"{x:.2f}" for x in ratios) + " on halving"),
        "F4 >= F2 >= F1 >= f >= 1/2 and F_S <= F4": (bool(ordered), "all grid points"),
        "P_pd decreasing in l for alpha^2 in {1,2,3}": (bool(pd_dec), "strict"),
        "runtime < 30 s": (dt < 30, f"{dt:.2f} s"),
    })


def test_criterion_5_segment_planning(capsys):
    rt = 0.0
    for F in (0.8, 0.85, 0.9, 0.95):
        for N in range(1, 16):
            for a2 in (1.0, 2.0, 3.0):
                ell = plan_segment_length(F, N, a2)
                rt = max(rt, abs(forward_final_fidelity(ell, N, a2) - F))
    alpha_trend = True
    for N in (1, 3, 5, 7, 9):
        for F in (0.8, 0.85, 0.9, 0.95):
            plans = [plan_for(F, N, a2) for a2 in (1.0, 2.0, 3.0)]
            alpha_trend &= all(p.ell_km > q.ell_km and p.rate_rescaled < q.rate_rescaled
                               for p, q in zip(plans, plans[1:]))
    n_trend = True
    for a2 in (1.0, 2.0, 3.0):
        for F in (0.8, 0.85, 0.9, 0.95):
            ells = [plan_segment_length(F, N, a2) for N in range(1, 16)]
            n_trend &= all(b <= a for a, b in zip(ells, ells[1:]))
    _verdict(capsys, 5, "segment planning", {
        "round trip to 1e-9": (rt <= 1e-9, f"max {rt:.1e}"),
        "larger alpha^2: smaller l, larger rate": (bool(alpha_trend), "N in 1..9"),
        "l nonincreasing in N": (bool(n_trend), "N in 1..15"),
    })


def test_criterion_6_waiting_time(capsys):
    t0 = time.perf_counter()
    P_ref = RepeaterPlan(1.0, 25.0, 1).P_total
    worst = 0.0
    for N in (1, 2, 3, 7):
        for P in (0.5, 0.1, P_ref):
            s = estimate_chain(TrialConfig(100_000, 1, segments=N, p_cycle=P))
            worst = max(worst, abs(s.z_score))
    dt = time.perf_counter() - t0
    z2 = 2 / Fraction(1, 2) - 1 / (1 - Fraction(1, 4))
    _verdict(capsys, 6, "waiting time Z_N", {
        "Monte Carlo means within 3 SE": (worst <= 3, f"largest |z| {worst:.2f}"),
        "runtime < 60 s": (dt < 60, f"{dt:.2f} s"),
        "Z_2(1/2) = 8/3": (z2 == Fraction(8, 3) and abs(expected_attempts(2, 0.5) - 8 / 3) <= 1e-15,
                           f"exact {z2}, float {expected_attempts(2, 0.5)!r}"),
    })


def test_criterion_7_effective_hamiltonian(capsys):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = displacement_sweep((10, 20, 40, 80), beta_abs=0.3, n_max=20)
    dt = time.perf_counter() - t0
    inf = [r["infidelity"] for r in rows if r["model"] == "stated"]
    second = [r["infidelity"] for r in rows if r["model"] == "second_order"]
    leak = {r["delta_l"]: r["leakage"] for r in rows}
    mono = all(b < a for a, b in zip(inf, inf[1:]))
    _verdict(capsys, 7, "effective displacement Hamiltonian", {
        "infidelity decreases with Delta_L/g": (mono, "stated model " + ", ".join(f"{x:.3f}" for x in inf)),
        "infidelity < 1e-2 at Delta_L/g = 20": (inf[1] < 1e-2, f"stated model {inf[1]:.3f}; "
                                                 f"second-order model {second[1]:.2e}"),
        "leakage < 0.01 for Delta_L/g >= 20": (all(leak[r] < 0.01 for r in (20.0, 40.0, 80.0)),
                                               f"{leak[20.0]:.2e} at 20"),
        "runtime < 5 min at cutoff <= 40": (dt < 300, f"{dt:.1f} s at n_max 20"),
    })


def test_criterion_8_engine_equivalence(capsys):
    worst = 0.0
    for a2, ell in GRID:
        p = ChannelParams(a2, ell)
        for a, b in zip(run_distribution(p, "coherent"), run_distribution(p, "fock")):
            assert a.pattern == b.pattern
            if a.rho is None or b.rho is None:
                assert a.rho is None and b.rho is None
                continue
            worst = max(worst, float(np.max(np.abs(a.rho - b.rho))), abs(a.probability - b.probability))
    _verdict(capsys, 8, "engine equivalence", {
        "coherent vs Fock density matrices entrywise to 1e-8": (worst <= 1e-8, f"max {worst:.1e}"),
    })
