"""Oracle-equivalence suite behind ``coherent-repeater selftest``.

Each check compares two independent routes to the same quantity and yields a
row (check, value, tolerance, passed).
"""

from __future__ import annotations

import csv
import io
import math
import warnings

import numpy as np


def _row(name, value, tol):
    value = float(value)
    return {"check": name, "value": value, "tolerance": tol, "passed": bool(value <= tol)}


def check_distribution():
    from .distribution import ChannelParams, analytic_metrics, run_distribution

    err = dm = 0.0
    for a2 in (0.25, 1.0):
        for ell in (0.0, 25.0):
            p = ChannelParams(a2, ell)
            m = analytic_metrics(p)
            co = run_distribution(p, "coherent")
            fo = run_distribution(p, "fock")
            for o in co[:2] + fo[:2]:
                err = max(err, abs(o.pair.fidelity - m.f), abs(o.probability - m.p_dist))
            dm = max(dm, max(float(np.max(np.abs(a.rho - b.rho))) for a, b in zip(co[:2], fo[:2])))
    return [
        _row("distribution engines vs closed forms", err, 1e-8),
        _row("coherent vs Fock conditional states", dm, 1e-8),
    ]


def check_purification():
    from .purification import pump_schedule, simulate_schedule

    err = 0.0
    for f in (0.55, 0.75, 0.9, 0.99):
        s = pump_schedule(f, 4)
        for signs in (["+"] * 4, ["-", "+", "-", "-"]):
            F, P = simulate_schedule(f, 4, sign=signs[0], fresh_signs=signs)
            err = max(err, max(abs(a - b) for a, b in zip(F, s.fidelities)))
            err = max(err, max(abs(a - b) for a, b in zip(P, s.probabilities)))
    return [_row("pumping simulation vs recursion", err, 1e-10)]


def check_swapping():
    from .bell import BellDiagonalPair
    from .swapping import analytic_swap_fidelity, swap_pairs, swap_pairs_via_gate

    diff = fs = tot = 0.0
    for F in (0.6, 0.9):
        pair = BellDiagonalPair.pumping("+", F)
        a = swap_pairs(pair, pair, pair)
        b = swap_pairs_via_gate(pair, pair, pair)
        diff = max(diff, max(float(np.max(np.abs(x.rho - y.rho))) for x, y in zip(a, b)))
        fs = max(fs, max(abs(o.pair.fidelity - analytic_swap_fidelity(F)) for o in a))
        tot = max(tot, abs(sum(o.probability for o in a) - 1.0))
    return [
        _row("swap projection vs gate-then-readout", diff, 1e-12),
        _row("swap fidelity vs F(3-6F+4F^2)", fs, 1e-10),
        _row("swap outcome probabilities sum to 1", tot, 1e-12),
    ]


def check_chain():
    from .chain import chain_fidelity, compose_pair, expected_attempts
    from .kernels import z_tail_sum

    comp = 0.0
    for F in (0.6, 0.8, 0.95):
        acc = F
        for N in range(2, 16):
            acc = compose_pair(acc, F)
            comp = max(comp, abs(acc - chain_fidelity(F, N)))
    z = max(abs(expected_attempts(N, P) / z_tail_sum(N, P) - 1) for N in (3, 20, 40) for P in (0.5, 0.01))
    return [
        _row("chain fidelity vs repeated pairwise composition", comp, 1e-12),
        _row("Z_N alternating sum vs survival series", z, 1e-7),
        _row("Z_2(1/2) = 8/3", abs(expected_attempts(2, 0.5) - 8 / 3), 1e-15),
    ]


def check_kernels():
    from . import kernels
    from .rng import Xoshiro256StarStar

    rng = Xoshiro256StarStar((1, 2, 3, 4))
    ref = (11520, 0, 1509978240, 1215971899390074240)
    rows = [_row("xoshiro256** reference outputs", float(tuple(rng.next_u64() for _ in range(4)) != ref), 0.0)]
    try:
        fast = kernels.get_backend("cython")
    except ImportError:
        return rows
    slow = kernels.get_backend("python")
    a = slow.cycle_trials(3, 0.2, 7, 11, 500)
    b = fast.cycle_trials(3, 0.2, 7, 11, 500)
    c = slow.pumping_trials(2, 0.4, [0.8, 0.7], 7, 11, 50)
    d = fast.pumping_trials(2, 0.4, [0.8, 0.7], 7, 11, 50)
    same = all(np.array_equal(x, y) for x, y in zip(a + c, b + d))
    rows.append(_row("compiled vs fallback kernels bit-identical", float(not same), 0.0))
    return rows


def check_hamiltonians():
    from .fock import FockCutoff
    from .hamiltonians import FullHamiltonianParams, _embed, integrate_full, test_states

    p = FullHamiltonianParams(1.0, 1.0, 10.0, 10.0, FockCutoff(12))
    Y = _embed(test_states(p.cutoff, 0.5), p.cutoff.dim)
    a = integrate_full(p, Y, 3.7)
    b = integrate_full(p, Y, 3.7, method="direct")
    return [
        _row("Floquet vs direct integration", float(np.max(np.abs(a.states - b.states))), 1e-9),
        _row("full-model norm drift", a.norm_error, 1e-9),
    ]


def _roundtrip(rows, columns):
    # render as the CLI would, then read back
    from .cli import _fmt

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return list(csv.DictReader(io.StringIO(buf.getvalue())))


def check_closed_loop():
    from .chain import RateModel, chain_fidelity, expected_attempts, forward_final_fidelity
    from .cli import FIG2_COLUMNS, _fig4_columns, fig2_row, fig4_row
    from .distribution import fidelity_from, p_dist_from
    from .purification import fidelity_after, purification_factor

    err2 = 0.0
    rows = [fig2_row((a, l, 25.0)) for a in (1.0, 3.0) for l in (0.0, 30.0, 150.0)]
    for r in _roundtrip(rows, FIG2_COLUMNS):
        a, l = float(r["alpha_sq"]), float(r["ell_km"])
        eta = math.exp(-l / 25.0)
        f = fidelity_from(a, eta)
        F4 = fidelity_after(f, 4)
        pd = purification_factor(f, 4) * (2 * p_dist_from(a, eta)) ** 5
        err2 = max(err2, abs(float(r["f"]) - f), abs(float(r["F1"]) - fidelity_after(f, 1)),
                   abs(float(r["F2"]) - fidelity_after(f, 2)), abs(float(r["F4"]) - F4),
                   abs(float(r["F_S"]) - chain_fidelity(F4, 3)), abs(float(r["P_pd"]) / pd - 1))
    err4 = 0.0
    rows = [fig4_row((a, F, N, 4, 1.0, 25.0)) for a in (1.0, 2.0) for F in (0.8, 0.95) for N in (1, 3, 7)]
    v = RateModel().light_speed
    for r in _roundtrip(rows, _fig4_columns(4)):
        a, l, N = float(r["alpha_sq"]), float(r["ell_km"]), int(r["N"])
        Z = expected_attempts(N, float(r["P_total"]))
        err4 = max(err4, abs(forward_final_fidelity(l, N, a) - float(r["F_target"])),
                   abs(float(r["F_final"]) - float(r["F_target"])), abs(float(r["L_km"]) - N * l),
                   abs(float(r["Z_N"]) / Z - 1), abs(float(r["rate_rescaled"]) * 14 * l * 1e3 * Z / v - 1))
    return [
        _row("fig2 rows recomputed from their own columns", err2, 1e-12),
        _row("fig4 rows recomputed from their own columns", err4, 1e-9),
    ]


CHECKS = (
    check_distribution, check_purification, check_swapping, check_chain,
    check_kernels, check_hamiltonians, check_closed_loop,
)


def run_checks() -> list:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = []
        for fn in CHECKS:
            rows.extend(fn())
    return rows
