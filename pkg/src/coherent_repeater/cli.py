"""Command-line front end: sweeps, figure data, Monte Carlo and verification.

Every command writes CSV (to ``--output`` or stdout) starting with a provenance
comment line, followed by a header row. Human-readable summaries go to stderr.

Exit codes: 0 success, 1 invalid configuration, 2 infeasible plan,
3 numerical-verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import SCHEMA, ConfigError, RunConfig

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3

COMMANDS = ("distribute", "purify", "swap", "fig2", "fig4", "montecarlo", "verify-hamiltonians", "selftest")

# flag name -> config key
FLAGS = {
    "alpha-sq": "alpha_sq",
    "ell": "ell_km",
    "ell0": "ell0_km",
    "segments": "segments",
    "rounds": "rounds",
    "p-sw": "p_sw",
    "trials": "trials",
    "seed": "seed",
    "cutoff": "cutoff",
    "output": "output",
    "workers": "workers",
    "f-final": "f_final",
    "f-grid": "f_grid",
    "p-cycle": "p_cycle",
    "fidelity": "fidelity",
    "engine": "engine",
    "mode": "mc_mode",
    "ratios": "ratios",
    "beta": "beta",
    "detector-efficiency": "detector_efficiency",
}

MC_Z_LIMIT = 4.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value file (default: $COHERENT_REPEATER_CONFIG)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    for flag, key in FLAGS.items():
        extra = {"dest": key, "default": None, "metavar": key.upper()}
        if flag == "output":
            common.add_argument("-o", "--output", **extra)
        else:
            common.add_argument(f"--{flag}", **extra)
    parser = _Parser(prog="coherent-repeater", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "distribute": "distribution metrics and engine cross-check",
        "purify": "pumping fidelities F_n and probabilities P_n",
        "swap": "swap outcome table for three equal pairs",
        "fig2": "F1, F2, F4, F_S and P_pd along a distance grid",
        "fig4": "segment length, total distance and rescaled rate per target fidelity",
        "montecarlo": "Monte Carlo waiting times versus Z_N",
        "verify-hamiltonians": "full atom-cavity dynamics versus the effective models",
        "selftest": "oracle-equivalence checks (exit 3 on any failure)",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _load(args) -> RunConfig:
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    for key in SCHEMA:
        v = getattr(args, key, None)
        if v is not None:
            overrides[key] = v
    return RunConfig.from_sources(args.config, overrides)


# --- output ------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def render_csv(rows, columns, command: str, cfg: RunConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# coherent_repeater {__version__} command={command} config={cfg.digest(command)} seed={cfg['seed']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _emit(text: str, cfg: RunConfig) -> None:
    path = cfg.get("output")
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _map(fn, items, workers: int):
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# --- row builders (module level so worker processes can pickle them) ---------------


def distribute_row(args):
    from .distribution import ChannelParams, analytic_metrics, run_distribution

    a2, ell, ell0, engines, cutoff = args
    params = ChannelParams(a2, ell, ell0)
    m = analytic_metrics(params)
    row = {"alpha_sq": a2, "ell_km": ell, "eta": params.eta, "f": m.f, "p_dist": m.p_dist}
    rhos = {}
    err = 0.0
    for eng in ("coherent", "fock"):
        if eng not in engines:
            row[f"f_{eng}"] = row[f"p_dist_{eng}"] = None
            continue
        out = run_distribution(params, eng, cutoff)
        good = out[1]  # click_no_click
        row[f"f_{eng}"] = good.pair.fidelity
        row[f"p_dist_{eng}"] = good.probability
        err = max(err, abs(good.pair.fidelity - m.f), abs(out[0].pair.fidelity - m.f))
        err = max(err, abs(out[0].probability - m.p_dist), abs(good.probability - m.p_dist))
        rhos[eng] = [o.rho for o in out[:2]]
    if len(rhos) == 2:
        row["dm_diff"] = max(float(np.max(np.abs(a - b))) for a, b in zip(rhos["coherent"], rhos["fock"]))
    else:
        row["dm_diff"] = None
    row["max_error"] = err
    return row


DISTRIBUTE_COLUMNS = (
    "alpha_sq", "ell_km", "eta", "f", "p_dist", "f_coherent", "p_dist_coherent",
    "f_fock", "p_dist_fock", "dm_diff", "max_error",
)


def fig2_row(args):
    from .chain import chain_fidelity
    from .distribution import fidelity_from, p_dist_from
    from .purification import prob_fin_polynomial, pump_schedule

    a2, ell, ell0 = args
    eta = math.exp(-ell / ell0)
    f = fidelity_from(a2, eta)
    p = p_dist_from(a2, eta)
    s = pump_schedule(f, 4)
    F1, F2, _, F4 = s.fidelities
    return {
        "alpha_sq": a2, "ell_km": ell, "f": f, "F1": F1, "F2": F2, "F4": F4,
        "F_S": chain_fidelity(F4, 3),
        "P_pd": s.purification_factor * (2.0 * p) ** 5,
        "P_pd_poly": prob_fin_polynomial(f) * (2.0 * p) ** 5,
    }


FIG2_COLUMNS = ("alpha_sq", "ell_km", "f", "F1", "F2", "F4", "F_S", "P_pd", "P_pd_poly")


def fig4_row(args):
    from .chain import InfeasiblePlan, RepeaterPlan, plan_segment_length

    a2, F_final, N, rounds, p_sw, ell0 = args
    try:
        ell = plan_segment_length(F_final, N, a2, rounds, ell0)
    except InfeasiblePlan as exc:
        return {"infeasible": str(exc), "alpha_sq": a2, "F_target": F_final, "N": N}
    if not math.isfinite(ell) or ell <= 0:
        return {"infeasible": f"segment length {ell}", "alpha_sq": a2, "F_target": F_final, "N": N}
    plan = RepeaterPlan(a2, ell, N, rounds, p_sw, ell0)
    row = plan.row()
    row["F_target"] = F_final
    return row


def _fig4_columns(rounds: int):
    k = "F4" if rounds == 4 else f"F{rounds}"
    return ("alpha_sq", "F_target", "N", "ell_km", "L_km", "f", k, "F_final", "P_pd", "P_total", "Z_N", "rate_rescaled")


# --- commands ----------------------------------------------------------------------


def cmd_distribute(cfg):
    a2s = cfg.get("alpha_sq", [0.25, 1.0, 2.0, 3.0])
    ells = cfg.get("ell_km", [0.0, 5.0, 25.0, 50.0])
    eng = cfg["engine"]
    engines = ("coherent", "fock") if eng == "both" else (eng,)
    jobs = [(a, l, cfg["ell0_km"], engines, cfg.get("cutoff")) for a in a2s for l in ells]
    rows = sorted(_map(distribute_row, jobs, cfg["workers"]), key=lambda r: (r["alpha_sq"], r["ell_km"]))
    worst = max(r["max_error"] for r in rows)
    dm = max((r["dm_diff"] for r in rows if r["dm_diff"] is not None), default=0.0)
    ok = worst <= 1e-8 and dm <= 1e-8
    _note(f"distribute: {len(rows)} points, max closed-form error {worst:.2e}, engine DM difference {dm:.2e}")
    return rows, DISTRIBUTE_COLUMNS, EXIT_OK if ok else EXIT_VERIFY


def cmd_purify(cfg):
    from .purification import pump_schedule, simulate_schedule

    fs = cfg.get("f_grid", [round(0.55 + 0.05 * i, 2) for i in range(10)])
    k = cfg["rounds"]
    rows, worst = [], 0.0
    for f in fs:
        if not 0.5 < f <= 1.0:
            raise ConfigError(f"f={f} must lie in (0.5, 1]")
        s = pump_schedule(f, k)
        sim_F, sim_P = simulate_schedule(f, k)
        factor = 1.0
        for n in range(k):
            factor *= 2.0 * s.probabilities[n]
            worst = max(worst, abs(sim_F[n] - s.fidelities[n]), abs(sim_P[n] - s.probabilities[n]))
            rows.append({
                "f": f, "n": n + 1, "F_n": s.fidelities[n], "P_n": s.probabilities[n],
                "F_n_simulated": sim_F[n], "P_n_simulated": sim_P[n], "factor_n": factor,
            })
    _note(f"purify: {len(fs)} base fidelities, {k} rounds, simulation vs recursion {worst:.2e}")
    cols = ("f", "n", "F_n", "P_n", "F_n_simulated", "P_n_simulated", "factor_n")
    return rows, cols, EXIT_OK if worst <= 1e-10 else EXIT_VERIFY


def cmd_swap(cfg):
    from .bell import BellDiagonalPair
    from .swapping import RECORD_BITS, analytic_swap_fidelity, swap_pairs, swap_pairs_via_gate

    F = cfg["fidelity"]
    if not 0.5 <= F <= 1.0:
        raise ConfigError(f"fidelity={F} must lie in [0.5, 1]")
    pair = BellDiagonalPair.pumping("+", F)
    direct = swap_pairs(pair, pair, pair)
    gate = swap_pairs_via_gate(pair, pair, pair)
    diff = max(float(np.max(np.abs(a.rho - b.rho))) + abs(a.probability - b.probability) for a, b in zip(direct, gate))
    rows = []
    for o in direct:
        lab = o.labels or (None, None)
        tab = o.table_labels or (None, None)
        rows.append({
            "i": o.i, "j": o.j,
            "bits_i": "".join(map(str, RECORD_BITS[o.i - 1])), "bits_j": "".join(map(str, RECORD_BITS[o.j - 1])),
            "probability": o.probability, "dominant": lab[0], "secondary": lab[1],
            "fidelity": None if o.pair is None else o.pair.fidelity,
            "table_dominant": tab[0], "table_secondary": tab[1], "matches_table": o.matches_table,
        })
    n_match = sum(bool(r["matches_table"]) for r in rows)
    fs_err = max(abs(r["fidelity"] - analytic_swap_fidelity(F)) for r in rows)
    _note(f"swap: F={F}, F_S={analytic_swap_fidelity(F):.10f}, brute force vs gate route {diff:.1e}, "
          f"fidelity error {fs_err:.1e}, printed-table label matches {n_match}/16")
    cols = ("i", "j", "bits_i", "bits_j", "probability", "dominant", "secondary", "fidelity",
            "table_dominant", "table_secondary", "matches_table")
    return rows, cols, EXIT_OK if diff <= 1e-12 and fs_err <= 1e-10 else EXIT_VERIFY


def cmd_fig2(cfg):
    a2s = cfg.get("alpha_sq", [1.0, 2.0, 3.0])
    ells = cfg.get("ell_km", [5.0 * i for i in range(41)])
    jobs = [(a, l, cfg["ell0_km"]) for a in a2s for l in ells]
    rows = sorted(_map(fig2_row, jobs, cfg["workers"]), key=lambda r: (r["alpha_sq"], r["ell_km"]))
    _note(f"fig2: {len(rows)} rows for alpha^2 in {a2s}")
    return rows, FIG2_COLUMNS, EXIT_OK


def cmd_fig4(cfg):
    a2s = cfg.get("alpha_sq", [1.0, 2.0, 3.0])
    targets = cfg.get("f_final", [0.8, 0.85, 0.9, 0.95])
    Ns = cfg.get("segments", list(range(1, 16, 2)))
    k = cfg["rounds"]
    jobs = [(a, F, N, k, cfg["p_sw"], cfg["ell0_km"]) for a in a2s for F in targets for N in Ns]
    rows = _map(fig4_row, jobs, cfg["workers"])
    bad = [r for r in rows if "infeasible" in r]
    rows = sorted((r for r in rows if "infeasible" not in r), key=lambda r: (r["alpha_sq"], r["F_target"], r["N"]))
    for r in bad:
        _note(f"fig4: infeasible alpha^2={r['alpha_sq']} F_final={r['F_target']} N={r['N']}: {r['infeasible']}")
    _note(f"fig4: {len(rows)} feasible operating points")
    return rows, _fig4_columns(k), EXIT_INFEASIBLE if bad else EXIT_OK


def cmd_montecarlo(cfg):
    from .chain import RepeaterPlan, expected_attempts
    from .montecarlo import TrialConfig, estimate_chain

    mode = cfg["mc_mode"]
    Ns = cfg.get("segments", [1, 2, 3, 7])
    a2 = cfg.get("alpha_sq", [1.0])[0]
    ell = cfg.get("ell_km", [25.0])[0]
    trials, seed, workers = cfg["trials"], cfg["seed"], cfg["workers"]
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    rows = []
    if mode == "cycle":
        ref = RepeaterPlan(a2, ell, 1, cfg["rounds"], cfg["p_sw"], cfg["ell0_km"])
        Ps = cfg.get("p_cycle", [0.5, 0.1, ref.P_total])
        for N in Ns:
            for P in Ps:
                st = estimate_chain(TrialConfig(trials, seed, segments=N, p_cycle=P, workers=workers))
                rows.append({**st.row(), "P": P, "Z_N": expected_attempts(N, P), "z_score": st.z_score})
    else:
        for N in Ns:
            plan = RepeaterPlan(a2, ell, N, cfg["rounds"], cfg["p_sw"], cfg["ell0_km"])
            st = estimate_chain(TrialConfig(trials, seed, plan=plan, mode="pumping", workers=workers))
            z = (st.first_pass_probability - plan.P_pd) / st.first_pass_probability_se if st.first_pass_probability_se else 0.0
            rows.append({**st.row(), "P": plan.P_pd, "Z_N": None, "z_score": z})
    worst = max(abs(r["z_score"]) for r in rows if r["z_score"] is not None)
    _note(f"montecarlo ({mode}): {len(rows)} configurations x {trials} trials, largest |z| = {worst:.2f}")
    cols = ("mode", "N", "P", "trials", "mean_max", "mean_max_se", "Z_N", "z_score",
            "mean_attempts", "mean_attempts_se", "p_hat", "p_hat_se", "first_pass", "first_pass_se")
    return rows, cols, EXIT_OK if worst <= MC_Z_LIMIT else EXIT_VERIFY


def cmd_verify_hamiltonians(cfg):
    from .hamiltonians import LEAKAGE_CONSTANT, SWEEP_COLUMNS, displacement_sweep

    ratios = cfg.get("ratios", [10.0, 20.0, 40.0, 80.0])
    n_max = cfg.get("cutoff", 20)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = displacement_sweep(tuple(ratios), beta_abs=cfg["beta"], n_max=n_max)
    by_model = {}
    for r in rows:
        by_model.setdefault(r["model"], []).append(r)
    checks = []
    for model, rs in by_model.items():
        inf = [r["infidelity"] for r in rs]
        checks.append((f"{model}: infidelity decreases as Delta_L/g doubles",
                       all(b < a for a, b in zip(inf, inf[1:]))))
        at20 = [r["infidelity"] for r in rs if r["delta_l"] / r["g"] == 20]
        if at20:
            checks.append((f"{model}: infidelity at Delta_L/g = 20 below 1e-2 ({at20[0]:.3e})", at20[0] < 1e-2))
    leak_ok = all(r["leakage_ratio"] <= LEAKAGE_CONSTANT for r in rows)
    checks.append((f"leakage below {LEAKAGE_CONSTANT:g} (Omega/2Delta_L)^2", leak_ok))
    checks.append(("leakage below 1e-2 for Delta_L >= 20 max(g, Omega)",
                   all(r["leakage"] < 1e-2 for r in rows if r["delta_l"] >= 20 * max(r["g"], r["omega"]))))
    for name, ok in checks:
        _note(f"verify-hamiltonians: {'PASS' if ok else 'FAIL'} {name}")
    return rows, SWEEP_COLUMNS, EXIT_OK if all(ok for _, ok in checks) else EXIT_VERIFY


def cmd_selftest(cfg):
    from .selftest import run_checks

    rows = run_checks()
    for r in rows:
        _note(f"selftest: {'PASS' if r['passed'] else 'FAIL'} {r['check']} ({r['value']:.2e} <= {r['tolerance']:.0e})")
    return rows, ("check", "value", "tolerance", "passed"), EXIT_OK if all(r["passed"] for r in rows) else EXIT_VERIFY


HANDLERS = {
    "distribute": cmd_distribute,
    "purify": cmd_purify,
    "swap": cmd_swap,
    "fig2": cmd_fig2,
    "fig4": cmd_fig4,
    "montecarlo": cmd_montecarlo,
    "verify-hamiltonians": cmd_verify_hamiltonians,
    "selftest": cmd_selftest,
}


def run_command(argv=None) -> int:
    """Parse ``argv``, run one subcommand and return its exit code."""
    from .chain import InfeasiblePlan
    from .fock import TruncationError
    from .hamiltonians import IntegrationError

    t0 = time.perf_counter()
    try:
        args = _build_parser().parse_args(argv)
        cfg = _load(args)
        rows, cols, code = HANDLERS[args.command](cfg)
        _emit(render_csv(rows, cols, args.command, cfg), cfg)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ConfigError as exc:
        _note(f"error: {exc}")
        return EXIT_CONFIG
    except InfeasiblePlan as exc:
        _note(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    except (TruncationError, IntegrationError, ArithmeticError) as exc:
        _note(f"numerical failure: {exc}")
        return EXIT_VERIFY
    except ValueError as exc:
        _note(f"error: {exc}")
        return EXIT_CONFIG
    _note(f"{args.command}: done in {time.perf_counter() - t0:.2f} s (exit {code})")
    return code


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
