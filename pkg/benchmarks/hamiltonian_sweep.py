"""Regenerate hamiltonian_sweep.csv: full versus effective models and excited-state leakage.

Run from the repository root:  python3 benchmarks/hamiltonian_sweep.py
"""

import pathlib
import time
import warnings

from coherent_repeater.hamiltonians import displacement_sweep, phase_sweep, write_sweep

OUT = pathlib.Path(__file__).with_name("hamiltonian_sweep.csv")


def main():
    warnings.simplefilter("ignore")
    t0 = time.perf_counter()
    rows = displacement_sweep(ratios=(10, 20, 40, 80, 160)) + phase_sweep(n_max=14)
    write_sweep(rows, OUT)
    for r in rows:
        print(f"{r['mode']:12s} Delta_L={r['delta_l']:7.1f} {r['model']:12s} "
              f"infidelity={r['infidelity']:.3e} leakage={r['leakage']:.3e} ratio={r['leakage_ratio']:.2f}")
    print(f"wrote {OUT} in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
