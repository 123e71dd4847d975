"""Backend selection for the hot loops.

The compiled module is used when it imports; set COHERENT_REPEATER_PURE=1
to force the numpy/Python fallback. Both produce identical numbers.
"""

from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("COHERENT_REPEATER_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # no compiler at install time
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def get_backend(name: str | None = None):
    """Return the kernel module by name ('cython' or 'python'); default is the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def z_tail_sum(N: int, P: float, tol: float = 1e-12) -> float:
    # the vectorized numpy sum beats the scalar compiled loop (see benchmarks)
    return float(_fallback.z_tail_sum(int(N), float(P), float(tol)))


def cycle_trials(N, p, seed, start, count):
    return _impl.cycle_trials(int(N), float(p), int(seed), int(start), int(count))


def pumping_trials(N, p_dist, round_success, seed, start, count):
    return _impl.pumping_trials(int(N), float(p_dist), list(round_success), int(seed), int(start), int(count))
