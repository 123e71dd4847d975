"""Flat ``key = value`` run configuration with command-line overrides.

File format: UTF-8 lines ``key = value``; ``#`` starts a comment; blank lines
are ignored. Values are single numbers, comma lists (``1,2,3``) or inclusive
grids (``start:stop:step``). Unknown keys are rejected. The default file is
taken from the COHERENT_REPEATER_CONFIG environment variable when no path is
given.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field

CONFIG_ENV = "COHERENT_REPEATER_CONFIG"


class ConfigError(ValueError):
    """Invalid configuration (exit code 1)."""


def parse_grid(text: str) -> list:
    """Expand ``start:stop:step`` including ``stop`` within half a step."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid {text!r} must read start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"grid {text!r}: {exc}") from None
    if step <= 0 or not all(map(math.isfinite, (start, stop, step))):
        raise ConfigError(f"grid {text!r} needs a positive finite step")
    if stop < start:
        raise ConfigError(f"grid {text!r} has stop < start")
    n = int(math.floor((stop - start) / step + 0.5))
    # round away representation noise so 0.1-steps print as 0.3, not 0.30000000000000004
    return [round(start + i * step, 12) + 0.0 for i in range(n + 1)]


def _numbers(text: str) -> list:
    text = text.strip()
    if ":" in text:
        return parse_grid(text)
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _as_int(x: float, key: str) -> int:
    if x != int(x):
        raise ConfigError(f"{key} must be an integer, got {x}")
    return int(x)


def _float(key, text):
    vals = _numbers(text)
    if len(vals) != 1:
        raise ConfigError(f"{key} takes one number")
    return vals[0]


def _floats(key, text):
    vals = _numbers(text)
    if not vals:
        raise ConfigError(f"{key} is empty")
    return vals


def _int(key, text):
    return _as_int(_float(key, text), key)


def _ints(key, text):
    return [_as_int(v, key) for v in _floats(key, text)]


def _text(key, text):
    return text.strip()


def _choice(*options):
    def parse(key, text):
        v = text.strip()
        if v not in options:
            raise ConfigError(f"{key} must be one of {', '.join(options)}; got {v!r}")
        return v

    return parse


def _efficiency(key, text):
    v = _float(key, text)
    if v != 1.0:
        raise ConfigError(
            "detector_efficiency other than 1 is a documented extension and is not modelled"
        )
    return v


#: key -> (parser, default)
SCHEMA = {
    "alpha_sq": (_floats, None),
    "ell_km": (_floats, None),
    "ell0_km": (_float, "25"),
    "segments": (_ints, None),
    "rounds": (_int, "4"),
    "p_sw": (_float, "1"),
    "trials": (_int, "100000"),
    "seed": (_int, "1"),
    "cutoff": (_int, None),
    "output": (_text, None),
    "workers": (_int, "1"),
    "f_final": (_floats, None),
    "f_grid": (_floats, None),
    "p_cycle": (_floats, None),
    "fidelity": (_float, "0.9"),
    "engine": (_choice("coherent", "fock", "both"), "both"),
    "mc_mode": (_choice("cycle", "pumping"), "cycle"),
    "ratios": (_floats, None),
    "beta": (_float, "0.3"),
    "detector_efficiency": (_efficiency, "1"),
}

#: keys that do not change results and stay out of the provenance hash
NON_SEMANTIC = ("output", "workers")


def read_config_file(path) -> dict:
    """Raw ``{key: text}`` from a config file."""
    raw = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if key not in SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        raw[key] = value.strip()
    return raw


@dataclass
class RunConfig:
    """Validated values; ``raw`` keeps the text each value was parsed from."""

    values: dict
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_sources(cls, path=None, overrides=None, use_env: bool = True) -> "RunConfig":
        if path is None and use_env:
            path = os.environ.get(CONFIG_ENV) or None
        raw = read_config_file(path) if path else {}
        for key, text in (overrides or {}).items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}")
            if text is not None:
                raw[key] = str(text)
        values = {}
        for key, (parse, default) in SCHEMA.items():
            text = raw.get(key, default)
            values[key] = None if text is None else parse(key, text)
        return cls(values, raw)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def digest(self, command: str) -> str:
        """SHA-256 over the command and every result-affecting value."""
        items = [f"command={command}"]
        for key in sorted(SCHEMA):
            if key in NON_SEMANTIC:
                continue
            items.append(f"{key}={self.values[key]!r}")
        return hashlib.sha256("\n".join(items).encode()).hexdigest()[:16]
