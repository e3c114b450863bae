"""Numerical defaults and run configuration.

Discretization defaults and pass/fail thresholds live here rather than
inside the checks, so a config file can override any of them. Config
files are JSON; keys mirror the CLI flags. Explicit CLI flags win over
the config file, which wins over the defaults below.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Any

CONFIG_ENV_VAR = "EVOLVE_TRANSPORT_CONFIG"


@dataclass(frozen=True)
class Numerics:
    """Shared numerical parameters.

    Tolerances are absolute unless noted. Steps marked _rel are scaled
    by a problem size (box diameter, window length, feature size) at
    the point of use.
    """

    rank_tol: float = 1e-10      # Gram determinant at or below this is a rank failure
    proj_tol: float = 1e-8       # orthogonality / tangency residuals
    unit_tol: float = 1e-10      # unit-norm residuals
    match_tol: float = 1e-8      # nearest-point matching distance
    surface_tol: float = 1e-8    # boundary points must sit on the manifold this closely
    geom_step_rel: float = 1e-6  # FD step for space jacobians, times box diameter
    time_step_rel: float = 1e-6  # FD step for map time derivatives, times window length
    probe_rel: float = 1e-4      # membership probe offset, times feature size
    fd_step_rel: float = 1e-4    # default transport lhs step, times window length
    gauss_order: int = 16        # tensor Gauss-Legendre points per axis
    mc_count: int = 100_000      # default monte carlo sample count
    seed: int = 0

    def replace(self, **kw: Any) -> "Numerics":
        return dataclasses.replace(self, **kw)


DEFAULT_NUMERICS = Numerics()

# Keys a config file may set. "tolerances" maps scenario name to an
# override of its pass/fail residual threshold.
_SCALAR_KEYS = {
    "h": float,
    "order": int,
    "tol": float,
    "seed": int,
    "mc_count": int,
    "times": int,
    "samples": int,
    "include_mc_sweep": bool,
    "figures": bool,
    "format": str,
}


class ConfigError(ValueError):
    """Malformed or contradictory configuration (CLI exit code 2)."""


def load_config(path: str | None) -> dict[str, Any]:
    """Read a JSON config file.

    When path is None the EVOLVE_TRANSPORT_CONFIG environment variable
    is consulted; an empty result is an empty dict, never an error.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path!r} must hold a JSON object")
    validate_config(raw)
    return raw


def validate_config(raw: dict[str, Any]) -> None:
    for key, val in raw.items():
        if key in _SCALAR_KEYS:
            want = _SCALAR_KEYS[key]
            ok = isinstance(val, bool) if want is bool else (
                isinstance(val, (int, float)) and not isinstance(val, bool)
                if want is float
                else isinstance(val, want)
            )
            if not ok:
                raise ConfigError(f"config key {key!r} wants {want.__name__}, got {val!r}")
        elif key == "tolerances":
            if not isinstance(val, dict) or not all(
                isinstance(k, str) and isinstance(v, (int, float)) and not isinstance(v, bool)
                for k, v in val.items()
            ):
                raise ConfigError("config key 'tolerances' wants {scenario: number}")
        elif key == "numerics":
            if not isinstance(val, dict):
                raise ConfigError("config key 'numerics' wants an object")
            known = {f.name for f in dataclasses.fields(Numerics)}
            for k in val:
                if k not in known:
                    raise ConfigError(f"unknown numerics key {k!r}")
        else:
            raise ConfigError(f"unknown config key {key!r}")


def numerics_from_config(raw: dict[str, Any], base: Numerics = DEFAULT_NUMERICS) -> Numerics:
    out = base
    sub = dict(raw.get("numerics", {}))
    if "order" in raw:
        sub.setdefault("gauss_order", raw["order"])
    if "seed" in raw:
        sub.setdefault("seed", raw["seed"])
    if "mc_count" in raw:
        sub.setdefault("mc_count", raw["mc_count"])
    if sub:
        out = out.replace(**sub)
    return out
