"""Scenario files: TOML in, validated run configuration out.

A scenario names a coefficient pattern (preset or explicit), the grid, the
integrator, the two initial-data recipes, diagnostic sampling, and the
output directory.  Dotted-key overrides (`grid.N=64`) are applied to the
raw mapping before validation, so every error can name the offending key.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .integrate import IntegratorConfig, RhsVariant
from .model import DissipationConfig, PRESET_PATTERNS, RegularityRecipe, preset_config

__all__ = ["Scenario", "ScenarioError", "load_scenario", "load_toml", "apply_overrides"]

_COEFFS = ("nu1", "nu2", "mu1", "mu2", "delta1", "delta2", "lambda1", "lambda2")


class ScenarioError(ValueError):
    """Configuration problem, carrying the offending dotted key."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


def load_toml(path) -> Dict[str, Any]:
    with open(path, "rb") as fh:
        return _toml.load(fh)


def apply_overrides(raw: Dict[str, Any], overrides) -> Dict[str, Any]:
    """Apply `key.path=value` strings; values are parsed as TOML literals."""
    for item in overrides:
        if "=" not in item:
            raise ScenarioError(item, "override must have the form key.path=value")
        key, text = item.split("=", 1)
        try:
            value = _toml.loads(f"v = {text}")["v"]
        except _toml.TOMLDecodeError as exc:
            raise ScenarioError(key, f"cannot parse override value {text!r}: {exc}") from None
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ScenarioError(key, "override path passes through a non-table value")
        node[parts[-1]] = value
    return raw


def _expect(table: dict, key: str, kinds, default, path: str):
    value = table.get(key, default)
    if value is None:
        return None
    if kinds is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kinds is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"{path}.{key}", f"expected an integer, got {value!r}")
        return value
    if not isinstance(value, kinds):
        raise ScenarioError(f"{path}.{key}", f"unexpected value {value!r}")
    return value


@dataclass
class Scenario:
    name: str
    cfg: DissipationConfig
    preset: Optional[str]
    grid_n: int
    grid_l: float
    integrator: IntegratorConfig
    velocity: RegularityRecipe
    theta: RegularityRecipe
    theta_exclude_neutral: bool
    cadence: int
    m: int
    eps0: Optional[float]
    decay_threshold: float
    output_dir: str
    raw: Dict[str, Any]

    def config_hash(self) -> str:
        """Hash of the run-defining configuration; output location excluded."""
        physics = {k: v for k, v in self.raw.items() if k != "output"}
        canon = json.dumps(physics, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _parse_recipe(table: dict, path: str, default_seed: int) -> RegularityRecipe:
    try:
        return RegularityRecipe(
            s=_expect(table, "s", float, 3.0, path),
            amplitude=_expect(table, "amplitude", float, 0.0, path),
            decay_margin=_expect(table, "decay_margin", float, 0.5, path),
            seed=_expect(table, "seed", int, default_seed, path),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(path, str(exc)) from None


def _parse_dissipation(table: dict) -> tuple[DissipationConfig, Optional[str]]:
    path = "dissipation"
    preset = _expect(table, "preset", str, None, path)
    if preset is not None:
        if preset not in PRESET_PATTERNS:
            raise ScenarioError(
                f"{path}.preset",
                f"unknown preset {preset!r}; valid: {', '.join(sorted(PRESET_PATTERNS))}",
            )
        try:
            cfg = preset_config(
                preset,
                lam=_expect(table, "lambda", float, 1.0, path),
                lambda1=_expect(table, "lambda1", float, None, path),
                lambda2=_expect(table, "lambda2", float, None, path),
                strength=_expect(table, "strength", float, 1.0, path),
            )
        except ValueError as exc:
            raise ScenarioError(f"{path}.lambda", str(exc)) from None
        return cfg, preset
    kwargs = {}
    for coeff in _COEFFS:
        value = _expect(table, coeff, float, 0.0, path)
        kwargs[coeff] = value
    try:
        return DissipationConfig(**kwargs), None
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from None


def load_scenario(source, overrides=()) -> Scenario:
    """Build a Scenario from a TOML path or a raw mapping."""
    if isinstance(source, (str, Path)):
        raw = load_toml(source)
        default_name = Path(source).stem
    else:
        raw = json.loads(json.dumps(source))  # deep copy, reject non-JSON values
        default_name = "scenario"
    raw = apply_overrides(raw, overrides)

    name = _expect(raw, "name", str, default_name, "scenario")
    cfg, preset = _parse_dissipation(raw.get("dissipation", {}))

    gtab = raw.get("grid", {})
    grid_n = _expect(gtab, "N", int, 128, "grid")
    grid_l = _expect(gtab, "L", float, 2.0 * math.pi, "grid")
    if grid_n < 4 or grid_n % 2:
        raise ScenarioError("grid.N", f"must be even and >= 4, got {grid_n}")
    if not grid_l > 0:
        raise ScenarioError("grid.L", f"must be positive, got {grid_l}")

    itab = raw.get("integrator", {})
    dt = itab.get("dt", 1e-3)
    if not (dt == "auto" or (isinstance(dt, (int, float)) and not isinstance(dt, bool) and dt > 0)):
        raise ScenarioError("integrator.dt", f"must be positive or 'auto', got {dt!r}")
    kind = _expect(itab, "rhs", str, "full", "integrator")
    try:
        variant = RhsVariant(
            kind=kind,
            n=_expect(itab, "n", float, None, "integrator"),
            eps=_expect(itab, "eps", float, None, "integrator"),
        )
        integrator = IntegratorConfig(
            method=_expect(itab, "method", str, "if_rk4", "integrator"),
            dt=dt if dt == "auto" else float(dt),
            cfl=_expect(itab, "cfl", float, 0.4, "integrator"),
            t_end=_expect(itab, "t_end", float, 100.0, "integrator"),
            variant=variant,
            dt_max=_expect(itab, "dt_max", float, 0.05, "integrator"),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError("integrator", str(exc)) from None

    init = raw.get("initial", {})
    velocity = _parse_recipe(init.get("velocity", {}), "initial.velocity", 1)
    theta = _parse_recipe(init.get("theta", {}), "initial.theta", 2)
    exclude = init.get("theta", {}).get("exclude_linearly_neutral", False)
    if not isinstance(exclude, bool):
        raise ScenarioError(
            "initial.theta.exclude_linearly_neutral", f"expected a boolean, got {exclude!r}"
        )

    dtab = raw.get("diagnostics", {})
    cadence = _expect(dtab, "cadence", int, 10, "diagnostics")
    if cadence < 1:
        raise ScenarioError("diagnostics.cadence", f"must be >= 1, got {cadence}")
    m = _expect(dtab, "m", int, 2, "diagnostics")
    if m < 0:
        raise ScenarioError("diagnostics.m", f"must be >= 0, got {m}")
    eps0 = _expect(dtab, "eps0", float, None, "diagnostics")
    if eps0 is not None and not eps0 > 0:
        raise ScenarioError("diagnostics.eps0", f"must be positive, got {eps0}")
    decay_threshold = _expect(dtab, "decay_threshold", float, 0.1, "diagnostics")

    otab = raw.get("output", {})
    output_dir = _expect(otab, "directory", str, name, "output")

    return Scenario(
        name=name,
        cfg=cfg,
        preset=preset,
        grid_n=grid_n,
        grid_l=grid_l,
        integrator=integrator,
        velocity=velocity,
        theta=theta,
        theta_exclude_neutral=exclude,
        cadence=cadence,
        m=m,
        eps0=eps0,
        decay_threshold=decay_threshold,
        output_dir=output_dir,
        raw=raw,
    )
