"""Experiment configuration: YAML loading, strict validation, and
construction of module objects from validated sections.

Unknown keys anywhere in a config are hard errors; a typo in an experiment
file should never silently fall back to a default.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np
import yaml

from torusdamp.damping import (
    ConstantDamping,
    DampingProfile,
    GrowingOff,
    PolyProduct,
    ShrinkingOn,
    SpaceBump,
    indicator_chi,
    smooth_chi,
)
from torusdamp.geodesic import Geodesic, GeodesicSampling
from torusdamp.grid import Field, TorusGrid, random_band_limited
from torusdamp.solver import SolverConfig, WaveState


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


KINDS = ("simulate", "sigma", "tgcc", "beam", "observe", "fit")

_SECTION_KEYS = {
    "": {"kind", "grid", "damping", "solver", "initial", "sampling",
         "beam", "observe", "fit", "sweep", "seed", "out", "t_end"},
    "grid": {"dim", "points_per_axis", "period"},
    "solver": {"dt", "scheme", "align_to_discontinuities", "trace_stride"},
    "sampling": {"n_points", "n_directions", "n_start_times",
                 "quadrature_step", "t0_max"},
    "beam": {"k", "x0", "direction", "t0", "amplitude"},
    "observe": {"t0", "duration"},
    "fit": {"model", "window"},
    "sweep": {"parameter", "values"},
}

_DAMPING_KEYS = {
    "none": set(),
    "constant": {"a"},
    "space_bump": {"w0", "center", "radius", "smoothness"},
    "poly_product": {"beta", "c_m", "c_big_m", "base"},
    "growing_off": {"l0", "gap", "base"},
    "shrinking_on": {"s0", "gap", "chi", "g_floor", "g_ceil"},
}

_GAP_KEYS = {
    "power": {"c1", "alpha"},
    "exponential": {"c1", "ratio"},
    "shrink_power": {"scale", "beta"},
}

_INITIAL_KEYS = {
    "random": {"max_mode", "real"},
    "mode": {"lam", "a", "b", "complex_wave"},
}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"section {where!r} must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in section {where!r}; "
            f"allowed: {sorted(allowed)}")


def load_config(path) -> dict:
    """Load and structurally validate a YAML experiment config."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}")
    return validate_config(raw)


def validate_config(raw) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(raw, _SECTION_KEYS[""], "top level")
    if "kind" not in raw:
        raise ConfigError("missing required key 'kind'")
    kind = raw["kind"]
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    for name in ("grid", "solver", "sampling", "beam", "observe", "fit", "sweep"):
        if name in raw:
            _check_keys(raw[name], _SECTION_KEYS[name], name)
    if "damping" in raw:
        _validate_damping(raw["damping"], "damping")
    if "initial" in raw:
        init = raw["initial"]
        if not isinstance(init, dict) or "type" not in init:
            raise ConfigError("initial section needs a 'type' key")
        if init["type"] not in _INITIAL_KEYS:
            raise ConfigError(
                f"initial.type must be one of {sorted(_INITIAL_KEYS)}")
        _check_keys({k: v for k, v in init.items() if k != "type"},
                    _INITIAL_KEYS[init["type"]], "initial")
    if "seed" in raw and not isinstance(raw["seed"], int):
        raise ConfigError("seed must be an integer")
    return raw


def _validate_damping(section, where: str) -> None:
    if not isinstance(section, dict) or "family" not in section:
        raise ConfigError(f"{where} section needs a 'family' key")
    family = section["family"]
    if family not in _DAMPING_KEYS:
        raise ConfigError(
            f"{where}.family must be one of {sorted(_DAMPING_KEYS)}, "
            f"got {family!r}")
    _check_keys({k: v for k, v in section.items() if k != "family"},
                _DAMPING_KEYS[family], where)
    if "base" in section:
        _validate_damping(section["base"], f"{where}.base")
    if "gap" in section:
        gap = section["gap"]
        if not isinstance(gap, dict) or "form" not in gap:
            raise ConfigError(f"{where}.gap needs a 'form' key")
        if gap["form"] not in _GAP_KEYS:
            raise ConfigError(
                f"{where}.gap.form must be one of {sorted(_GAP_KEYS)}")
        _check_keys({k: v for k, v in gap.items() if k != "form"},
                    _GAP_KEYS[gap["form"]], f"{where}.gap")


def build_grid(cfg: dict) -> TorusGrid:
    sec = cfg.get("grid", {})
    try:
        return TorusGrid(dim=int(sec.get("dim", 1)),
                         points_per_axis=int(sec.get("points_per_axis", 256)),
                         period=float(sec.get("period", 2.0 * math.pi)))
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}")


def build_gap_function(sec: dict) -> Callable:
    form = sec["form"]
    if form == "power":
        c1, alpha = float(sec.get("c1", 1.0)), float(sec.get("alpha", 1.0))
        return lambda j: c1 * max(float(j), 1.0) ** alpha
    if form == "exponential":
        c1, r = float(sec.get("c1", 1.0)), float(sec.get("ratio", 2.0))
        return lambda j: c1 * r ** float(j)
    scale, beta = float(sec.get("scale", 1.0)), float(sec.get("beta", 0.5))
    return lambda k: scale * (1.0 + float(k)) ** (-beta)


def build_damping(cfg_or_section, period: float = 2.0 * math.pi
                  ) -> Optional[DampingProfile]:
    sec = cfg_or_section.get("damping", cfg_or_section) \
        if "family" not in cfg_or_section else cfg_or_section
    if "family" not in sec:
        raise ConfigError("damping section needs a 'family' key")
    family = sec["family"]
    try:
        if family == "none":
            return None
        if family == "constant":
            return ConstantDamping(float(sec.get("a", 1.0)))
        if family == "space_bump":
            return SpaceBump(w0=float(sec.get("w0", 1.0)),
                             center=sec.get("center", [math.pi]),
                             radius=float(sec.get("radius", 1.0)),
                             smoothness=float(sec.get("smoothness", 1.0)),
                             period=period)
        if family == "poly_product":
            base = build_damping(sec.get("base", {"family": "constant", "a": 1.0}),
                                 period=period)
            return PolyProduct(base, beta=float(sec.get("beta", 0.5)),
                               c_m=float(sec.get("c_m", 1.0)),
                               c_big_m=float(sec.get("c_big_m", 1.0)))
        if family == "growing_off":
            base = build_damping(sec.get("base", {"family": "constant", "a": 1.0}),
                                 period=period)
            gap = build_gap_function(sec.get("gap", {"form": "power"}))
            return GrowingOff(base, l0=float(sec.get("l0", 1.0)), f=gap)
        if family == "shrinking_on":
            s0 = float(sec.get("s0", 2.0))
            gap = build_gap_function(
                sec.get("gap", {"form": "shrink_power", "scale": s0}))
            chi = smooth_chi if sec.get("chi", "indicator") == "smooth" \
                else indicator_chi
            return ShrinkingOn(s0=s0, f=gap, chi=chi,
                               g_floor=float(sec.get("g_floor", 1.0)),
                               g_ceil=float(sec.get("g_ceil", 1.0)))
    except ValueError as exc:
        raise ConfigError(f"damping: {exc}")
    raise ConfigError(f"unknown damping family {family!r}")


def build_solver_config(cfg: dict, grid: TorusGrid) -> SolverConfig:
    from torusdamp.solver import stable_dt
    sec = cfg.get("solver", {})
    try:
        return SolverConfig(
            dt=float(sec.get("dt", stable_dt(grid))),
            scheme=sec.get("scheme", "rk4"),
            align_to_discontinuities=bool(sec.get("align_to_discontinuities", True)),
            trace_stride=int(sec.get("trace_stride", 1)),
        )
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}")


def build_sampling(cfg: dict, grid: TorusGrid) -> GeodesicSampling:
    sec = cfg.get("sampling", {})
    try:
        return GeodesicSampling(
            n_points=int(sec.get("n_points", 4)),
            n_directions=int(sec.get("n_directions", 8)),
            n_start_times=int(sec.get("n_start_times", 9)),
            quadrature_step=float(sec.get("quadrature_step", 0.01)),
            t0_max=float(sec.get("t0_max", 20.0)),
            period=grid.period,
        )
    except ValueError as exc:
        raise ConfigError(f"sampling: {exc}")


def build_initial(cfg: dict, grid: TorusGrid,
                  rng: np.random.Generator) -> WaveState:
    sec = cfg.get("initial", {"type": "random"})
    kind = sec.get("type", "random")
    if kind == "random":
        max_mode = int(sec.get("max_mode", 10))
        real = bool(sec.get("real", True))
        try:
            u = random_band_limited(grid, max_mode, rng, real=real)
            v = random_band_limited(grid, max_mode, rng, real=real)
        except ValueError as exc:
            raise ConfigError(f"initial: {exc}")
        return WaveState(u=u, v=Field(grid, v.values, kind="velocity"))
    lam = int(sec.get("lam", 8))
    a = float(sec.get("a", 1.0))
    b = float(sec.get("b", 0.0))
    x = grid.coords()[0]
    if bool(sec.get("complex_wave", False)):
        u = a * np.exp(1j * lam * x)
        v = (1j * lam * b) * np.exp(1j * lam * x)
    else:
        u = a * np.cos(lam * x)
        v = b * np.cos(lam * x)
    u = np.broadcast_to(u, grid.shape).copy()
    v = np.broadcast_to(v, grid.shape).copy()
    return WaveState(u=Field(grid, u), v=Field(grid, v, kind="velocity"))


def build_geodesic(cfg: dict, grid: TorusGrid) -> Geodesic:
    sec = cfg.get("beam", {})
    x0 = sec.get("x0", [0.0] * grid.dim)
    direction = sec.get("direction", [1.0] + [0.0] * (grid.dim - 1))
    try:
        return Geodesic(tuple(float(c) for c in x0),
                        tuple(float(c) for c in direction))
    except ValueError as exc:
        raise ConfigError(f"beam geodesic: {exc}")
