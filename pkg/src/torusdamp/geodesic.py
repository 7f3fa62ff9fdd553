"""Geodesics on flat tori and the damping functionals along them: line
integrals, the decay propagator G, Sigma(t), L(T), L_infinity and the
time-dependent geometric control check.

Geodesics on the flat torus are straight lines, so all of this reduces to
one-dimensional quadrature against the damping profile. Infima over
geodesics and start times are approximated by deterministic grid scans
followed by golden-section refinement; refining the sampling can only
lower the reported values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from torusdamp.damping import DampingProfile

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Geodesic:
    """Unit-speed straight line s -> x0 + s * direction on T^1 or T^2."""

    x0: tuple
    direction: tuple

    def __post_init__(self):
        x0 = tuple(float(c) for c in np.atleast_1d(self.x0))
        d = np.atleast_1d(np.asarray(self.direction, dtype=float))
        if len(x0) != len(d):
            raise ValueError("x0 and direction dimensions differ")
        nrm = float(np.linalg.norm(d))
        if nrm == 0:
            raise ValueError("direction must be nonzero")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "direction", tuple(d / nrm))

    @property
    def dim(self) -> int:
        return len(self.x0)

    @classmethod
    def from_angle(cls, x0, theta: float) -> "Geodesic":
        return cls(tuple(np.atleast_1d(x0)), (math.cos(theta), math.sin(theta)))

    def point(self, s):
        """Position at arc length s (tuple of coordinate arrays)."""
        s = np.asarray(s, dtype=float)
        return tuple(x + s * d for x, d in zip(self.x0, self.direction))


@dataclass(frozen=True)
class GeodesicSampling:
    """Deterministic sampling of the infimum over (geodesic, start time)."""

    n_points: int = 4
    n_directions: int = 8
    n_start_times: int = 9
    quadrature_step: float = 0.01
    t0_max: float = 20.0
    period: float = 2.0 * np.pi

    def __post_init__(self):
        if min(self.n_points, self.n_directions, self.n_start_times) < 1:
            raise ValueError("all sampling counts must be >= 1")
        if self.quadrature_step <= 0:
            raise ValueError("quadrature_step must be positive")

    def geodesics(self, dim: int):
        """Deterministic list of geodesics: lattice of base points, and on
        T^2 uniform directions always including the axes and diagonal."""
        base = np.arange(self.n_points) * (self.period / self.n_points)
        out = []
        if dim == 1:
            for x in base:
                out.append(Geodesic((x,), (1.0,)))
            return out
        thetas = set()
        for j in range(self.n_directions):
            thetas.add(round(np.pi * j / self.n_directions, 12))
        for t in (0.0, np.pi / 2, np.pi / 4):
            thetas.add(round(t, 12))
        for x in base:
            for y in base:
                for theta in sorted(thetas):
                    out.append(Geodesic.from_angle((x, y), theta))
        return out

    def start_times(self) -> np.ndarray:
        return np.linspace(0.0, self.t0_max, self.n_start_times)


def _quad_nodes(t0: float, t1: float, step: float, disc: np.ndarray):
    """Midpoint nodes and weights on [t0, t1], split at discontinuities."""
    cuts = [t0] + [float(s) for s in disc if t0 < s < t1] + [t1]
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 1e-14:
            continue
        n = max(1, int(math.ceil((b - a) / step)))
        h = (b - a) / n
        nodes.append(a + (np.arange(n) + 0.5) * h)
        weights.append(np.full(n, h))
    if not nodes:
        return np.array([]), np.array([])
    return np.concatenate(nodes), np.concatenate(weights)


def line_integral(w: DampingProfile, geo: Geodesic, t0: float, t1: float,
                  step: float = 0.01) -> float:
    """integral_{t0}^{t1} W(gamma(s), s) ds by composite midpoint quadrature
    split at the profile's switch times (exact for piecewise-constant-in-t
    profiles)."""
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    if t1 == t0:
        return 0.0
    nodes, weights = _quad_nodes(t0, t1, step, w.discontinuity_times(t1))
    vals = np.array([float(np.asarray(w.eval(geo.point(s), s))) for s in nodes])
    return float(np.sum(vals * weights))


def cumulative_line_integral(w: DampingProfile, geo: Geodesic,
                             times: np.ndarray, step: float = 0.01) -> np.ndarray:
    """integral_0^{t_i} W(gamma(s), s) ds for an increasing list of times,
    sharing one quadrature pass."""
    times = np.asarray(times, dtype=float)
    t_max = float(times[-1])
    if t_max == 0.0:
        return np.zeros_like(times)
    nodes, weights = _quad_nodes(0.0, t_max, step, w.discontinuity_times(t_max))
    vals = np.array([float(np.asarray(w.eval(geo.point(s), s))) for s in nodes])
    ends = nodes + weights / 2.0
    cum = np.concatenate([[0.0], np.cumsum(vals * weights)])
    grid = np.concatenate([[0.0], ends])
    return np.interp(times, grid, cum)


def propagator_G(w: DampingProfile, geo: Geodesic, t0: float, t: float,
                 step: float = 0.01) -> float:
    """exp(-integral of W along gamma from t0 to t); always in (0, 1]."""
    if t < t0:
        raise ValueError("t must be >= t0")
    return math.exp(-line_integral(w, geo, t0, t, step=step))


@dataclass
class FunctionalReport:
    """Value of a damping functional with its minimizing witness."""

    value: float
    witness: Geodesic
    t0: float = 0.0
    window: Optional[float] = None
    satisfied: Optional[bool] = None
    sampling: Optional[GeodesicSampling] = None

    def as_dict(self) -> dict:
        out = {
            "value": self.value,
            "witness": {"x0": list(self.witness.x0),
                        "direction": list(self.witness.direction)},
            "t0": self.t0,
        }
        if self.window is not None:
            out["window"] = self.window
        if self.satisfied is not None:
            out["satisfied"] = self.satisfied
        if self.sampling is not None:
            out["sampling"] = {
                "n_points": self.sampling.n_points,
                "n_directions": self.sampling.n_directions,
                "n_start_times": self.sampling.n_start_times,
                "quadrature_step": self.sampling.quadrature_step,
                "t0_max": self.sampling.t0_max,
            }
        return out


def sigma(w: DampingProfile, t: float, sampling: GeodesicSampling,
          dim: int = 1) -> FunctionalReport:
    """Sigma(t): smallest total damping along a sampled geodesic on [0, t]."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    best, best_geo = math.inf, None
    for geo in sampling.geodesics(dim):
        val = line_integral(w, geo, 0.0, t, step=sampling.quadrature_step)
        if val < best:
            best, best_geo = val, geo
    return FunctionalReport(value=best, witness=best_geo, t0=0.0,
                            window=t, sampling=sampling)


def sigma_curve(w: DampingProfile, times: np.ndarray,
                sampling: GeodesicSampling, dim: int = 1) -> np.ndarray:
    """Sigma evaluated at each time of an increasing grid (one quadrature
    pass per sampled geodesic, pointwise minimum)."""
    times = np.asarray(times, dtype=float)
    best = None
    for geo in sampling.geodesics(dim):
        cum = cumulative_line_integral(w, geo, times, step=sampling.quadrature_step)
        best = cum if best is None else np.minimum(best, cum)
    return best


def _golden_min(fun, a: float, b: float, iters: int = 40):
    """Golden-section minimization on [a, b]; deterministic."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fun(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _window_average(w, geo, t0, big_t, step):
    return line_integral(w, geo, t0, t0 + big_t, step=step) / big_t


def L_of_T(w: DampingProfile, big_t: float, sampling: GeodesicSampling,
           dim: int = 1) -> FunctionalReport:
    """L(T): smallest window average of W over sampled (geodesic, t0)."""
    if big_t <= 0:
        raise ValueError("T must be positive")
    t0s = sampling.start_times()
    best, best_geo, best_t0 = math.inf, None, 0.0
    for geo in sampling.geodesics(dim):
        for t0 in t0s:
            val = _window_average(w, geo, float(t0), big_t, sampling.quadrature_step)
            if val < best:
                best, best_geo, best_t0 = val, geo, float(t0)
    # local refinement over the start time around the grid minimizer
    if len(t0s) > 1:
        dt = t0s[1] - t0s[0]
        a = max(0.0, best_t0 - dt)
        b = min(sampling.t0_max, best_t0 + dt)
        t_ref, v_ref = _golden_min(
            lambda s: _window_average(w, best_geo, s, big_t, sampling.quadrature_step),
            a, b)
        if v_ref < best:
            best, best_t0 = v_ref, t_ref
    return FunctionalReport(value=best, witness=best_geo, t0=best_t0,
                            window=big_t, sampling=sampling)


def L_infinity(w: DampingProfile, sampling: GeodesicSampling,
               t_max: float, dim: int = 1, ladder_depth: int = 5) -> float:
    """max of L(T) over the dyadic ladder T in {t_max / 2^m}; a lower bound
    for L_infinity = sup_T L(T)."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    vals = []
    for m in range(ladder_depth + 1):
        vals.append(L_of_T(w, t_max / 2 ** m, sampling, dim=dim).value)
    return float(max(vals))


def check_tgcc(w: DampingProfile, t0_window: float, sampling: GeodesicSampling,
               dim: int = 1, ladder_depth: int = 3,
               tol: float = 1e-8) -> FunctionalReport:
    """Scan window averages over sampled (geodesic, t0) and window lengths
    T in the dyadic ladder {T0 * 2^j}; the control condition is reported as
    satisfied when the minimum average stays above tol."""
    if t0_window <= 0:
        raise ValueError("T0 must be positive")
    best, best_geo, best_t0, best_T = math.inf, None, 0.0, t0_window
    geos = sampling.geodesics(dim)
    for j in range(ladder_depth + 1):
        big_t = t0_window * 2 ** j
        for geo in geos:
            for t0 in sampling.start_times():
                val = _window_average(w, geo, float(t0), big_t,
                                      sampling.quadrature_step)
                if val < best:
                    best, best_geo, best_t0, best_T = val, geo, float(t0), big_t
    return FunctionalReport(value=best, witness=best_geo, t0=best_t0,
                            window=best_T, satisfied=bool(best > tol),
                            sampling=sampling)
