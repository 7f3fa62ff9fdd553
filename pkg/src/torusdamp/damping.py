"""Damping coefficients W(x, t) as evaluatable objects.

Every profile is nonnegative, bounded by its declared sup_norm, and exposes
its on/off switch times so quadrature and time stepping can align to them.
Points are passed as a tuple of coordinate arrays, one per torus axis, all
broadcastable against each other.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from torusdamp.grid import Field, TorusGrid


def _as_point(x) -> tuple:
    if isinstance(x, (tuple, list)):
        return tuple(np.asarray(xi, dtype=float) for xi in x)
    return (np.asarray(x, dtype=float),)


class DampingProfile:
    """Base class: W(x, t) >= 0 with a declared sup-norm."""

    sup_norm: float = 0.0
    family: str = "abstract"
    autonomous: bool = False

    def eval(self, x, t: float):
        """Evaluate W at torus point(s) x and time t >= 0."""
        if t < 0:
            raise ValueError("time must be nonnegative")
        return self._eval(_as_point(x), float(t))

    def _eval(self, x: tuple, t: float):
        raise NotImplementedError

    def snapshot(self, grid: TorusGrid, t: float) -> Field:
        """Sample W(., t) at the grid nodes as a damping-snapshot field."""
        if t < 0:
            raise ValueError("time must be nonnegative")
        vals = np.broadcast_to(self._eval(grid.coords(), float(t)), grid.shape)
        return Field(grid, np.asarray(vals, dtype=float), kind="damping-snapshot")

    def discontinuity_times(self, t_max: float) -> np.ndarray:
        """Sorted switch times in (0, t_max]; empty for smooth-in-t profiles."""
        return np.array([])

    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"family": self.family, "sup_norm": self.sup_norm, **self.params()}


class ConstantDamping(DampingProfile):
    """W identically equal to a constant a >= 0."""

    family = "constant"
    autonomous = True

    def __init__(self, a: float):
        if a < 0:
            raise ValueError("constant damping must be nonnegative")
        self.a = float(a)
        self.sup_norm = self.a

    def _eval(self, x, t):
        return np.broadcast_to(self.a, np.broadcast_shapes(*(xi.shape for xi in x)))

    def params(self):
        return {"a": self.a}


class SpaceBump(DampingProfile):
    """Autonomous smooth bump: w0 * exp(-s*q/(1-q)) with q = (r/radius)^2,
    zero outside radius r from center (torus distance)."""

    family = "space_bump"
    autonomous = True

    def __init__(self, w0: float, center, radius: float, smoothness: float = 1.0,
                 period: float = 2.0 * np.pi):
        if w0 < 0 or radius <= 0 or smoothness <= 0:
            raise ValueError("w0 >= 0, radius > 0, smoothness > 0 required")
        self.w0 = float(w0)
        self.center = tuple(float(c) for c in np.atleast_1d(center))
        self.radius = float(radius)
        self.smoothness = float(smoothness)
        self.period = float(period)
        self.sup_norm = self.w0

    def _eval(self, x, t):
        if len(x) != len(self.center):
            raise ValueError("point dimension does not match bump center")
        r2 = 0.0
        for xi, ci in zip(x, self.center):
            d = np.remainder(xi - ci + self.period / 2, self.period) - self.period / 2
            r2 = r2 + d ** 2
        q = r2 / self.radius ** 2
        out = np.zeros(np.shape(q))
        inside = q < 1.0
        qi = np.where(inside, q, 0.0)
        with np.errstate(divide="ignore", over="ignore"):
            out = np.where(inside, self.w0 * np.exp(-self.smoothness * qi / (1.0 - qi)), 0.0)
        return out

    def params(self):
        return {"w0": self.w0, "center": list(self.center), "radius": self.radius,
                "smoothness": self.smoothness}


class PolyProduct(DampingProfile):
    """W = base(x, t) * f(t) with C_m (1+t)^-beta <= f <= C_M (1+t)^-beta.

    Default time factor is f(t) = (1+t)^-beta itself.
    """

    family = "poly_product"

    def __init__(self, base: DampingProfile, beta: float,
                 c_m: float = 1.0, c_big_m: float = 1.0,
                 f: Optional[Callable[[float], float]] = None):
        if beta < 0:
            raise ValueError("beta must be nonnegative")
        if not (0 < c_m <= c_big_m):
            raise ValueError("need 0 < c_m <= c_big_m")
        self.base = base
        self.beta = float(beta)
        self.c_m = float(c_m)
        self.c_big_m = float(c_big_m)
        self._f = f if f is not None else (lambda t: (1.0 + t) ** (-self.beta))
        # sup forced by the envelope hypothesis: b(0) = 1
        self.sup_norm = base.sup_norm * self.c_big_m

    def time_factor(self, t: float) -> float:
        return self._f(t)

    def _eval(self, x, t):
        return self.base._eval(x, t) * self._f(t)

    def discontinuity_times(self, t_max):
        return self.base.discontinuity_times(t_max)

    def params(self):
        return {"beta": self.beta, "c_m": self.c_m, "c_big_m": self.c_big_m,
                "base": self.base.describe()}


class GrowingOff(DampingProfile):
    """On/off damping: equal to the base profile on windows of fixed length
    L0 and zero on gaps whose length f(k) grows with k.

    On-window k (k = 0, 1, ...) is [k*L0 + T_k, (k+1)*L0 + T_k] with
    T_k = sum_{j=1..k} f(j); it is followed by a gap of length f(k+1).
    """

    family = "growing_off"

    def __init__(self, base: DampingProfile, l0: float, f: Callable[[int], float]):
        if l0 <= 0:
            raise ValueError("l0 must be positive")
        self.base = base
        self.l0 = float(l0)
        self.f = f
        self.sup_norm = base.sup_norm
        # cumulative schedule of [on_start, on_end] pairs, extended on demand
        self._on = [(0.0, self.l0)]

    def _extend(self, t: float) -> None:
        while self._on[-1][1] + self.f(len(self._on)) <= t:
            k = len(self._on)
            gap = float(self.f(k))
            if gap <= 0:
                raise ValueError("gap lengths f(k) must be positive")
            start = self._on[-1][1] + gap
            self._on.append((start, start + self.l0))

    def _window_index(self, t: float):
        """Index of the on-window containing t, or None if t is in a gap."""
        self._extend(t)
        starts = [w[0] for w in self._on]
        i = bisect.bisect_right(starts, t) - 1
        if i >= 0 and t <= self._on[i][1]:
            return i
        return None

    def _eval(self, x, t):
        i = self._window_index(t)
        shape = np.broadcast_shapes(*(xi.shape for xi in x))
        if i is None:
            return np.zeros(shape)
        # base profile sees local window time, as in the on/off definition
        return np.broadcast_to(self.base._eval(x, t - self._on[i][0]), shape)

    def discontinuity_times(self, t_max):
        self._extend(t_max)
        out = []
        for start, end in self._on:
            for s in (start, end):
                if 0 < s <= t_max:
                    out.append(s)
        return np.array(sorted(set(out)))

    def on_windows(self, t_max: float):
        """On-intervals intersecting [0, t_max]."""
        self._extend(t_max)
        return [(a, b) for a, b in self._on if a <= t_max]

    def params(self):
        return {"l0": self.l0, "base": self.base.describe()}


def indicator_chi(s):
    """chi identically 1 on [0, 1], 0 outside."""
    s = np.asarray(s, dtype=float)
    return np.where((s >= 0.0) & (s <= 1.0), 1.0, 0.0)


def smooth_chi(s):
    """Smooth bump on [0, 1], identically 1 on [1/4, 3/4]."""
    s = np.asarray(s, dtype=float)
    def ramp(u):
        u = np.clip(u, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            a = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
            b = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
        return a / (a + b)
    up = ramp(4.0 * s)
    down = ramp(4.0 * (1.0 - s))
    return np.where((s < 0) | (s > 1), 0.0, np.minimum(up, down))


class ShrinkingOn(DampingProfile):
    """On/off damping: W(x,t) = g(x) * chi((t - k*S0)/f(k)) on
    [k*S0, k*S0 + f(k)], zero until (k+1)*S0.

    g must be bounded in [g_floor, g_ceil] with g_floor > 0; the positive
    floor is what makes the on-windows observable.
    """

    family = "shrinking_on"

    def __init__(self, s0: float, f: Callable[[int], float],
                 g: Optional[Callable] = None,
                 chi: Callable = indicator_chi,
                 g_floor: float = 1.0, g_ceil: float = 1.0):
        if s0 <= 0:
            raise ValueError("s0 must be positive")
        if not (0 < g_floor <= g_ceil):
            raise ValueError("need 0 < g_floor <= g_ceil (positive damping floor)")
        self.s0 = float(s0)
        self.f = f
        self.g = g
        self.chi = chi
        self.g_floor = float(g_floor)
        self.g_ceil = float(g_ceil)
        self.sup_norm = self.g_ceil

    def _f(self, k: int) -> float:
        fk = float(self.f(k))
        if not (0 < fk <= self.s0):
            raise ValueError(f"f({k}) = {fk} must lie in (0, s0]")
        return fk

    def _eval(self, x, t):
        k = int(np.floor(t / self.s0))
        shape = np.broadcast_shapes(*(xi.shape for xi in x))
        fk = self._f(k)
        local = t - k * self.s0
        if local >= fk:
            return np.zeros(shape)
        gval = self.g(*x) if self.g is not None else 1.0
        return np.broadcast_to(gval * self.chi(local / fk), shape).astype(float)

    def discontinuity_times(self, t_max):
        out = []
        k = 0
        while k * self.s0 <= t_max:
            for s in (k * self.s0, k * self.s0 + self._f(k)):
                if 0 < s <= t_max:
                    out.append(s)
            k += 1
        return np.array(sorted(set(out)))

    def on_windows(self, t_max: float):
        out = []
        k = 0
        while k * self.s0 <= t_max:
            out.append((k * self.s0, k * self.s0 + self._f(k)))
            k += 1
        return out

    def params(self):
        return {"s0": self.s0, "g_floor": self.g_floor, "g_ceil": self.g_ceil}
