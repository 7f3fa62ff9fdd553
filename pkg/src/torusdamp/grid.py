"""Periodic grids on flat tori, sampled fields, spectral operators and the
energy functional.

All differential operators act on the trigonometric interpolant, so they are
exact for band-limited data. Quadrature is the trapezoidal rule, which is
spectrally accurate on periodic grids.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class GridMismatchError(ValueError):
    """Raised when an operation mixes fields living on different grids."""


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the flat torus T^dim with the given period per axis."""

    dim: int
    points_per_axis: int
    period: float = 2.0 * np.pi

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.points_per_axis < 4:
            raise ValueError("points_per_axis must be at least 4")
        if self.period <= 0:
            raise ValueError("period must be positive")

    @property
    def spacing(self) -> float:
        return self.period / self.points_per_axis

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    @property
    def n_nodes(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def axis(self) -> np.ndarray:
        """Node coordinates along one axis, [0, period)."""
        return np.arange(self.points_per_axis) * self.spacing

    def coords(self) -> tuple:
        """Tuple of dim meshgrid coordinate arrays (ij indexing)."""
        ax = self.axis()
        if self.dim == 1:
            return (ax,)
        return tuple(np.meshgrid(ax, ax, indexing="ij"))

    def wavenumbers(self) -> tuple:
        """Tuple of dim meshgrid angular-wavenumber arrays."""
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)
        if self.dim == 1:
            return (k1,)
        return tuple(np.meshgrid(k1, k1, indexing="ij"))

    def laplacian_symbol(self) -> np.ndarray:
        """Fourier multiplier of the Laplacian, -|k|^2."""
        ks = self.wavenumbers()
        return -sum(k ** 2 for k in ks)


@dataclass(frozen=True)
class Field:
    """Sampled complex function on a torus grid.

    kind tags the physical role: "position", "velocity" or
    "damping-snapshot". Damping snapshots must be real and nonnegative.
    """

    grid: TorusGrid
    values: np.ndarray
    kind: str = "position"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise GridMismatchError(
                f"values shape {vals.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "values", vals)
        if self.kind not in ("position", "velocity", "damping-snapshot"):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == "damping-snapshot":
            if np.max(np.abs(vals.imag)) > 1e-14 or np.min(vals.real) < -1e-14:
                raise ValueError("damping snapshots must be real and nonnegative")

    def to_csv(self, path) -> None:
        """One row per node: index columns, then value_re, value_im."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if self.grid.dim == 1:
                writer.writerow(["i", "value_re", "value_im"])
                for i, v in enumerate(self.values):
                    writer.writerow([i, f"{v.real:.17g}", f"{v.imag:.17g}"])
            else:
                writer.writerow(["i", "j", "value_re", "value_im"])
                n = self.grid.points_per_axis
                for i in range(n):
                    for j in range(n):
                        v = self.values[i, j]
                        writer.writerow([i, j, f"{v.real:.17g}", f"{v.imag:.17g}"])


def _check_same_grid(*fields: Field) -> TorusGrid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")
    return g


def laplacian(f: Field) -> Field:
    """Spectral Laplacian of the trigonometric interpolant of f."""
    g = f.grid
    fhat = np.fft.fftn(f.values)
    out = np.fft.ifftn(g.laplacian_symbol() * fhat)
    return Field(g, out, kind=f.kind)


def gradient(f: Field) -> tuple:
    """Spectral gradient; returns a tuple of dim value arrays."""
    g = f.grid
    fhat = np.fft.fftn(f.values)
    return tuple(np.fft.ifftn(1j * k * fhat) for k in g.wavenumbers())


def l2_norm(f: Field) -> float:
    """L2 norm sqrt(integral |f|^2) by trapezoidal quadrature."""
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.cell_volume))


def inner(f: Field, g: Field) -> complex:
    """L2 inner product integral f * conj(g)."""
    _check_same_grid(f, g)
    return complex(np.sum(f.values * np.conj(g.values)) * f.grid.cell_volume)


def energy(u: Field, v: Field) -> float:
    """Wave energy (1/2) integral |grad u|^2 + |v|^2."""
    g = _check_same_grid(u, v)
    grad = gradient(u)
    dens = sum(np.abs(gi) ** 2 for gi in grad) + np.abs(v.values) ** 2
    return float(0.5 * np.sum(dens) * g.cell_volume)


def random_band_limited(
    grid: TorusGrid, max_mode: int, rng: np.random.Generator,
    real: bool = True, min_mode: int = 0
) -> Field:
    """Random field with Fourier support in min_mode <= max|k_i| <= max_mode,
    unit-scale coefficients. Used to build reproducible initial data."""
    n = grid.points_per_axis
    if max_mode >= n // 2:
        raise ValueError("max_mode must be below the Nyquist mode")
    if not 0 <= min_mode <= max_mode:
        raise ValueError("need 0 <= min_mode <= max_mode")
    coef = np.zeros(grid.shape, dtype=complex)
    modes = list(range(-max_mode, max_mode + 1))
    if grid.dim == 1:
        for m in modes:
            if abs(m) < min_mode:
                continue
            coef[m] = rng.standard_normal() + 1j * rng.standard_normal()
    else:
        for m in modes:
            for l in modes:
                if max(abs(m), abs(l)) < min_mode:
                    continue
                coef[m, l] = rng.standard_normal() + 1j * rng.standard_normal()
    vals = np.fft.ifftn(coef) * grid.n_nodes
    if real:
        vals = vals.real.astype(complex)
    return Field(grid, vals)


@dataclass
class EnergyTrace:
    """Time series of energy and auxiliary functionals for one run."""

    times: np.ndarray
    energy: np.ndarray
    sigma: Optional[np.ndarray] = None
    cum_obs: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.energy = np.asarray(self.energy, dtype=float)
        if self.times.shape != self.energy.shape:
            raise ValueError("times and energy must have the same length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.energy < -1e-15):
            raise ValueError("energy entries must be nonnegative")
        for name in ("sigma", "cum_obs"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.shape != self.times.shape:
                    raise ValueError(f"{name} length mismatch")
                setattr(self, name, arr)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["t", "energy"]
            cols = [self.times, self.energy]
            if self.sigma is not None:
                header.append("sigma")
                cols.append(self.sigma)
            if self.cum_obs is not None:
                header.append("cum_obs")
                cols.append(self.cum_obs)
            writer.writerow(header)
            for row in zip(*cols):
                writer.writerow([f"{x:.17g}" for x in row])

    @classmethod
    def from_csv(cls, path) -> "EnergyTrace":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            data = {h: [] for h in header}
            for row in reader:
                for h, x in zip(header, row):
                    data[h].append(float(x))
        return cls(
            times=np.array(data["t"]),
            energy=np.array(data["energy"]),
            sigma=np.array(data["sigma"]) if "sigma" in data else None,
            cum_obs=np.array(data["cum_obs"]) if "cum_obs" in data else None,
        )
