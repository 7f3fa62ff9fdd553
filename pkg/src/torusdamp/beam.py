"""Gaussian beams concentrated on torus geodesics and the damped
quasi-solutions built from them.

A beam with wavenumber k is u_k = k^(-1+n/4) b0(t) exp(i k psi(x,t)) with
quadratic complex phase psi = <e, x - gamma(t)> + (1/2) <M(t)(x - gamma),
x - gamma>. The matrix M solves the Riccati equation M' = -M^2 + M e e^T M
and the amplitude solves b0' = -(1/2) b0 tr(M (I - e e^T)); on T^1 both are
constant. Fields are periodized by summing lattice images whose Gaussian
envelope weight exceeds 1e-16.

Multiplying u_k by the decay propagator G(gamma, t0, t) gives the
quasi-solution of the damped equation; its residual under the damped wave
operator decays like k^(-1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from torusdamp.damping import DampingProfile
from torusdamp.geodesic import Geodesic, line_integral, propagator_G
from torusdamp.grid import Field, TorusGrid, energy, l2_norm, laplacian
from torusdamp.solver import SolverConfig, WaveState, evolve

_ENVELOPE_CUTOFF = 1e-16
_FRAME_DT = 1e-3


class BeamDefinitenessError(RuntimeError):
    """Raised when Im M(t) loses positive definiteness."""


def _as_matrix(m, dim: int) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.shape == () and dim == 1:
        arr = arr.reshape(1, 1)
    if arr.shape != (dim, dim):
        raise ValueError(f"M must be {dim}x{dim}")
    if not np.allclose(arr, arr.T, atol=1e-12):
        raise ValueError("M must be complex symmetric")
    if np.min(np.linalg.eigvalsh(arr.imag)) <= 0:
        raise ValueError("Im M must be positive definite")
    return arr


@dataclass(frozen=True)
class BeamSpec:
    """Gaussian beam data: geodesic, wavenumber, phase matrix seed,
    amplitude seed and start time.

    amplitude = None picks |b0| = pi^(-n/4) det(Im M0)^(1/4), which makes
    the limiting beam energy equal to 1.
    """

    geodesic: Geodesic
    k: int
    m0: object = None
    amplitude: Optional[complex] = None
    t0: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("wavenumber k must be >= 1")
        dim = self.geodesic.dim
        m0 = self.m0 if self.m0 is not None else 1j * np.eye(dim)
        object.__setattr__(self, "m0", _as_matrix(m0, dim))
        if self.t0 < 0:
            raise ValueError("t0 must be nonnegative")

    @property
    def dim(self) -> int:
        return self.geodesic.dim

    def b0_init(self) -> complex:
        if self.amplitude is not None:
            return complex(self.amplitude)
        n = self.dim
        det_im = float(np.linalg.det(np.asarray(self.m0).imag))
        return complex(math.pi ** (-n / 4) * det_im ** 0.25)


@dataclass
class BeamFrame:
    """Evolved beam data at one time: phase matrix, amplitude, ray point."""

    t: float
    m: np.ndarray
    b0: complex
    gamma_pos: tuple
    gamma_dir: tuple

    def __post_init__(self):
        if np.min(np.linalg.eigvalsh(np.asarray(self.m).imag)) <= 0:
            raise BeamDefinitenessError(
                f"Im M lost positive definiteness at t = {self.t:.6g}")


def _projector(direction: np.ndarray) -> np.ndarray:
    return np.eye(len(direction)) - np.outer(direction, direction)


def propagate_frames(spec: BeamSpec, times) -> list:
    """Beam frames at each requested time (increasing, all >= t0).

    The Riccati and transport equations are integrated with RK4 at a fixed
    internal step; positive definiteness of Im M is checked at every
    reported frame. On T^1 the right-hand sides vanish identically.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if len(times) == 0:
        return []
    if times[0] < spec.t0 - 1e-12:
        raise ValueError("frame times must be >= t0")
    if np.any(np.diff(times) < 0):
        raise ValueError("frame times must be nondecreasing")

    e = np.asarray(spec.geodesic.direction)
    proj = _projector(e)
    pmat = np.outer(e, e)

    def rhs(m, b0):
        dm = -m @ m + m @ pmat @ m
        db = -0.5 * b0 * np.trace(m @ proj)
        return dm, db

    m = np.array(spec.m0, dtype=complex)
    b0 = spec.b0_init()
    t = spec.t0
    frames = []

    def emit(tt):
        pos = tuple(float(x) for x in np.ravel(
            [c for c in spec.geodesic.point(tt - spec.t0)]))
        frames.append(BeamFrame(t=float(tt), m=m.copy(), b0=b0,
                                gamma_pos=pos,
                                gamma_dir=spec.geodesic.direction))

    for target in times:
        while t < target - 1e-12:
            h = min(_FRAME_DT, target - t)
            k1m, k1b = rhs(m, b0)
            k2m, k2b = rhs(m + h / 2 * k1m, b0 + h / 2 * k1b)
            k3m, k3b = rhs(m + h / 2 * k2m, b0 + h / 2 * k2b)
            k4m, k4b = rhs(m + h * k3m, b0 + h * k3b)
            m = m + h / 6 * (k1m + 2 * k2m + 2 * k3m + k4m)
            b0 = b0 + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
            m = (m + m.T) / 2
            t = t + h
        emit(target)
    return frames


def propagate_frame(spec: BeamSpec, t: float) -> BeamFrame:
    """Beam frame at a single time t >= t0."""
    return propagate_frames(spec, [t])[0]


def _check_resolution(spec: BeamSpec, grid: TorusGrid) -> None:
    if grid.dim != spec.dim:
        raise ValueError("grid dimension does not match beam geodesic")
    if grid.points_per_axis < 4 * spec.k:
        raise ValueError(
            f"grid with {grid.points_per_axis} points per axis cannot "
            f"resolve wavenumber k = {spec.k} (need >= {4 * spec.k})")


def _lattice_shifts(frame: BeamFrame, k: int, grid: TorusGrid) -> list:
    """Lattice translates whose Gaussian weight can exceed the cutoff."""
    im = np.asarray(frame.m).imag
    lam_min = float(np.min(np.linalg.eigvalsh(im)))
    # envelope exp(-(k/2) lam_min d^2) > cutoff within distance d_max
    d_max = math.sqrt(2.0 * math.log(1.0 / _ENVELOPE_CUTOFF) / (k * lam_min))
    # image m can matter only if some grid point is within d_max of its
    # center, and that needs (|m| - 1) * period < d_max
    reach = int(math.floor(d_max / grid.period)) + 1
    rng = range(-reach, reach + 1)
    if grid.dim == 1:
        return [(grid.period * m,) for m in rng]
    return [(grid.period * m1, grid.period * m2) for m1 in rng for m2 in rng]


def _phase_pieces(frame: BeamFrame, grid: TorusGrid, shifts):
    """Per lattice image: delta arrays (x - shift - gamma) stacked as
    (..., dim) and the phase psi; shared by field and derivative code."""
    coords = grid.coords()
    pos = np.asarray(frame.gamma_pos)
    e = np.asarray(frame.gamma_dir)
    m = np.asarray(frame.m)
    out = []
    for shift in shifts:
        delta = np.stack(
            [c - s - p for c, s, p in zip(coords, shift, pos)], axis=-1)
        mdelta = delta @ m.T
        psi = delta @ e + 0.5 * np.sum(mdelta * delta, axis=-1)
        out.append((delta, mdelta, psi))
    return out


def _frame_rates(frame: BeamFrame):
    """Time derivatives of M and b0 at the frame (from the beam ODEs)."""
    e = np.asarray(frame.gamma_dir)
    m = np.asarray(frame.m)
    proj = _projector(e)
    pmat = np.outer(e, e)
    mdot = -m @ m + m @ pmat @ m
    b0dot = -0.5 * frame.b0 * np.trace(m @ proj)
    mddot = -mdot @ m - m @ mdot + mdot @ pmat @ m + m @ pmat @ mdot
    trdot = np.trace(mdot @ proj)
    b0ddot = -0.5 * (b0dot * np.trace(m @ proj) + frame.b0 * trdot)
    return mdot, mddot, b0dot, b0ddot


def beam_field(spec: BeamSpec, grid: TorusGrid, t: float,
               frame: Optional[BeamFrame] = None):
    """Sample the beam (u, du/dt) on the grid at time t.

    Returns a pair of Fields. The time derivative is analytic: each lattice
    image contributes (b0' + i k b0 dpsi/dt) exp(i k psi) with
    dpsi/dt = -1 + (1/2) <M' d, d> - <M d, e>.
    """
    _check_resolution(spec, grid)
    if frame is None:
        frame = propagate_frame(spec, t)
    k = spec.k
    n = spec.dim
    amp = k ** (-1.0 + n / 4.0)
    e = np.asarray(frame.gamma_dir)
    mdot, _, b0dot, _ = _frame_rates(frame)

    shifts = _lattice_shifts(frame, k, grid)
    u = np.zeros(grid.shape, dtype=complex)
    v = np.zeros(grid.shape, dtype=complex)
    for delta, mdelta, psi in _phase_pieces(frame, grid, shifts):
        phase = np.exp(1j * k * psi)
        dpsi_dt = (-1.0 + 0.5 * np.sum((delta @ mdot.T) * delta, axis=-1)
                   - mdelta @ e)
        u += amp * frame.b0 * phase
        v += amp * (b0dot + 1j * k * frame.b0 * dpsi_dt) * phase
    return Field(grid, u), Field(grid, v, kind="velocity")


def quasi_solution(spec: BeamSpec, w: Optional[DampingProfile],
                   grid: TorusGrid, t: float,
                   frame: Optional[BeamFrame] = None,
                   g_value: Optional[float] = None):
    """Damped quasi-solution (G u_k, d/dt (G u_k)) at time t.

    The velocity includes the chain-rule term -W(gamma(t), t) G u_k from
    differentiating the propagator. With w = None this is beam_field.
    """
    u, v = beam_field(spec, grid, t, frame=frame)
    if w is None:
        return u, v
    if frame is None:
        frame = propagate_frame(spec, t)
    g = propagator_G(w, spec.geodesic, spec.t0, t) if g_value is None else g_value
    w_gamma = float(np.asarray(w.eval(frame.gamma_pos, t)))
    uq = Field(grid, g * u.values)
    vq = Field(grid, g * (v.values - w_gamma * u.values), kind="velocity")
    return uq, vq


def _w_gamma_rate(w: DampingProfile, pos, t: float, h: float = 1e-5):
    """d/dt W(gamma(t), t) along the ray by a central difference."""
    ta = max(t - h, 0.0)
    tb = t + h
    wa = float(np.asarray(w.eval(pos, ta)))
    wb = float(np.asarray(w.eval(pos, tb)))
    return (wb - wa) / (tb - ta)


def residual_norm(spec: BeamSpec, w: Optional[DampingProfile],
                  grid: TorusGrid, t: float) -> float:
    """L2 norm of (d^2/dt^2 - Laplacian + 2 W d/dt) applied to the
    quasi-solution at time t.

    The second time derivative is taken analytically on the beam ansatz
    and the Laplacian spectrally; the result decays like k^(-1/2).
    """
    _check_resolution(spec, grid)
    frame = propagate_frame(spec, t)
    k = spec.k
    n = spec.dim
    amp = k ** (-1.0 + n / 4.0)
    e = np.asarray(frame.gamma_dir)
    mmat = np.asarray(frame.m)
    mdot, mddot, b0dot, b0ddot = _frame_rates(frame)
    mee = complex(e @ mmat @ e)

    shifts = _lattice_shifts(frame, k, grid)
    u = np.zeros(grid.shape, dtype=complex)
    ut = np.zeros(grid.shape, dtype=complex)
    utt = np.zeros(grid.shape, dtype=complex)
    for delta, mdelta, psi in _phase_pieces(frame, grid, shifts):
        phase = np.exp(1j * k * psi)
        mdot_d = delta @ mdot.T
        dpsi = -1.0 + 0.5 * np.sum(mdot_d * delta, axis=-1) - mdelta @ e
        d2psi = (0.5 * np.sum((delta @ mddot.T) * delta, axis=-1)
                 - 2.0 * (mdot_d @ e) + mee)
        u += amp * frame.b0 * phase
        ut += amp * (b0dot + 1j * k * frame.b0 * dpsi) * phase
        utt += amp * (b0ddot + 2j * k * b0dot * dpsi
                      + 1j * k * frame.b0 * d2psi
                      - k * k * frame.b0 * dpsi ** 2) * phase

    lap_u = laplacian(Field(grid, u)).values
    if w is None:
        res = utt - lap_u
        return l2_norm(Field(grid, res))

    g = propagator_G(w, spec.geodesic, spec.t0, t)
    w_gamma = float(np.asarray(w.eval(frame.gamma_pos, t)))
    w_gamma_dot = _w_gamma_rate(w, frame.gamma_pos, t)
    w_grid = np.asarray(w.snapshot(grid, t).values.real)
    # q = G u: q_t = G (u_t - Wg u), q_tt = G ((Wg^2 - Wg') u - 2 Wg u_t + u_tt)
    q_t = g * (ut - w_gamma * u)
    q_tt = g * ((w_gamma ** 2 - w_gamma_dot) * u - 2.0 * w_gamma * ut + utt)
    res = q_tt - g * lap_u + 2.0 * w_grid * q_t
    return l2_norm(Field(grid, res))


@dataclass
class BeamComparisonReport:
    """Exact-solver energy versus the beam prediction G^2."""

    times: np.ndarray
    energy_exact: np.ndarray
    g_squared: np.ndarray

    @property
    def defect(self) -> np.ndarray:
        return np.abs(self.energy_exact - self.g_squared)

    @property
    def sup_defect(self) -> float:
        return float(np.max(self.defect))

    def lower_bound_holds(self) -> bool:
        """E(t) > E(t0) (G^2 - 2 eps) with eps the measured sup defect."""
        eps = self.sup_defect / max(self.energy_exact[0], 1e-300)
        bound = self.energy_exact[0] * (self.g_squared ** 2 - 2.0 * eps)
        return bool(np.all(self.energy_exact > bound))

    def to_csv(self, path) -> None:
        import csv
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "E_exact", "G_squared", "defect"])
            for t, ee, g2, d in zip(self.times, self.energy_exact,
                                    self.g_squared, self.defect):
                writer.writerow([f"{t:.17g}", f"{ee:.17g}",
                                 f"{g2:.17g}", f"{d:.17g}"])


def beam_vs_exact(spec: BeamSpec, w: Optional[DampingProfile],
                  grid: TorusGrid, t_end: float,
                  config: Optional[SolverConfig] = None) -> BeamComparisonReport:
    """Evolve the exact solution from quasi-solution initial data and
    compare its energy with the propagator prediction G(gamma, t0, t)^2."""
    u0, v0 = quasi_solution(spec, w, grid, spec.t0)
    state = WaveState(u=u0, v=v0, t=spec.t0)
    _, trace = evolve(state, w, t_end, config=config)
    if w is None:
        g2 = np.ones_like(trace.times)
    else:
        g2 = np.array([
            propagator_G(w, spec.geodesic, spec.t0, t) ** 2
            for t in trace.times])
    return BeamComparisonReport(times=trace.times,
                                energy_exact=trace.energy,
                                g_squared=g2)
