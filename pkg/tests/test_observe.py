import math

import numpy as np
import pytest

from torusdamp.beam import BeamSpec, quasi_solution
from torusdamp.damping import ConstantDamping, SpaceBump
from torusdamp.geodesic import Geodesic
from torusdamp.grid import Field, TorusGrid
from torusdamp.observe import (
    ObservationWindow,
    WindowOutsideTraceError,
    check_decay_bound,
    decay_bookkeeping,
    measured_window_fractions,
    observability_ratio,
    observed_quantity,
    sandwich_check,
    short_time_sweep,
)
from torusdamp.solver import SolverConfig, WaveState, evolve


def _mode_state(grid, lam):
    u = Field(grid, np.cos(lam * grid.axis()))
    v = Field(grid, np.zeros(grid.shape), kind="velocity")
    return WaveState(u=u, v=v)


def test_window_validation():
    w = ConstantDamping(1.0)
    with pytest.raises(ValueError):
        ObservationWindow(t0=-1.0, duration=1.0, weight=w)
    with pytest.raises(ValueError):
        ObservationWindow(t0=0.0, duration=0.0, weight=w)


def test_observed_quantity_trig_oracle():
    # psi = cos(lam t) cos(lam x), W = 1, window one full period:
    # integral integral |psi_t|^2 = lam^2 pi T / 2
    grid = TorusGrid(1, 64)
    lam = 4
    period = 2 * math.pi / lam
    state = _mode_state(grid, lam)
    weight = ConstantDamping(1.0)
    _, trace = evolve(state, None, period, config=SolverConfig(dt=1e-3),
                      observe_weight=weight)
    window = ObservationWindow(t0=0.0, duration=period, weight=weight)
    obs = observed_quantity(trace, window)
    expect = lam ** 2 * math.pi * period / 2
    assert obs == pytest.approx(expect, rel=1e-6)


def test_window_outside_trace():
    grid = TorusGrid(1, 64)
    state = _mode_state(grid, 2)
    weight = ConstantDamping(1.0)
    _, trace = evolve(state, None, 1.0, config=SolverConfig(dt=0.01),
                      observe_weight=weight)
    with pytest.raises(WindowOutsideTraceError):
        observed_quantity(trace, ObservationWindow(0.5, 1.0, weight))


def test_observability_ratio_full_period():
    # over a full period the time-averaged kinetic energy equals E, so the
    # ratio is 1/T for W = 1
    grid = TorusGrid(1, 64)
    lam = 4
    period = 2 * math.pi / lam
    window = ObservationWindow(t0=0.0, duration=period,
                               weight=ConstantDamping(1.0))
    rep = observability_ratio(_mode_state(grid, lam), window,
                              config=SolverConfig(dt=1e-3))
    assert rep.observable
    assert rep.ratio == pytest.approx(1.0 / period, rel=1e-6)


def test_zero_weight_is_unobservable():
    grid = TorusGrid(1, 64)
    window = ObservationWindow(t0=0.0, duration=1.0,
                               weight=ConstantDamping(0.0))
    rep = observability_ratio(_mode_state(grid, 3), window,
                              config=SolverConfig(dt=0.01))
    assert not rep.observable
    assert rep.ratio is None


def test_beam_observability_degrades_with_k():
    # beam along y = 0 versus a bump centered off the ray: as k grows the
    # beam concentrates, its overlap with the bump collapses, and the
    # effective E / observed ratio blows past the reporting cutoff
    bump = SpaceBump(w0=1.0, center=(math.pi, 1.2), radius=1.0)
    geo = Geodesic((0.0, 0.0), (1.0, 0.0))
    reports = []
    for k in (32, 64):
        grid = TorusGrid(2, 4 * k)
        u, v = quasi_solution(BeamSpec(geodesic=geo, k=k), None, grid, 0.0)
        state = WaveState(u=u, v=v)
        window = ObservationWindow(t0=0.0, duration=1.0, weight=bump)
        reports.append(observability_ratio(
            state, window, config=SolverConfig(dt=0.01, scheme="strang")))
    assert reports[1].observed < 1e-3 * reports[0].observed
    assert all(not rep.observable for rep in reports)


def test_sandwich_constant_damping():
    grid = TorusGrid(1, 64)
    rng = np.random.default_rng(7)
    from torusdamp.grid import random_band_limited
    state = WaveState(u=random_band_limited(grid, 6, rng),
                      v=random_band_limited(grid, 6, rng))
    w = ConstantDamping(0.1)
    window = ObservationWindow(t0=0.0, duration=2.0, weight=w)
    rep = sandwich_check(state, w, window, config=SolverConfig(dt=0.01))
    assert rep.passed
    assert rep.c_t == pytest.approx(1.0 + 2 * 2.0 * 0.1)
    assert rep.lhs <= rep.mid + rep.tolerance
    assert rep.mid <= rep.rhs + rep.tolerance


def test_sandwich_requires_matching_start():
    grid = TorusGrid(1, 64)
    state = _mode_state(grid, 3)
    w = ConstantDamping(0.1)
    window = ObservationWindow(t0=1.0, duration=2.0, weight=w)
    with pytest.raises(ValueError):
        sandwich_check(state, w, window)


def test_short_time_sweep_slopes():
    deltas = np.logspace(-2, -1, 10)
    sine = short_time_sweep(1.0, 0.0, 1.0, deltas)
    cosine = short_time_sweep(0.0, 1.0, 1.0, deltas)
    assert sine.slope == pytest.approx(-3.0, abs=0.05)
    assert cosine.slope == pytest.approx(-1.0, abs=0.05)


def test_short_time_sweep_oracle_value():
    # (a, b) = (0, 1): obs = pi * integral_0^d cos^2(t) dt
    d = 0.05
    sweep = short_time_sweep(0.0, 1.0, 1.0, [d])
    obs_expect = math.pi * (d / 2 + math.sin(2 * d) / 4)
    e0 = 0.5 * math.pi
    assert sweep.ratios[0] == pytest.approx(e0 / obs_expect, rel=1e-12)


def test_short_time_sweep_validation():
    with pytest.raises(ValueError):
        short_time_sweep(1.0, 0.0, 0.0, [0.1])
    with pytest.raises(ValueError):
        short_time_sweep(1.0, 0.0, 1.0, [0.1, -0.1])


def test_decay_bookkeeping():
    book = decay_bookkeeping([0.1, 0.2, 0.3])
    assert np.allclose(book.bounds,
                       np.exp(-np.array([0.0, 0.1, 0.3, 0.6])))
    assert not book.absorbed
    clamped = decay_bookkeeping([0.5, 1.2, 0.1])
    assert clamped.absorbed
    assert clamped.bounds[2] == 0.0 and clamped.bounds[3] == 0.0
    with pytest.raises(ValueError):
        decay_bookkeeping([-0.1])


def test_measured_fractions_and_decay_bound():
    grid = TorusGrid(1, 64)
    from torusdamp.grid import random_band_limited
    rng = np.random.default_rng(11)
    state = WaveState(u=random_band_limited(grid, 6, rng),
                      v=random_band_limited(grid, 6, rng))
    w = ConstantDamping(0.2)
    _, trace = evolve(state, w, 8.0, config=SolverConfig(dt=0.01))
    fractions = measured_window_fractions(trace, 2.0)
    assert len(fractions) == 4
    assert np.all(fractions > 0)
    report = check_decay_bound(trace, 2.0)
    assert report.holds
    assert np.all(report.energies <= report.bounds * (1 + 1e-9) + 1e-14)
