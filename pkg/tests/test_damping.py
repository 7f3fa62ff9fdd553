import numpy as np
import pytest

from torusdamp.damping import (
    ConstantDamping,
    GrowingOff,
    PolyProduct,
    ShrinkingOn,
    SpaceBump,
    indicator_chi,
    smooth_chi,
)
from torusdamp.grid import TorusGrid


def test_constant_damping():
    w = ConstantDamping(0.3)
    assert w.sup_norm == 0.3
    assert np.allclose(w.eval(np.array([0.0, 1.0]), 5.0), 0.3)
    assert w.autonomous
    with pytest.raises(ValueError):
        ConstantDamping(-0.1)
    with pytest.raises(ValueError):
        w.eval(0.0, -1.0)


def test_space_bump_support_and_periodicity():
    w = SpaceBump(w0=2.0, center=(np.pi,), radius=1.0)
    assert float(w.eval(np.pi, 0.0)) == pytest.approx(2.0)
    assert float(w.eval(np.pi + 1.5, 0.0)) == 0.0
    # torus distance wraps: x = center + period - 0.5 is 0.5 away
    assert float(w.eval(np.pi + 2 * np.pi - 0.5, 3.0)) == \
        pytest.approx(float(w.eval(np.pi + 0.5, 0.0)))
    grid = TorusGrid(1, 64)
    snap = w.snapshot(grid, 0.0)
    assert snap.kind == "damping-snapshot"
    assert float(np.max(snap.values.real)) <= 2.0
    with pytest.raises(ValueError):
        SpaceBump(w0=1.0, center=(0.0,), radius=-1.0)


def test_space_bump_dimension_mismatch():
    w = SpaceBump(w0=1.0, center=(np.pi, np.pi), radius=1.0)
    with pytest.raises(ValueError):
        w.eval(np.array([0.0]), 0.0)


def test_poly_product_values():
    w = PolyProduct(ConstantDamping(2.0), beta=0.5)
    t = 3.0
    assert float(w.eval(0.0, t)) == pytest.approx(2.0 * (1 + t) ** -0.5)
    assert w.sup_norm == 2.0
    with pytest.raises(ValueError):
        PolyProduct(ConstantDamping(1.0), beta=-1.0)
    with pytest.raises(ValueError):
        PolyProduct(ConstantDamping(1.0), beta=0.5, c_m=2.0, c_big_m=1.0)


def test_growing_off_schedule():
    # f(j) = j: on-windows [0,1], [2,3], [5,6], [9,10], [14,15], ...
    w = GrowingOff(ConstantDamping(1.0), l0=1.0, f=lambda j: float(j))
    assert w.on_windows(15.0) == [(0.0, 1.0), (2.0, 3.0), (5.0, 6.0),
                                  (9.0, 10.0), (14.0, 15.0)]
    assert float(w.eval(0.0, 0.5)) == 1.0
    assert float(w.eval(0.0, 1.5)) == 0.0
    assert float(w.eval(0.0, 5.5)) == 1.0
    disc = w.discontinuity_times(6.0)
    assert np.allclose(disc, [1.0, 2.0, 3.0, 5.0, 6.0])


def test_growing_off_base_sees_local_time():
    base = PolyProduct(ConstantDamping(1.0), beta=1.0)
    w = GrowingOff(base, l0=1.0, f=lambda j: float(j))
    # t = 5.5 is in the window starting at 5, so local time is 0.5
    assert float(w.eval(0.0, 5.5)) == pytest.approx(1.0 / 1.5)


def test_growing_off_validation():
    with pytest.raises(ValueError):
        GrowingOff(ConstantDamping(1.0), l0=0.0, f=lambda j: 1.0)
    w = GrowingOff(ConstantDamping(1.0), l0=1.0, f=lambda j: -1.0)
    with pytest.raises(ValueError):
        w.eval(0.0, 10.0)


def test_chi_functions():
    assert indicator_chi(0.5) == 1.0
    assert indicator_chi(-0.1) == 0.0
    assert indicator_chi(1.1) == 0.0
    s = np.linspace(0.25, 0.75, 11)
    assert np.allclose(smooth_chi(s), 1.0)
    assert smooth_chi(-0.2) == 0.0
    assert smooth_chi(1.2) == 0.0
    assert 0.0 < float(smooth_chi(0.1)) < 1.0


def test_shrinking_on_windows_and_values():
    s0 = 2.0
    w = ShrinkingOn(s0=s0, f=lambda k: s0 * (1 + k) ** -0.5, chi=indicator_chi)
    # window k covers [k s0, k s0 + f(k)]
    assert float(w.eval(0.0, 0.5)) == 1.0          # f(0) = 2
    assert float(w.eval(0.0, 2.5)) == 1.0          # f(1) ~ 1.414
    assert float(w.eval(0.0, 3.9)) == 0.0
    wins = w.on_windows(6.0)
    assert wins[0] == (0.0, 2.0)
    assert wins[1][0] == 2.0 and wins[1][1] == pytest.approx(2.0 + 2 / np.sqrt(2))
    disc = w.discontinuity_times(4.0)
    assert 2.0 in disc and pytest.approx(2.0 + 2 / np.sqrt(2)) in list(disc)


def test_shrinking_on_validation():
    with pytest.raises(ValueError):
        ShrinkingOn(s0=-1.0, f=lambda k: 0.5)
    with pytest.raises(ValueError):
        ShrinkingOn(s0=2.0, f=lambda k: 0.5, g_floor=0.0)
    w = ShrinkingOn(s0=2.0, f=lambda k: 3.0)
    with pytest.raises(ValueError):
        w.eval(0.0, 0.5)   # f(0) = 3 > s0


def test_describe_round_trips_params():
    w = PolyProduct(ConstantDamping(1.0), beta=0.5)
    d = w.describe()
    assert d["family"] == "poly_product"
    assert d["beta"] == 0.5
    assert d["base"]["family"] == "constant"
