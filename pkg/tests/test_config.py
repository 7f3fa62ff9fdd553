import numpy as np
import pytest
import yaml

from torusdamp.config import (
    ConfigError,
    build_damping,
    build_gap_function,
    build_geodesic,
    build_grid,
    build_initial,
    build_solver_config,
    load_config,
    validate_config,
)


MINIMAL = {
    "kind": "simulate",
    "grid": {"dim": 1, "points_per_axis": 64},
    "damping": {"family": "constant", "a": 0.1},
    "t_end": 1.0,
}


def _write(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def test_minimal_config_loads(tmp_path):
    cfg = load_config(_write(tmp_path, MINIMAL))
    assert cfg["kind"] == "simulate"


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.yaml"))


def test_invalid_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("kind: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_unknown_top_level_key():
    with pytest.raises(ConfigError, match="unknown key"):
        validate_config({**MINIMAL, "tend": 5.0})


def test_unknown_nested_key():
    bad = dict(MINIMAL)
    bad["grid"] = {"dim": 1, "points": 64}
    with pytest.raises(ConfigError, match="unknown key"):
        validate_config(bad)


def test_unknown_damping_key():
    bad = dict(MINIMAL)
    bad["damping"] = {"family": "constant", "alpha": 0.1}
    with pytest.raises(ConfigError, match="unknown key"):
        validate_config(bad)


def test_bad_kind_and_family():
    with pytest.raises(ConfigError):
        validate_config({**MINIMAL, "kind": "explode"})
    bad = dict(MINIMAL)
    bad["damping"] = {"family": "sponge"}
    with pytest.raises(ConfigError):
        validate_config(bad)
    with pytest.raises(ConfigError):
        validate_config({"grid": {"dim": 1}})   # kind missing


def test_gap_form_validation():
    bad = dict(MINIMAL)
    bad["damping"] = {"family": "growing_off",
                      "gap": {"form": "sawtooth"}}
    with pytest.raises(ConfigError):
        validate_config(bad)


def test_initial_and_seed_validation():
    with pytest.raises(ConfigError):
        validate_config({**MINIMAL, "initial": {"type": "bessel"}})
    with pytest.raises(ConfigError):
        validate_config({**MINIMAL, "initial": {"type": "random",
                                                "modes": 3}})
    with pytest.raises(ConfigError):
        validate_config({**MINIMAL, "seed": "zero"})


def test_build_grid_and_errors():
    grid = build_grid(MINIMAL)
    assert grid.points_per_axis == 64
    with pytest.raises(ConfigError):
        build_grid({"grid": {"dim": 7}})


def test_build_damping_families():
    assert build_damping({"family": "none"}) is None
    w = build_damping({"family": "poly_product", "beta": 0.5,
                       "base": {"family": "constant", "a": 2.0}})
    assert float(w.eval(0.0, 3.0)) == pytest.approx(2.0 * 4.0 ** -0.5)
    bump = build_damping({"family": "space_bump", "w0": 1.0,
                          "center": [np.pi], "radius": 1.0})
    assert float(bump.eval(np.pi, 0.0)) == pytest.approx(1.0)
    onoff = build_damping({"family": "growing_off", "l0": 1.0,
                           "gap": {"form": "power", "c1": 1.0, "alpha": 1.0}})
    assert onoff.on_windows(3.0) == [(0.0, 1.0), (2.0, 3.0)]
    shrink = build_damping({"family": "shrinking_on", "s0": 2.0,
                            "gap": {"form": "shrink_power", "scale": 2.0,
                                    "beta": 0.2}})
    assert float(shrink.eval(0.0, 0.5)) == 1.0
    with pytest.raises(ConfigError):
        build_damping({"family": "constant", "a": -1.0})


def test_build_gap_function_forms():
    power = build_gap_function({"form": "power", "c1": 2.0, "alpha": 1.0})
    assert power(3) == pytest.approx(6.0)
    assert power(0) == pytest.approx(2.0)   # floor keeps f >= c1
    expo = build_gap_function({"form": "exponential", "c1": 1.0, "ratio": 2.0})
    assert expo(3) == pytest.approx(8.0)
    shrink = build_gap_function({"form": "shrink_power", "scale": 2.0,
                                 "beta": 0.5})
    assert shrink(3) == pytest.approx(1.0)


def test_build_solver_config():
    grid = build_grid(MINIMAL)
    cfg = build_solver_config({"solver": {"dt": 0.01, "scheme": "strang"}}, grid)
    assert cfg.dt == 0.01 and cfg.scheme == "strang"
    auto = build_solver_config({}, grid)
    assert auto.dt > 0
    with pytest.raises(ConfigError):
        build_solver_config({"solver": {"scheme": "leapfrog"}}, grid)


def test_build_initial_kinds():
    grid = build_grid(MINIMAL)
    rng = np.random.default_rng(0)
    state = build_initial({"initial": {"type": "random", "max_mode": 5}},
                          grid, rng)
    assert state.u.grid == grid
    mode = build_initial({"initial": {"type": "mode", "lam": 3, "a": 1.0}},
                         grid, rng)
    assert np.allclose(mode.u.values, np.cos(3 * grid.axis()))
    with pytest.raises(ConfigError):
        build_initial({"initial": {"type": "random", "max_mode": 64}},
                      grid, rng)


def test_build_geodesic():
    grid = build_grid({"grid": {"dim": 2, "points_per_axis": 16}})
    geo = build_geodesic({"beam": {"x0": [0.0, 0.0],
                                   "direction": [1.0, 1.0]}}, grid)
    assert np.isclose(np.linalg.norm(geo.direction), 1.0)
    with pytest.raises(ConfigError):
        build_geodesic({"beam": {"direction": [0.0, 0.0]}}, grid)
