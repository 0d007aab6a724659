import numpy as np
import pytest

from physical_spline.evaluation import compare_tracks, metric
from physical_spline.synth import DEFAULTS, SCENARIOS, make_scenario


@pytest.mark.parametrize("name", SCENARIOS)
def test_truth_is_kinematically_consistent(name):
    tr = make_scenario(name).truth
    t = tr["t"]
    dt = np.diff(t)
    # trapezoid rule on velocity; generous for the curved scenarios
    dx = np.diff(tr["x"]) - 0.5 * dt * (tr["vx"][1:] + tr["vx"][:-1])
    dy = np.diff(tr["y"]) - 0.5 * dt * (tr["vy"][1:] + tr["vy"][:-1])
    assert np.max(np.abs(dx)) < 1e-3 and np.max(np.abs(dy)) < 1e-3
    np.testing.assert_allclose(tr["speed"], np.hypot(tr["vx"], tr["vy"]))


def test_same_seed_same_data():
    a, b = make_scenario("turn", seed=3), make_scenario("turn", seed=3)
    for k in a.measured:
        np.testing.assert_array_equal(a.measured[k], b.measured[k])


def test_circle_sine_defaults():
    sc = make_scenario("circle_sine")
    assert sc.params == DEFAULTS["circle_sine"]
    r = np.hypot(sc.measured["x"], sc.measured["y"])
    assert r.max() == pytest.approx(20.5, abs=0.03) and r.min() == pytest.approx(19.5, abs=0.03)
    np.testing.assert_allclose(sc.truth["speed"], 5.0)


def test_lon_jump_step():
    sc = make_scenario("lon_jump")
    h = sc.params["heading"]
    lon = np.cos(h) * (sc.measured["x"] - sc.truth["x"]) + np.sin(h) * (sc.measured["y"] - sc.truth["y"])
    t = sc.truth["t"]
    np.testing.assert_allclose(lon[t < 5], 0.0, atol=1e-12)
    np.testing.assert_allclose(lon[t >= 5], 2.0, atol=1e-12)


def test_unknown_scenario_and_param():
    with pytest.raises(ValueError, match="unknown scenario"):
        make_scenario("spiral")
    with pytest.raises(ValueError, match="no parameter"):
        make_scenario("turn", wobble=1)


def test_compare_identity_and_offset():
    tr = make_scenario("turn").truth
    for m in compare_tracks(tr, tr):
        assert m.rmse == 0.0
    est = dict(tr, x=tr["x"] + 1.0)
    ms = compare_tracks(est, tr)
    assert metric(ms, "position").rmse == pytest.approx(1.0)
    # along +x during the lead-in: all longitudinal
    assert metric(ms, "longitudinal", "start").rmse == pytest.approx(1.0)
    assert metric(ms, "lateral", "start").rmse == pytest.approx(0.0, abs=1e-12)


def test_compare_regions_and_interpolation():
    tr = make_scenario("const_accel").truth
    est = {k: v[::3] for k, v in tr.items()}
    ms = compare_tracks(est, tr, edge=2.0)
    assert metric(ms, "position", "interior").count < metric(ms, "position", "all").count
    assert metric(ms, "position", "start").count > 0
    with pytest.raises(KeyError):
        metric(ms, "nothing")


def test_compare_no_overlap():
    tr = make_scenario("const_accel").truth
    with pytest.raises(ValueError):
        compare_tracks(dict(tr, t=tr["t"] + 100), tr)
