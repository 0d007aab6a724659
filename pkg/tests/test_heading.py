import numpy as np
import pytest

from physical_spline import (
    FitConfig,
    HeadingSpline,
    Kind,
    Measurement,
    NormalEquations,
    UndefinedHeadingError,
    fit_heading,
    reconstruct_heading,
)
from physical_spline.basis import TimeGrid
from physical_spline.heading import (
    add_acceleration_heading_cost,
    add_heading_measurement_cost,
    add_velocity_heading_cost,
)
from physical_spline.measurements import wrap_angle
from physical_spline.solver import solve_stacked
from physical_spline.synth import make_scenario

from conftest import scenario_measurements


def heading_set(times, psi, c=1.0):
    return [Measurement(float(t), Kind.HEADING, float(p), c) for t, p in zip(times, np.broadcast_to(psi, np.shape(times)))]


def test_zero_heading_at_origin(grid5):
    ne = NormalEquations.for_grid(grid5)
    add_heading_measurement_cost(ne, grid5, heading_set([0.0], 0.0))
    n = grid5.n_basis
    assert ne.b[0] == 1.0 and not ne.b[n:].any()


def test_constant_heading_recovered():
    t = np.linspace(0, 10, 101)
    grid = TimeGrid.uniform(10.0, 0.5)
    hs = fit_heading(heading_set(t, np.pi / 3), grid=grid)
    dense = np.linspace(0, 10, 1001)
    c, s = hs.components(dense)
    np.testing.assert_allclose(c, 0.5, atol=1e-6)
    np.testing.assert_allclose(s, np.sqrt(3) / 2, atol=1e-6)
    assert np.max(np.abs(hs.reconstruct(dense) - np.pi / 3)) < 1e-6


def test_wrapped_heading_same_system(grid5):
    a, b = NormalEquations.for_grid(grid5), NormalEquations.for_grid(grid5)
    add_heading_measurement_cost(a, grid5, heading_set([1.2, 3.3], 2.5))
    add_heading_measurement_cost(b, grid5, heading_set([1.2, 3.3], 2.5 + 2 * np.pi))
    np.testing.assert_allclose(a.Q, b.Q, atol=1e-15)
    np.testing.assert_allclose(a.b, b.b, atol=1e-14)


def test_velocity_cost_along_x_penalizes_sine(grid5):
    ne = NormalEquations.for_grid(grid5)
    add_velocity_heading_cost(ne, grid5, [(2.0, 1.0, 0.0)])
    n = grid5.n_basis
    assert not ne.Q[:n, :].any() and ne.Q[n:, n:].any()


def test_zero_velocity_sample_adds_nothing(grid5):
    ne = NormalEquations.for_grid(grid5)
    add_velocity_heading_cost(ne, grid5, [(2.0, 0.0, 0.0)])
    assert not ne.Q.any()


def _circle(R=20.0, v=5.0, T=20.0, rate=10.0):
    t = np.arange(int(T * rate) + 1) / rate
    w = v / R
    th = w * t
    vel = np.column_stack([t, -v * np.sin(th), v * np.cos(th)])
    ax, ay = -v * w * np.cos(th), -v * w * np.sin(th)
    acc = np.column_stack([t, ax, ay, np.full_like(t, v), np.zeros_like(t)])
    return t, th + np.pi / 2, vel, acc, w


def test_circle_velocity_heading_tangent():
    t, psi, vel, _, _ = _circle()
    # anchor with a single heading sample; velocities carry the rest
    cfg = FitConfig(c_heading=1.0, c_heading_vel=100.0)
    hs = fit_heading(heading_set([0.0], psi[0]), vel, None, cfg, TimeGrid.uniform(20.0, 0.5))
    inner = (t > 1) & (t < 19)
    err = wrap_angle(hs.reconstruct(t[inner]) - psi[inner])
    assert np.max(np.abs(err)) < 0.01


def test_circle_acceleration_heading_rate():
    t, psi, _, acc, w = _circle()
    cfg = FitConfig(c_heading=1e-3, c_heading_vel=0.0, c_heading_acc=10.0)
    hs = fit_heading(heading_set(t, psi), None, acc, cfg, TimeGrid.uniform(20.0, 0.5))
    inner = np.linspace(2, 18, 801)
    rate = np.gradient(np.unwrap(hs.reconstruct(inner)), inner)
    assert np.mean(rate) == pytest.approx(w, rel=0.01)


def test_straight_line_acceleration_residual_zero(grid5):
    ne = NormalEquations.for_grid(grid5)
    t = np.linspace(0, 5, 11)
    acc = np.column_stack([t, 0 * t, 0 * t, np.full_like(t, 3.0), 0 * t])
    add_acceleration_heading_cost(ne, grid5, acc, 1.0)
    n = grid5.n_basis
    w = np.zeros(2 * n)
    w[0], w[n] = np.cos(0.7), np.sin(0.7)
    assert w @ ne.Q @ w - 2 * ne.b @ w == pytest.approx(0.0, abs=1e-12)


def test_slow_acceleration_samples_skipped(grid5):
    ne = NormalEquations.for_grid(grid5)
    acc = [(1.0, 1.0, 0.0, 0.0, 0.0), (2.0, 1.0, 0.0, 0.05, 0.0), (3.0, 1.0, 0.0, 2.0, 0.0)]
    assert add_acceleration_heading_cost(ne, grid5, acc, 1.0, v_min=0.1) == 2
    ref = NormalEquations.for_grid(grid5)
    add_acceleration_heading_cost(ref, grid5, acc[2:], 1.0, v_min=0.1)
    np.testing.assert_array_equal(ne.Q, ref.Q)


@pytest.mark.parametrize("c,s,expected", [
    (1.0, 0.0, 0.0),
    (0.0, 1.0, np.pi / 2),
    (-0.5, -0.5, -3 * np.pi / 4),
    (-1.0, 0.0, np.pi),
])
def test_reconstruct_quadrants(c, s, expected):
    grid = TimeGrid([0.0, 1.0])
    hs = HeadingSpline(grid, np.array([c, 0, 0, 0]), np.array([s, 0, 0, 0]))
    assert reconstruct_heading(hs, 0.5) == pytest.approx(expected, abs=1e-15)


def test_reconstruct_undefined():
    grid = TimeGrid([0.0, 1.0])
    hs = HeadingSpline(grid, np.zeros(4), np.array([1e-8, 0, 0, 0]))
    with pytest.raises(UndefinedHeadingError):
        reconstruct_heading(hs, 0.5)
    assert np.isnan(hs.reconstruct([0.5], strict=False)[0])


def test_no_inputs_error():
    with pytest.raises(ValueError):
        fit_heading([], grid=TimeGrid.uniform(5, 1))


def test_rotation_equivariance():
    sc = make_scenario("turn", seed=2)
    m = sc.measured
    grid = TimeGrid.uniform(float(m["t"][-1]), 0.5)
    cfg = FitConfig(c_heading_acc=0.0)
    base = fit_heading(heading_set(m["t"], m["psi"]), np.column_stack([m["t"], m["vx"], m["vy"]]), None, cfg, grid)
    th = 0.8
    c, s = np.cos(th), np.sin(th)
    vel = np.column_stack([m["t"], c * m["vx"] - s * m["vy"], s * m["vx"] + c * m["vy"]])
    rot = fit_heading(heading_set(m["t"], wrap_angle(m["psi"] + th)), vel, None, cfg, grid)
    dense = np.linspace(0, m["t"][-1], 500)
    diff = wrap_angle(rot.reconstruct(dense) - base.reconstruct(dense) - th)
    assert np.max(np.abs(diff)) < 1e-9


def test_continuity_on_smooth_input():
    t, psi, vel, _, _ = _circle()
    hs = fit_heading(heading_set(t, psi), vel, None, FitConfig(), TimeGrid.uniform(20.0, 0.5))
    dense = np.arange(0, 20.0, 1e-3)
    c, s = hs.components(dense)
    assert np.min(np.hypot(c, s)) > 1e-3
    jumps = np.abs(wrap_angle(np.diff(hs.reconstruct(dense))))
    assert jumps.max() < 0.1


def test_zero_weight_headings_noop():
    t, psi, vel, _, _ = _circle()
    grid = TimeGrid.uniform(20.0, 0.5)
    base = heading_set(t, psi)
    extra = heading_set(np.linspace(0.3, 19.7, 30), 2.0, c=0.0)
    a = fit_heading(base, vel, None, FitConfig(), grid)
    b = fit_heading(base + extra, vel, None, FitConfig(), grid)
    np.testing.assert_array_equal(a.cos_block, b.cos_block)
    np.testing.assert_array_equal(a.sin_block, b.sin_block)


def test_turn_heading_beats_raw():
    sc = make_scenario("turn", seed=5)
    m = sc.measured
    grid = TimeGrid.uniform(float(m["t"][-1]), 0.5)
    hs = fit_heading(heading_set(m["t"], m["psi"]), np.column_stack([m["t"], m["vx"], m["vy"]]),
                     None, FitConfig(), grid)
    inner = (m["t"] >= 1) & (m["t"] <= m["t"][-1] - 1)
    truth = sc.truth["psi"][inner]
    fit_rms = np.sqrt(np.mean(wrap_angle(hs.reconstruct(m["t"][inner]) - truth) ** 2))
    raw_rms = np.sqrt(np.mean(wrap_angle(m["psi"][inner] - truth) ** 2))
    assert fit_rms < raw_rms


def test_velocity_only_pseudo_targets():
    t, psi, vel, _, _ = _circle()
    hs = fit_heading([], vel, None, FitConfig(), TimeGrid.uniform(20.0, 0.5))
    inner = (t > 1) & (t < 19)
    assert np.max(np.abs(wrap_angle(hs.reconstruct(t[inner]) - psi[inner]))) < 0.01


def test_extended_heading_coasts():
    t, psi, vel, _, _ = _circle()
    hs = fit_heading(heading_set(t, psi), vel, None, FitConfig(), TimeGrid.uniform(20.0, 0.5))
    ext = hs.extended(4)
    inside = np.linspace(0, 20, 101)
    np.testing.assert_array_equal(ext.reconstruct(inside), hs.reconstruct(inside))
