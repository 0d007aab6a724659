import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from physical_spline.basis import TimeGrid, design_matrix, eval_basis


def hat_acceleration(knots, k, t):
    """Independent hat: piecewise-linear interpolation of a one-hot vector."""
    onehot = np.zeros(len(knots))
    onehot[k] = 1.0
    return np.interp(t, knots, onehot, left=0.0, right=0.0)


def cumtrapz(y, h):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * h * (y[1:] + y[:-1]))
    return out


grids = st.lists(st.floats(0.2, 2.0), min_size=1, max_size=7).map(
    lambda gaps: TimeGrid(np.concatenate([[0.0], np.cumsum(gaps)]))
)


def test_uniform_grid_layout():
    g = TimeGrid.uniform(10.0, 0.5)
    assert g.n_knots == 21 and g.n_basis == 23
    assert g.knots[0] == 0.0 and g.t_end == 10.0
    assert TimeGrid.uniform(10.01, 0.5).t_end == 10.5


@pytest.mark.parametrize("knots", [[0.0], [1.0, 2.0], [0.0, 1.0, 1.0], [0.0, 2.0, 1.0]])
def test_grid_rejects_bad_knots(knots):
    with pytest.raises(ValueError):
        TimeGrid(knots)


def test_constant_and_ramp(grid5):
    assert eval_basis(grid5, 0, 7.3, 0) == 1.0
    assert eval_basis(grid5, 0, 7.3, 1) == 0.0
    assert eval_basis(grid5, 1, 2.5, 1) == 1.0
    assert eval_basis(grid5, 1, 2.5, 0) == 2.5
    assert eval_basis(grid5, 1, 2.5, 2) == 0.0


def test_hat_peak_and_edges(grid5):
    j = 2 + 3  # hat centred at t=3
    assert eval_basis(grid5, j, 3.0, 2) == 1.0
    assert eval_basis(grid5, j, 2.0, 2) == 0.0
    assert eval_basis(grid5, j, 4.0, 2) == 0.0


def test_velocity_basis_matches_quadrature(grid5):
    h = 1e-5
    t = np.arange(0, 350001) * h
    acc = hat_acceleration(grid5.knots, 3, t)
    integral = cumtrapz(acc, h)[-1]
    assert abs(eval_basis(grid5, 5, 3.5, 1) - integral) < 1e-10


@pytest.mark.parametrize("knots", [[0, 1, 2, 3, 4, 5], [0, 0.3, 1.1, 1.5, 2.9]])
def test_all_orders_match_double_quadrature(knots):
    grid = TimeGrid(knots)
    h = 1e-4
    t = np.arange(0, int(round((grid.t_end + 1.0) / h)) + 1) * h
    D0, D1, D2 = (design_matrix(grid, t, o) for o in (0, 1, 2))
    for k in range(grid.n_knots):
        acc = hat_acceleration(grid.knots, k, t)
        vel = cumtrapz(acc, h)
        pos = cumtrapz(vel, h)
        # the last hat drops to 0 after the final knot, which trapezoids smear
        sel = slice(None) if k < grid.n_knots - 1 else t <= grid.t_end
        np.testing.assert_allclose(D2[sel, 2 + k], acc[sel], atol=1e-12)
        np.testing.assert_allclose(D1[sel, 2 + k], vel[sel], atol=1e-8)
        np.testing.assert_allclose(D0[sel, 2 + k], pos[sel], atol=1e-7)


def test_design_matrix_first_row():
    g = TimeGrid([0.0, 1.0, 2.0])
    np.testing.assert_array_equal(design_matrix(g, [0.0], 0), [[1, 0, 0, 0, 0]])


def test_design_matrix_matches_pointwise():
    g = TimeGrid([0.0, 1.0, 2.0])
    D = design_matrix(g, [0.5, 1.5], 2)
    for i, t in enumerate([0.5, 1.5]):
        for j in range(g.n_basis):
            assert D[i, j] == eval_basis(g, j, t, 2)


def test_partition_of_unity_dense():
    g = TimeGrid([0.0, 1.0, 2.0])
    t = np.linspace(0, 2, 52)[1:-1]
    sums = design_matrix(g, t, 2)[:, 2:].sum(axis=1)
    assert np.max(np.abs(sums - 1.0)) <= 1e-12


def test_boundary_hats_give_initial_acceleration(grid5):
    row = design_matrix(grid5, [0.0], 2)[0]
    assert row[2] == 1.0 and np.all(row[3:] == 0.0)
    row = design_matrix(grid5, [5.0], 2)[0]
    assert row[-1] == 1.0 and np.all(row[2:-1] == 0.0)


def test_constant_velocity_beyond_last_knot(grid5):
    D2 = design_matrix(grid5, [5.5, 9.0], 2)
    D1 = design_matrix(grid5, [5.5, 9.0], 1)
    assert np.all(D2 == 0.0)
    np.testing.assert_array_equal(D1[0], D1[1])


@pytest.mark.parametrize("bad", [dict(j=-1), dict(j=8), dict(j=1.5), dict(order=3), dict(order=-1)])
def test_eval_basis_argument_errors(grid5, bad):
    kwargs = dict(j=2, order=0)
    kwargs.update(bad)
    with pytest.raises(ValueError):
        eval_basis(grid5, kwargs["j"], 1.0, kwargs["order"])


def test_negative_time_rejected(grid5):
    with pytest.raises(ValueError):
        design_matrix(grid5, [-0.5], 0)


@settings(max_examples=40, deadline=None)
@given(grid=grids, frac=st.floats(0.001, 0.999))
def test_partition_of_unity(grid, frac):
    t = frac * grid.t_end
    total = design_matrix(grid, [t], 2)[0, 2:].sum()
    assert abs(total - 1.0) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(grid=grids, frac=st.floats(0.01, 0.99))
def test_derivative_consistency(grid, frac):
    h = 1e-4
    t = frac * grid.t_end
    t = min(max(t, 2 * h), grid.t_end - 2 * h)
    # central differences are only O(h^2) away from knots where f'' jumps
    if np.min(np.abs(grid.knots - t)) < 2 * h:
        t += 3 * h
    D0 = design_matrix(grid, [t - h, t, t + h], 0)
    D1 = design_matrix(grid, [t - h, t, t + h], 1)
    D2 = design_matrix(grid, [t], 2)[0]
    fd1 = (D0[2] - D0[0]) / (2 * h)
    fd2 = (D1[2] - D1[0]) / (2 * h)
    np.testing.assert_allclose(fd1, D1[1], rtol=1e-5, atol=1e-8)  # C h^2, C ~ 1/min gap
    np.testing.assert_allclose(fd2, D2, rtol=1e-5, atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(grid=grids)
def test_continuity_across_knots(grid):
    for tk in grid.knots[1:]:
        lo, hi = np.nextafter(tk, -np.inf), np.nextafter(tk, np.inf)
        for order in (0, 1):
            D = design_matrix(grid, [lo, tk, hi], order)
            assert np.max(np.abs(D[0] - D[1])) <= 1e-12
            assert np.max(np.abs(D[2] - D[1])) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(grid=grids)
def test_causality(grid):
    for k in range(1, grid.n_knots):
        t_prev = grid.knots[k - 1]
        t = np.linspace(0.0, t_prev, 7)
        for order in (0, 1, 2):
            assert np.all(design_matrix(grid, t, order)[:, 2 + k] == 0.0)


@settings(max_examples=30, deadline=None)
@given(grid=grids)
def test_linear_tail(grid):
    for k in range(grid.n_knots):
        start = grid.knots[k + 1] if k + 1 < grid.n_knots else grid.knots[k]
        t = start + np.array([0.1, 0.6, 1.1])
        assert np.all(design_matrix(grid, t, 2)[:, 2 + k] == 0.0)
        v = design_matrix(grid, t, 1)[:, 2 + k]
        assert np.ptp(v) <= 1e-12
        p = design_matrix(grid, t, 0)[:, 2 + k]
        assert abs(p[2] - 2 * p[1] + p[0]) <= 1e-10
