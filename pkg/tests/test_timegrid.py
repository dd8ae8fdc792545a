import numpy as np
import pytest
from hypothesis import given, strategies as st

from switchctl.timegrid import H1, PIECEWISE_CONSTANT, build_time_grid, consistent_mass

grids = st.tuples(st.floats(0.1, 50.0), st.integers(2, 200))


def test_default_grid_101_nodes():
    g = build_time_grid(10.0, 101)
    assert g.tau == pytest.approx(0.1)
    assert g.weights[0] == pytest.approx(0.05)
    assert g.weights[50] == pytest.approx(0.1)
    assert g.weights.sum() == pytest.approx(10.0)


def test_single_element():
    g = build_time_grid(1.0, 2)
    np.testing.assert_allclose(g.stiffness, [[1, -1], [-1, 1]])
    np.testing.assert_allclose(g.weights, [0.5, 0.5])


def test_linear_slope_three():
    g = build_time_grid(2.0, 11)
    v = 3.0 * g.nodes
    assert v @ g.stiffness @ v == pytest.approx(18.0, abs=1e-12)


@pytest.mark.parametrize("T,M", [(0.0, 5), (-1.0, 5), (1.0, 1), (1.0, 0)])
def test_rejects_bad_input(T, M):
    with pytest.raises(ValueError):
        build_time_grid(T, M)


@given(grids)
def test_grid_invariants(tm):
    T, M = tm
    g = build_time_grid(T, M)
    assert g.weights.sum() == pytest.approx(T, rel=1e-12)
    assert np.max(np.abs(g.stiffness @ np.ones(M))) <= 1e-9 * (M / T)
    np.testing.assert_array_equal(g.stiffness, g.stiffness.T)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == pytest.approx(T)


@given(grids, st.floats(-5, 5))
def test_linear_quadratic_form(tm, s):
    T, M = tm
    g = build_time_grid(T, M)
    v = s * g.nodes
    assert v @ g.stiffness @ v == pytest.approx(s * s * T, rel=1e-10, abs=1e-12)


@given(grids)
def test_lumping_is_row_sum(tm):
    g = build_time_grid(*tm)
    np.testing.assert_allclose(consistent_mass(g).sum(axis=1), g.weights, rtol=0, atol=1e-14 * max(1, g.tau))


def test_stiffness_semidefinite():
    g = build_time_grid(10.0, 51)
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = rng.standard_normal(51)
        assert v @ g.stiffness @ v >= 0


def test_control_layouts():
    g = build_time_grid(1.0, 5)
    assert g.control_size(H1) == 5 and g.control_size(PIECEWISE_CONSTANT) == 4
    np.testing.assert_allclose(g.control_weights(PIECEWISE_CONSTANT), 0.25)
    np.testing.assert_allclose(g.control_times(PIECEWISE_CONSTANT), [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_array_equal(g.control_times(H1), g.nodes)
