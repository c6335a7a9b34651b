import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mpft.direction import (
    is_pareto_stationary,
    min_norm_weights,
    min_norm_weights_2,
    pareto_ascent_direction,
    pareto_reverse_direction,
    project_simplex,
    projected_gradient_weights,
)
from mpft.errors import DimensionError, NumericError
from oracles import grid_min_norm, random_gradient_instances, simplex_grid

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


class TestProjectSimplex:
    def test_fixed_point(self):
        np.testing.assert_allclose(project_simplex([0.5, 0.5]), [0.5, 0.5])

    def test_clamp_to_vertex(self):
        np.testing.assert_allclose(project_simplex([2.0, 0.0]), [1.0, 0.0])

    def test_interior_shift_against_grid(self):
        v = np.array([0.8, 0.4])
        x = project_simplex(v)
        np.testing.assert_allclose(x, [0.7, 0.3], atol=1e-12)
        grid = simplex_grid(2, 1e-3)
        best = grid[np.argmin(((grid - v) ** 2).sum(1))]
        np.testing.assert_allclose(x, best, atol=1e-3)

    def test_nonfinite(self):
        with pytest.raises(NumericError):
            project_simplex([np.inf, 0.0])

    @settings(max_examples=200, deadline=None)
    @given(arrays(float, st.integers(1, 6), elements=finite))
    def test_on_simplex(self, v):
        x = project_simplex(v)
        assert np.all(x >= 0)
        assert abs(x.sum() - 1.0) <= 1e-9

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, 3, elements=st.floats(-3, 3)))
    def test_closest_point_on_grid(self, v):
        x = project_simplex(v)
        grid = simplex_grid(3, 1e-2)
        best = float(((grid - v) ** 2).sum(1).min())
        assert ((x - v) ** 2).sum() <= best + 1e-9


class TestClosedForm:
    def test_orthogonal(self):
        r = min_norm_weights_2([[1, 0], [0, 1]])
        np.testing.assert_allclose(r.alpha, [0.5, 0.5])
        np.testing.assert_allclose(r.direction, [0.5, 0.5])

    def test_opposing(self):
        r = min_norm_weights_2([[1, 0], [-1, 0]])
        np.testing.assert_allclose(r.alpha, [0.5, 0.5])
        assert r.squared_norm == 0.0

    def test_unequal_lengths_against_line_search(self):
        G = np.array([[2.0, 0.0], [0.0, 1.0]])
        r = min_norm_weights_2(G)
        np.testing.assert_allclose(r.alpha, [0.2, 0.8], atol=1e-12)
        np.testing.assert_allclose(r.direction, [0.4, 0.8], atol=1e-12)
        a = np.linspace(0, 1, 10001)
        vals = ((a[:, None] * G[0] + (1 - a[:, None]) * G[1]) ** 2).sum(1)
        assert abs(a[np.argmin(vals)] - 0.2) <= 1e-4

    def test_identical(self):
        r = min_norm_weights_2([[1.0, 2.0], [1.0, 2.0]])
        np.testing.assert_allclose(r.alpha, [0.5, 0.5])
        np.testing.assert_allclose(r.direction, [1.0, 2.0])

    def test_wrong_m(self):
        with pytest.raises(DimensionError):
            min_norm_weights_2(np.eye(3))

    @settings(max_examples=100, deadline=None)
    @given(arrays(float, (2, 4), elements=st.floats(-5, 5)), st.floats(0.01, 100))
    def test_scale_covariance(self, G, c):
        r1 = min_norm_weights_2(G)
        r2 = min_norm_weights_2(c * G)
        np.testing.assert_allclose(r1.alpha, r2.alpha, atol=1e-9)
        np.testing.assert_allclose(c * r1.direction, r2.direction, atol=1e-7 * (1 + c))


class TestIterative:
    def test_delegates_for_two(self):
        G = np.array([[1.0, 3.0, -1.0], [0.5, -2.0, 1.0]])
        np.testing.assert_allclose(min_norm_weights(G).alpha, min_norm_weights_2(G).alpha)

    def test_iterative_matches_closed_form(self):
        for G in random_gradient_instances(30, seed=1):
            if G.shape[0] != 2:
                continue
            a = projected_gradient_weights(G).alpha
            b = min_norm_weights_2(G).alpha
            assert np.max(np.abs(a - b)) <= 1e-6

    def test_orthonormal_three(self):
        r = min_norm_weights(np.eye(3))
        np.testing.assert_allclose(r.alpha, [1 / 3] * 3, atol=1e-8)
        assert abs(r.squared_norm - 1 / 3) <= 1e-9
        assert r.squared_norm <= grid_min_norm(np.eye(3), 1e-2) + 1e-12

    def test_identical_three(self):
        r = min_norm_weights(np.ones((3, 2)))
        np.testing.assert_allclose(r.direction, [1.0, 1.0])
        assert abs(r.squared_norm - 2.0) <= 1e-12

    def test_iteration_cap_flag(self):
        G = np.array([[1.0, 0.0, 0.0], [0.0, 1e-3, 0.0], [0.0, 0.0, 5.0]])
        r = projected_gradient_weights(G, tol=1e-15, max_iters=3)
        assert not r.converged
        assert r.iterations == 3
        assert abs(r.alpha.sum() - 1.0) <= 1e-12

    def test_squared_norm_consistent(self):
        for G in random_gradient_instances(20, seed=2):
            r = min_norm_weights(G)
            assert abs(r.squared_norm - float(r.direction @ r.direction)) <= 1e-9
            assert np.all(r.alpha >= 0) and abs(r.alpha.sum() - 1) <= 1e-9

    def test_kkt_inactive_rows(self):
        # Zero-weight rows must see at least the common projection.
        for G in random_gradient_instances(60, seed=3):
            r = min_norm_weights(G)
            proj = G @ r.direction
            active = r.alpha > 1e-6
            common = proj[active].mean()
            assert np.all(proj[~active] >= common - 1e-6)


class TestAscent:
    def test_equal_projection_simple(self):
        r = pareto_ascent_direction([[1, 0], [0, 1]])
        G = np.eye(2)
        np.testing.assert_allclose(G @ r.direction, [0.5, 0.5])

    def test_equal_projection_random(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            G = rng.normal(size=(2, 4))
            r = pareto_ascent_direction(G)
            proj = G @ r.direction
            act = proj[r.alpha > 1e-6]
            assert np.ptp(act) <= 1e-6 * (1 + np.abs(act).max())


class TestReverse:
    def test_two_objectives(self):
        r = pareto_reverse_direction([[3.0, 1.0], [0.0, 1.0]], excluded=0)
        np.testing.assert_allclose(r.alpha, [0.0, 1.0])
        np.testing.assert_allclose(r.direction, [0.0, 1.0])

    def test_three_reduces_to_closed_form(self):
        G = np.array([[1.0, 0.0], [0.0, 1.0], [-4.0, 7.0]])
        r = pareto_reverse_direction(G, excluded=2)
        np.testing.assert_allclose(r.alpha, [0.5, 0.5, 0.0], atol=1e-9)
        np.testing.assert_allclose(r.direction, [0.5, 0.5], atol=1e-9)

    def test_three_opposing(self):
        G = np.array([[5.0, 5.0], [1.0, 0.0], [-1.0, 0.0]])
        assert pareto_reverse_direction(G, excluded=0).squared_norm <= 1e-12

    def test_excluded_weight_exactly_zero(self):
        for G in random_gradient_instances(30, seed=4):
            for i in range(G.shape[0]):
                assert pareto_reverse_direction(G, i).alpha[i] == 0.0

    def test_errors(self):
        with pytest.raises(DimensionError):
            pareto_reverse_direction([[1.0, 0.0]], 0)
        with pytest.raises(IndexError):
            pareto_reverse_direction(np.eye(2), 2)


class TestStationary:
    def test_cases(self):
        assert is_pareto_stationary([[1, 0], [-1, 0]], eps=1e-8)
        assert not is_pareto_stationary([[1, 0], [0, 1]], eps=1e-8)
        assert is_pareto_stationary(np.zeros((3, 4)))

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            is_pareto_stationary(np.eye(2), eps=0.0)
