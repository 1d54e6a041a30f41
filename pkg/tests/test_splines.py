import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gereg import splines


def bernstein_cubic(x):
    return np.array([(1 - x) ** 3, 3 * x * (1 - x) ** 2, 3 * x ** 2 * (1 - x), x ** 3])


class TestMakeBasis:
    def test_k4_is_bernstein(self):
        b = splines.make_basis(4, (0.0, 1.0))
        assert np.count_nonzero((b.knots > 0) & (b.knots < 1)) == 0
        for x in [0.0, 0.17, 0.5, 0.93, 1.0]:
            np.testing.assert_allclose(splines.eval_basis(b, x), bernstein_cubic(x),
                                       atol=1e-14)

    def test_knot_count_identity(self):
        b = splines.make_basis(12, (1901.0, 2022.0))
        assert b.knots.shape == (16,)  # K + degree + 1
        interior = b.knots[(b.knots > 0) & (b.knots < 1)]
        assert interior.size == 8
        assert np.all(np.diff(b.knots) >= 0)
        assert np.sum(b.knots == 0.0) == 4 and np.sum(b.knots == 1.0) == 4
        np.testing.assert_allclose(np.diff(np.unique(b.knots)),
                                   np.full(9, 1.0 / 9.0), rtol=1e-12)

    def test_simulation_basis_buildable(self):
        b = splines.make_basis(10, (0.0, 1.0))
        assert b.num_basis == 10

    def test_rejects_small_k(self):
        with pytest.raises(ValueError):
            splines.make_basis(3, (0.0, 1.0))

    def test_rejects_degenerate_domain(self):
        with pytest.raises(ValueError):
            splines.make_basis(6, (2.0, 2.0))


class TestEvalBasis:
    def test_partition_of_unity(self):
        b = splines.make_basis(9, (-3.0, 7.0))
        rng = np.random.default_rng(0)
        xs = rng.uniform(-3.0, 7.0, 1000)
        sums = np.array([splines.eval_basis(b, x).sum() for x in xs])
        assert np.max(np.abs(sums - 1.0)) < 1e-12

    def test_left_boundary(self):
        b = splines.make_basis(7, (10.0, 20.0))
        vals = splines.eval_basis(b, 10.0)
        np.testing.assert_allclose(vals, np.eye(7)[0], atol=1e-15)

    def test_right_boundary_evaluable(self):
        b = splines.make_basis(7, (10.0, 20.0))
        vals = splines.eval_basis(b, 20.0)
        np.testing.assert_allclose(vals, np.eye(7)[-1], atol=1e-15)

    def test_outside_domain_errors(self):
        b = splines.make_basis(5, (0.0, 1.0))
        with pytest.raises(ValueError):
            splines.eval_basis(b, 1.001)
        with pytest.raises(ValueError):
            splines.eval_basis(b, -0.001)

    def test_local_support(self):
        b = splines.make_basis(12, (0.0, 1.0))
        for x in np.linspace(0, 1, 137):
            assert np.count_nonzero(splines.eval_basis(b, x)) <= 4

    def test_truncated_power_representation(self):
        # every basis function of the one-interior-knot system is exactly a
        # combination of {1, x, x^2, x^3, (x-0.5)^3_+}: fit the change of
        # basis at 5 points, then verify on a fine grid
        b = splines.make_basis(5, (0.0, 1.0))

        def tp(x):
            return np.array([1.0, x, x * x, x ** 3, max(x - 0.5, 0.0) ** 3])

        fit_x = np.array([0.05, 0.3, 0.45, 0.7, 0.95])
        A = np.array([tp(x) for x in fit_x])
        B = np.array([splines.eval_basis(b, x) for x in fit_x])
        coef = np.linalg.solve(A, B)  # columns: each spline in the tp basis
        grid = np.linspace(0.0, 1.0, 501)
        for x in grid:
            np.testing.assert_allclose(splines.eval_basis(b, x), tp(x) @ coef, atol=1e-8)

    @given(x=st.floats(0.0, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_partition_of_unity_property(self, x):
        b = splines.make_basis(8, (0.0, 1.0))
        assert splines.eval_basis(b, x).sum() == pytest.approx(1.0, abs=1e-12)


class TestDerivative:
    def test_sums_to_zero(self):
        b = splines.make_basis(11, (1901.0, 2022.0))
        for x in np.linspace(1901, 2022, 61):
            assert splines.eval_basis_deriv(b, x).sum() == pytest.approx(0.0, abs=1e-12)

    def test_matches_finite_difference(self):
        b = splines.make_basis(12, (0.0, 1.0))
        h = 1e-6
        worst = 0.0
        for x in np.linspace(h, 1 - h, 101):
            fd = (splines.eval_basis(b, x + h) - splines.eval_basis(b, x - h)) / (2 * h)
            worst = max(worst, np.max(np.abs(fd - splines.eval_basis_deriv(b, x))))
        assert worst < 1e-5

    def test_bernstein_derivative(self):
        b = splines.make_basis(4, (0.0, 1.0))
        for x in [0.1, 0.5, 0.9]:
            assert splines.eval_basis_deriv(b, x)[0] == pytest.approx(-3 * (1 - x) ** 2,
                                                                      rel=1e-12)

    def test_rescaled_domain_chain_rule(self):
        # derivative is w.r.t. the raw covariate, so widening the domain by
        # 10x shrinks the derivative by 10x at corresponding points
        b1 = splines.make_basis(6, (0.0, 1.0))
        b10 = splines.make_basis(6, (0.0, 10.0))
        np.testing.assert_allclose(splines.eval_basis_deriv(b10, 3.0),
                                   splines.eval_basis_deriv(b1, 0.3) / 10.0, rtol=1e-12)


class TestDesignMatrix:
    def test_row_sums(self):
        b = splines.make_basis(10, (0.0, 1.0))
        D = splines.design_matrix(b, np.linspace(0, 1, 55))
        np.testing.assert_allclose(D.sum(axis=1), 1.0, atol=1e-12)

    def test_yearly_shape(self):
        b = splines.make_basis(12, (1901.0, 2022.0))
        D = splines.design_matrix(b, np.arange(1901, 2023))
        assert D.shape == (122, 12)

    def test_constant_coefficients_reproduce_constant(self):
        b = splines.make_basis(12, (1901.0, 2022.0))
        D = splines.design_matrix(b, np.arange(1901, 2023))
        np.testing.assert_allclose(D @ np.full(12, 2.7), 2.7, rtol=1e-12)

    def test_interpolates_arbitrary_targets(self):
        # K coefficients can match any K values at K distinct interior sites
        K = 9
        b = splines.make_basis(K, (0.0, 1.0))
        sites = np.linspace(0.05, 0.95, K)
        rng = np.random.default_rng(4)
        targets = rng.normal(size=K)
        D = splines.design_matrix(b, sites)
        coef = np.linalg.solve(D, targets)
        assert np.max(np.abs(D @ coef - targets)) < 1e-8
