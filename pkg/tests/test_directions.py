"""B-spline basis, direction calibration, and enumeration behavior.

The independent oracle for basis evaluation is scipy.interpolate.BSpline
built from the same clamped knot vector; quadrature norms are checked
against scipy's trapezoid rule on a fine grid.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid
from scipy.interpolate import BSpline

from bifreg import (
    BSplineBasis,
    Curve,
    Direction,
    DomainError,
    EnumerationCapError,
    Grid,
    GridMismatchError,
    ValidationError,
    basis_eval,
    enumerate_directions,
    project,
    render_matrix,
)


def oracle_basis_matrix(basis: BSplineBasis, tt: np.ndarray) -> np.ndarray:
    """scipy route: evaluate each basis function via BSpline objects."""
    deg = basis.order - 1
    knots = basis.knot_vector
    cols = []
    for j in range(basis.dimension):
        c = np.zeros(basis.dimension)
        c[j] = 1.0
        spl = BSpline(knots, c, deg, extrapolate=False)
        vals = spl(tt)
        # scipy returns nan at the right endpoint of a clamped basis
        vals = np.nan_to_num(vals, nan=0.0)
        cols.append(vals)
    out = np.stack(cols, axis=1)
    # restore the partition-of-unity limit at t = b
    at_end = np.isclose(tt, knots[-1])
    out[at_end, :] = 0.0
    out[at_end, -1] = 1.0
    return out


class TestBasis:
    def test_dimension_and_knots(self):
        basis = BSplineBasis(order=3, interior_knots=3, domain=(0.0, 1.0))
        assert basis.dimension == 6
        np.testing.assert_allclose(
            basis.knot_vector,
            [0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0],
        )

    def test_order_below_two_rejected(self):
        with pytest.raises(ValidationError):
            BSplineBasis(order=1, interior_knots=3)

    def test_negative_knots_rejected(self):
        with pytest.raises(ValidationError):
            BSplineBasis(order=3, interior_knots=-1)

    def test_bad_domain_rejected(self):
        with pytest.raises(ValidationError):
            BSplineBasis(order=3, interior_knots=3, domain=(1.0, 0.0))

    @pytest.mark.parametrize("order,m", [(2, 0), (2, 4), (3, 3), (4, 2), (5, 5)])
    def test_matches_scipy_oracle(self, order, m):
        basis = BSplineBasis(order=order, interior_knots=m, domain=(0.0, 1.0))
        tt = np.linspace(0.0, 1.0, 257)
        ours = basis_eval(basis, tt)
        oracle = oracle_basis_matrix(basis, tt)
        np.testing.assert_allclose(ours, oracle, atol=1e-12)

    def test_matches_scipy_on_shifted_domain(self):
        basis = BSplineBasis(order=3, interior_knots=2, domain=(-1.0, 2.0))
        tt = np.linspace(-1.0, 2.0, 101)
        np.testing.assert_allclose(
            basis_eval(basis, tt), oracle_basis_matrix(basis, tt), atol=1e-12
        )

    @given(t=st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=80, deadline=None)
    def test_partition_of_unity(self, t):
        basis = BSplineBasis(order=3, interior_knots=3)
        vals = basis_eval(basis, t)
        assert np.all(vals >= -1e-14)
        assert float(vals.sum()) == pytest.approx(1.0, abs=1e-12)

    def test_scalar_and_vector_agree(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        tt = np.array([0.0, 0.3, 0.5, 1.0])
        mat = basis_eval(basis, tt)
        for i, t in enumerate(tt):
            np.testing.assert_allclose(basis_eval(basis, float(t)), mat[i])

    def test_endpoint_values(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        left = basis_eval(basis, 0.0)
        right = basis_eval(basis, 1.0)
        assert left[0] == pytest.approx(1.0)
        assert np.all(left[1:] == 0.0)
        assert right[-1] == pytest.approx(1.0)
        assert np.all(right[:-1] == 0.0)

    def test_outside_domain_raises(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        with pytest.raises(DomainError):
            basis_eval(basis, 1.5)
        with pytest.raises(DomainError):
            basis_eval(basis, np.array([0.2, -0.3]))

    def test_render_matrix_cached_and_readonly(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        g = Grid.uniform(20)
        m1 = render_matrix(basis, g)
        m2 = render_matrix(basis, g)
        assert m1 is m2
        with pytest.raises(ValueError):
            m1[0, 0] = 5.0


class TestDirection:
    def test_wrong_coeff_length(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        with pytest.raises(ValidationError):
            Direction(basis, np.ones(4))

    def test_values_and_call(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        d = Direction(basis, np.ones(6))
        # all-ones coefficients give the constant function 1
        assert d(0.37) == pytest.approx(1.0, abs=1e-12)
        g = Grid.uniform(31)
        np.testing.assert_allclose(d.values_on(g), np.ones(31), atol=1e-12)

    def test_dict_round_trip(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        d = Direction(basis, np.array([0.0, 1.0, 0.5, -0.25, 2.0, -1.0]))
        d2 = Direction.from_dict(d.to_dict())
        assert d2.basis == d.basis
        np.testing.assert_array_equal(d2.coeffs, d.coeffs)


class TestEnumeration:
    def test_count_for_three_seeds(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        ds = enumerate_directions(basis, (-1.0, 0.0, 1.0), quad_grid=Grid.uniform(1001))
        assert len(ds) == 243

    def test_unit_norm_against_scipy(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        quad = Grid.uniform(1001)
        ds = enumerate_directions(basis, (-1.0, 0.0, 1.0), quad_grid=quad)
        fine = np.linspace(0.0, 1.0, 5001)
        for d in list(ds)[:: max(1, len(ds) // 17)]:
            # independent evaluation route, same quadrature convention
            vals = oracle_basis_matrix(basis, quad.points) @ d.coeffs
            assert trapezoid(vals * vals, quad.points) == pytest.approx(
                1.0, abs=1e-12
            )
            # finer grid only shifts the norm by the quadrature error
            fvals = oracle_basis_matrix(basis, fine) @ d.coeffs
            assert trapezoid(fvals * fvals, fine) == pytest.approx(1.0, abs=1e-4)

    def test_anchor_positive(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        ds = enumerate_directions(basis, (-1.0, 0.0, 1.0), quad_grid=Grid.uniform(1001))
        for d in ds:
            assert d(0.5) > 0.0

    def test_no_duplicates(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        ds = enumerate_directions(basis, (-1.0, 0.0, 1.0), quad_grid=Grid.uniform(1001))
        coeffs = np.stack([d.coeffs for d in ds])
        for i in range(len(ds)):
            diffs = np.max(np.abs(coeffs - coeffs[i]), axis=1)
            diffs[i] = np.inf
            assert diffs.min() > 1e-10

    def test_deterministic_order(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        g = Grid.uniform(501)
        a = enumerate_directions(basis, (-1.0, 0.0, 1.0), quad_grid=g)
        b = enumerate_directions(basis, (1.0, -1.0, 0.0), quad_grid=g)
        assert a.seed_tuples == b.seed_tuples
        for d1, d2 in zip(a, b):
            np.testing.assert_array_equal(d1.coeffs, d2.coeffs)

    def test_cap_exceeded_message(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        with pytest.raises(EnumerationCapError) as err:
            enumerate_directions(basis, (-1.0, 0.0, 1.0), cap=100)
        msg = str(err.value)
        assert "raise the cap to at least 729" in msg

    def test_two_seed_set(self):
        basis = BSplineBasis(order=2, interior_knots=1, domain=(0.0, 1.0))
        ds = enumerate_directions(basis, (0.0, 1.0), quad_grid=Grid.uniform(501))
        # 2^3 - 1 = 7 nonzero tuples; with linear splines only the middle
        # basis function is nonzero at the anchor t=0.5, so the three
        # tuples with middle coefficient 0 are dropped
        assert len(ds) == 4
        assert all(s[1] == 1.0 for s in ds.seed_tuples)

    def test_quad_grid_domain_checked(self):
        basis = BSplineBasis(order=3, interior_knots=3, domain=(0.0, 1.0))
        with pytest.raises(GridMismatchError):
            enumerate_directions(basis, (0.0, 1.0), quad_grid=Grid.uniform(100, 0.0, 2.0))


class TestProject:
    def test_matches_quadrature_oracle(self):
        basis = BSplineBasis(order=3, interior_knots=3)
        theta = Direction(basis, np.array([0.2, -0.4, 1.0, 0.3, -1.1, 0.6]))
        g = Grid.uniform(301, 0.0, 1.0)
        chi_vals = np.cos(3.0 * g.points) + 0.5 * g.points
        ours = project(theta, Curve(g, chi_vals))
        theta_vals = oracle_basis_matrix(basis, g.points) @ theta.coeffs
        oracle = trapezoid(theta_vals * chi_vals, g.points)
        assert ours == pytest.approx(oracle, abs=1e-12)

    def test_domain_mismatch(self):
        basis = BSplineBasis(order=3, interior_knots=3, domain=(0.0, 1.0))
        theta = Direction(basis, np.ones(6))
        chi = Curve(Grid.uniform(50, 0.0, 2.0), np.ones(50))
        with pytest.raises(GridMismatchError):
            project(theta, chi)
