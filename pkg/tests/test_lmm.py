"""Multistep scheme tests.

Coefficient oracles are the classical printed tables (entered as exact
rationals); order behaviour is checked against the moment conditions
restated independently here and against empirical truncation slopes on
a closed-form trajectory.
"""
from fractions import Fraction

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from kanlmm import lmm
from kanlmm.systems import linear_system

# classical tables, newest sample first (offset m = 0..M)
CLASSICAL_BETA = {
    ("ab", 1): [0, 1],
    ("ab", 2): [0, Fraction(3, 2), Fraction(-1, 2)],
    ("ab", 3): [0, Fraction(23, 12), Fraction(-16, 12), Fraction(5, 12)],
    ("ab", 4): [0, Fraction(55, 24), Fraction(-59, 24), Fraction(37, 24), Fraction(-9, 24)],
    ("am", 1): [Fraction(1, 2), Fraction(1, 2)],
    ("am", 2): [Fraction(5, 12), Fraction(8, 12), Fraction(-1, 12)],
    ("am", 3): [Fraction(9, 24), Fraction(19, 24), Fraction(-5, 24), Fraction(1, 24)],
}
CLASSICAL_BDF_ALPHA = {
    1: [1, -1],
    2: [Fraction(3, 2), -2, Fraction(1, 2)],
    3: [Fraction(11, 6), -3, Fraction(3, 2), Fraction(-1, 3)],
    4: [Fraction(25, 12), -4, 3, Fraction(-4, 3), Fraction(1, 4)],
    5: [Fraction(137, 60), -5, 5, Fraction(-10, 3), Fraction(5, 4), Fraction(-1, 5)],
    6: [Fraction(49, 20), -6, Fraction(15, 2), Fraction(-20, 3), Fraction(15, 4),
        Fraction(-6, 5), Fraction(1, 6)],
}

# step lists for truncation-slope fits, keyed by scheme order; small
# orders need small h, high orders need h large enough that the
# truncation term stays above the (1/h)-amplified rounding noise
ORDER_FIT_STEPS = {
    1: [1e-3, 1 / 640, 1 / 400, 1 / 250, 1 / 160, 1e-2],
    2: [1e-3, 1 / 640, 1 / 400, 1 / 250, 1 / 160, 1e-2],
    3: [1 / 320, 1 / 224, 1 / 160, 1 / 112, 1 / 80, 1 / 56],
    4: [1 / 320, 1 / 224, 1 / 160, 1 / 112, 1 / 80, 1 / 56],
    5: [1 / 320, 1 / 224, 1 / 160, 1 / 112, 1 / 80],
    6: [1 / 160, 1 / 112, 1 / 80, 1 / 56],
    7: [1 / 160, 1 / 112, 1 / 80, 1 / 56],
}


@pytest.mark.parametrize("family,steps", sorted(CLASSICAL_BETA))
def test_beta_matches_classical_tables(family, steps):
    sch = lmm.scheme(family, steps)
    expected = [float(b) for b in CLASSICAL_BETA[(family, steps)]]
    npt.assert_array_equal(sch.beta, expected)
    npt.assert_array_equal(sch.alpha, [1.0, -1.0] + [0.0] * (steps - 1))


@pytest.mark.parametrize("steps", sorted(CLASSICAL_BDF_ALPHA))
def test_bdf_matches_classical_tables(steps):
    sch = lmm.scheme("bdf", steps)
    expected = [float(a) for a in CLASSICAL_BDF_ALPHA[steps]]
    npt.assert_array_equal(sch.alpha, expected)
    npt.assert_array_equal(sch.beta, [1.0] + [0.0] * steps)


@pytest.mark.parametrize("family", lmm.FAMILIES)
@pytest.mark.parametrize("steps", range(1, 7))
def test_moment_conditions(family, steps):
    # order p means sum_m alpha_m (-m)^j = j sum_m beta_m (-m)^(j-1)
    # for j = 0..p; restated here with plain floats as the oracle
    sch = lmm.scheme(family, steps)
    ms = -np.arange(steps + 1.0)
    assert sch.alpha.sum() == pytest.approx(0.0, abs=1e-14)
    for j in range(1, sch.order + 1):
        lhs = np.sum(sch.alpha * ms ** j)
        rhs = j * np.sum(sch.beta * ms ** (j - 1))
        assert lhs == pytest.approx(rhs, abs=1e-12), f"j={j}"


@pytest.mark.parametrize("family,steps,order,explicit", [
    ("ab", 1, 1, True),
    ("ab", 6, 6, True),
    ("am", 1, 2, False),
    ("am", 6, 7, False),
    ("bdf", 1, 1, False),
    ("bdf", 6, 6, False),
])
def test_order_and_explicitness(family, steps, order, explicit):
    sch = lmm.scheme(family, steps)
    assert sch.order == order
    assert sch.explicit is explicit


def test_all_schemes_covers_families():
    schemes = lmm.all_schemes()
    assert len(schemes) == 18
    assert {(s.family, s.steps) for s in schemes} == {
        (f, m) for f in lmm.FAMILIES for m in range(1, 7)
    }


def test_scheme_validation():
    with pytest.raises(ValueError):
        lmm.scheme("rk", 1)
    with pytest.raises(ValueError):
        lmm.scheme("ab", 0)
    with pytest.raises(ValueError):
        lmm.scheme("bdf", 7)


def test_beta_support():
    assert lmm.scheme("am", 1).beta_support == (0, 1)
    assert lmm.scheme("ab", 2).beta_support == (1, 2)
    assert lmm.scheme("bdf", 3).beta_support == (0, 0)


class TestResidual:
    def test_zero_for_exact_linear_motion(self):
        # constant field, affine trajectory: every consistent scheme is exact
        sch = lmm.scheme("am", 1)
        ts = 0.1 * np.arange(9)
        states = np.column_stack([2.0 + 3.0 * ts, 1.0 - 0.5 * ts])
        r = lmm.residual(sch, ts, states, lambda s: np.array([3.0, -0.5]))
        npt.assert_allclose(r, 0.0, atol=1e-12)
        assert r.shape == (8, 2)

    def test_truncation_scale_on_smooth_trajectory(self):
        sysd = linear_system()
        h = 1e-3
        ts = h * np.arange(101)
        r = lmm.residual(lmm.scheme("am", 1), ts, sysd.solution(ts), sysd.field)
        # trapezoid truncation is h^2 |x'''| / 12 plus rounding
        bound = h ** 2 * np.max(np.abs(64.0 * np.exp(4 * ts))) / 12 + 1e-9
        assert 0 < np.max(np.abs(r)) < bound

    def test_requires_equidistant_times(self):
        sch = lmm.scheme("ab", 1)
        states = np.zeros((4, 1))
        with pytest.raises(ValueError):
            lmm.residual(sch, np.array([0.0, 0.1, 0.3, 0.4]), states, lambda s: s)

    def test_requires_enough_points(self):
        sch = lmm.scheme("ab", 3)
        ts = np.array([0.0, 0.1, 0.2])
        with pytest.raises(ValueError):
            lmm.residual(sch, ts, np.zeros((3, 1)), lambda s: s)


@pytest.mark.parametrize("family", lmm.FAMILIES)
@pytest.mark.parametrize("steps", range(1, 7))
def test_empirical_order_all_schemes(family, steps):
    sysd = linear_system()
    sch = lmm.scheme(family, steps)
    slope = lmm.empirical_order(sch, sysd.field, sysd.solution, ORDER_FIT_STEPS[sch.order])
    assert abs(slope - sch.order) <= 0.3, f"{family}-{steps}: slope {slope}"


def test_empirical_order_rejects_saturated_data():
    # a fixed point makes every residual vanish to rounding level
    sch = lmm.scheme("ab", 1)

    def solution(ts):
        return np.ones((len(np.atleast_1d(ts)), 1))

    with pytest.raises(lmm.DegenerateFitError):
        lmm.empirical_order(sch, lambda s: np.zeros(1), solution, [0.1, 0.05, 0.025])


def test_empirical_order_needs_three_steps():
    sysd = linear_system()
    with pytest.raises(ValueError):
        lmm.empirical_order(lmm.scheme("ab", 1), sysd.field, sysd.solution, [0.1, 0.05])


class TestIndexWindow:
    def test_am1_short_trajectory(self):
        w = lmm.index_window(lmm.scheme("am", 1), n1=4)
        assert (w.r, w.q, w.tau, w.aux_count) == (0, 4, 5, 1)
        # the offset-blind count drops the r = 0 unknown and is one short
        assert w.aux_count_ignoring_offset == 0

    def test_ab2_window(self):
        w = lmm.index_window(lmm.scheme("ab", 2), n1=10)
        assert (w.r, w.q, w.tau, w.aux_count) == (0, 9, 10, 1)

    def test_bdf_window_needs_no_aux_rows(self):
        w = lmm.index_window(lmm.scheme("bdf", 2), n1=10)
        assert (w.r, w.q, w.tau, w.aux_count) == (2, 10, 9, 0)

    def test_rejects_short_trajectories(self):
        with pytest.raises(ValueError):
            lmm.index_window(lmm.scheme("am", 3), n1=2)

    @settings(max_examples=80, deadline=None)
    @given(
        family=st.sampled_from(lmm.FAMILIES),
        steps=st.integers(min_value=1, max_value=6),
        extra=st.integers(min_value=0, max_value=200),
    )
    def test_window_accounting(self, family, steps, extra):
        sch = lmm.scheme(family, steps)
        n1 = steps + extra
        w = lmm.index_window(sch, n1)
        m_min, m_max = sch.beta_support
        # the window always covers the multistep rows plus bandwidth-1 aux rows
        assert w.tau == (n1 - steps + 1) + w.aux_count
        assert w.aux_count == m_max - m_min
        assert w.r == steps - m_max
        assert w.q == n1 - m_min
        assert 0 <= w.r <= w.q <= n1
        assert w.aux_count_ignoring_offset == w.aux_count + w.r - 1


class TestFdmCoefficients:
    def test_classical_values(self):
        npt.assert_array_equal(lmm.fdm_coefficients(1), [-1.0, 1.0])
        npt.assert_array_equal(lmm.fdm_coefficients(2), [-1.5, 2.0, -0.5])
        expected3 = [float(Fraction(-11, 6)), 3.0, -1.5, float(Fraction(1, 3))]
        npt.assert_array_equal(lmm.fdm_coefficients(3), expected3)

    @pytest.mark.parametrize("order", range(1, 8))
    def test_exact_on_polynomials(self, order):
        # (1/h) sum mu_m u(t + m h) reproduces u'(t) for deg <= order
        mu = lmm.fdm_coefficients(order)
        rng = np.random.default_rng(order)
        coeffs = rng.uniform(-1.0, 1.0, order + 1)
        h, t = 0.1, 0.3
        nodes = t + h * np.arange(order + 1)
        poly = np.polynomial.Polynomial(coeffs)
        approx = mu @ poly(nodes) / h
        assert approx == pytest.approx(poly.deriv()(t), rel=1e-9, abs=1e-11)

    def test_rejects_unsupported_order(self):
        with pytest.raises(ValueError):
            lmm.fdm_coefficients(0)
        with pytest.raises(ValueError):
            lmm.fdm_coefficients(8)


class TestRootCondition:
    def test_ab2_root_is_one_third(self):
        report = lmm.root_condition(lmm.scheme("ab", 2))
        assert report.satisfied and not report.boundary
        assert len(report.roots) == 1
        assert abs(report.roots[0] - 1.0 / 3.0) <= 1e-10

    def test_am1_boundary_root(self):
        report = lmm.root_condition(lmm.scheme("am", 1))
        assert not report.satisfied
        assert report.boundary
        assert abs(report.roots[0] + 1.0) <= 1e-12
        assert report.max_modulus == pytest.approx(1.0, abs=1e-12)

    def test_bdf_vacuous(self):
        for steps in range(1, 7):
            report = lmm.root_condition(lmm.scheme("bdf", steps))
            assert report.satisfied and not report.boundary
            assert report.roots.size == 0 and report.max_modulus == 0.0

    def test_am2_violates_strict_condition(self):
        # roots of 5 z^2 + 8 z - 1: (-4 +- sqrt(21)) / 5, one outside the disk
        report = lmm.root_condition(lmm.scheme("am", 2))
        assert not report.satisfied and not report.boundary
        assert report.max_modulus == pytest.approx((4.0 + np.sqrt(21.0)) / 5.0, rel=1e-12)
