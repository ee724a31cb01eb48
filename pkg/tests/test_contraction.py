import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ordfix import GridFunction, SignalFeedbackOperator
from ordfix.contraction import (
    IncomparablePairError,
    Modulus,
    ModulusError,
    a_posteriori_bound,
    a_priori_bound,
    check_condition_H,
    check_squared_contraction,
    comparable_pairs,
    contraction_rate,
    eval_modulus,
    violation_ratio,
)
from ordfix.lattice import ConeSpec, leq
from ordfix.solver import square

SHIPPED = [Modulus.constant(0.15), Modulus.constant(0.9), Modulus.logarithmic(), Modulus.user(lambda t: t / (1 + t))]


class TestModulus:
    def test_constant_value(self):
        assert eval_modulus(Modulus.constant(3 / 20), 7.3) == 0.15

    def test_logarithmic_at_one(self):
        assert eval_modulus(Modulus.logarithmic(), 1.0) == pytest.approx(math.log(2), abs=1e-15)
        assert eval_modulus(Modulus.logarithmic(), 1.0) == pytest.approx(0.693147, abs=1e-6)

    def test_logarithmic_increasing_samples(self):
        ts = [0.1, 0.5, 1.0, 10.0]
        vals = [eval_modulus(Modulus.logarithmic(), t) for t in ts]
        # direct evaluation of t*ln(1+1/t) as the oracle
        assert vals == pytest.approx([t * math.log(1 + 1 / t) for t in ts], rel=1e-14)
        assert all(a < b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("t", [0.0, -1.0])
    def test_undefined_at_nonpositive(self, t):
        with pytest.raises(ModulusError):
            eval_modulus(Modulus.logarithmic(), t)

    @pytest.mark.parametrize("c", [0.0, 1.0, -0.2, 1.5])
    def test_constant_range(self, c):
        with pytest.raises(ModulusError):
            Modulus.constant(c)

    def test_user_out_of_range_rejected(self):
        with pytest.raises(ModulusError, match="leaves"):
            Modulus.user(lambda t: t)

    def test_user_decreasing_rejected(self):
        with pytest.raises(ModulusError, match="decreases"):
            Modulus.user(lambda t: 1 / (2 + t))

    @pytest.mark.parametrize("f", SHIPPED, ids=["c0.15", "c0.9", "log", "user"])
    def test_range_and_monotone_on_log_grid(self, f):
        t = np.logspace(-9, 9, 10_000)
        vals = eval_modulus(f, t)
        assert np.all(vals > 0.0) and np.all(vals < 1.0)
        assert np.all(np.diff(vals) >= 0.0)


class TestConditionH:
    def test_constant_map_passes(self):
        w0 = GridFunction.constant(0.3, 50)
        report = check_condition_H(lambda u: w0, Modulus.constant(0.01), comparable_pairs(50, 30, seed=1))
        assert report.passed and report.pairs_tested == 30
        assert report.witness is None

    def test_signal_operator_passes(self):
        A = SignalFeedbackOperator(n=200)
        report = check_condition_H(A, Modulus.constant(3 / 20), comparable_pairs(200, 200, seed=7))
        assert report.pairs_passed == report.pairs_tested == 200
        assert report.worst_ratio <= 1.0

    def test_increasing_maps_pass_trivially(self):
        # u <= v gives A(u) - A(v) <= 0 <= f (v - u) for any increasing A
        report = check_condition_H(lambda u: 2.0 * u, Modulus.constant(0.5), comparable_pairs(30, 20, seed=3))
        assert report.passed

    def test_steep_decreasing_map_fails_with_witness(self):
        pairs = list(comparable_pairs(30, 20, seed=3))
        report = check_condition_H(lambda u: -2.0 * u, Modulus.constant(0.5), pairs)
        assert report.pairs_passed == 0
        w = report.witness
        # brute-force recheck of the witness node
        u, v, i = w["u"].values, w["v"].values, w["node"]
        lhs = -2 * u[i] + 2 * v[i]
        assert lhs == pytest.approx(w["lhs"])
        assert lhs > 0.5 * (v[i] - u[i]) + 1e-12
        assert report.worst_ratio == pytest.approx(4.0, rel=1e-6)

    def test_incomparable_pair_is_an_error(self):
        u = GridFunction([0.0, 1.0])
        v = GridFunction([1.0, 0.0])
        with pytest.raises(IncomparablePairError):
            check_condition_H(lambda x: x, Modulus.constant(0.5), [(u, v)])

    def test_report_ratio_iff_passed(self):
        for A in (lambda u: -0.1 * u, lambda u: -0.9 * u):
            report = check_condition_H(A, Modulus.constant(0.5), comparable_pairs(10, 15, seed=4))
            assert (report.worst_ratio <= 1.0) == report.passed
            assert report.pairs_passed <= report.pairs_tested

    def test_sampler_pairs_are_ordered_and_bounded(self):
        for u, v in comparable_pairs(40, 50, seed=11):
            assert leq(u, v)
            assert u.values.min() >= 0.0 and v.values.max() <= 1.0


def test_violation_ratio_edges():
    r = violation_ratio(np.array([0.0, 1.0, -1.0, 2.0]), np.array([0.0, 0.0, 0.0, 1.0]), 0.0)
    assert r[0] == 0.0 and r[1] == np.inf and r[2] == 0.0 and r[3] == 2.0


class TestRate:
    def test_constant_paper_value(self):
        assert contraction_rate(Modulus.constant(3 / 20), ConeSpec(), 0.37) == pytest.approx(0.0225, rel=1e-15)

    @pytest.mark.parametrize("c", [0.1, 0.5, 0.9])
    def test_constant_collapses_to_square(self, c):
        assert contraction_rate(Modulus.constant(c), ConeSpec(), 2.0) == pytest.approx(c * c, rel=1e-15)

    def test_logarithmic_against_mpmath(self):
        mpmath.mp.dps = 50

        def f(t):
            return t * mpmath.log(1 + 1 / t)

        expected = f(f(mpmath.mpf(1)) * 1) * f(mpmath.mpf(1))
        got = contraction_rate(Modulus.logarithmic(), ConeSpec(), 1.0)
        assert got == pytest.approx(float(expected), rel=1e-14)

    def test_uses_normal_and_equivalence_constants(self):
        f = Modulus.logarithmic()
        spec = ConeSpec(normal_constant=2.0, upper_equiv=3.0, lower_equiv=1.0, norm1_scale=0.5)
        d0 = 0.4
        inner = f(3.0 * d0)
        assert contraction_rate(f, spec, d0) == pytest.approx(f(2.0 * inner * 3.0 * d0) * inner, rel=1e-15)

    @pytest.mark.parametrize("d0", [0.0, -1.0])
    def test_nonpositive_gap(self, d0):
        with pytest.raises(ValueError):
            contraction_rate(Modulus.constant(0.5), ConeSpec(), d0)

    @settings(max_examples=300, deadline=None)
    @given(
        st.sampled_from(SHIPPED),
        st.floats(1e-8, 1e8),
        st.floats(1.0, 10.0),
        st.floats(1.0, 10.0),
    )
    def test_rate_in_unit_interval(self, f, d0, N, M):
        spec = ConeSpec(normal_constant=N, upper_equiv=M, lower_equiv=min(1.0, 1.0 / M), norm1_scale=1.0)
        lam = contraction_rate(f, spec, d0)
        assert 0.0 < lam < 1.0


class TestBounds:
    def test_a_priori_values(self):
        assert a_priori_bound(0.0225, 1.0, 0) == pytest.approx(1.0230179028132993, rel=1e-15)
        assert a_priori_bound(0.3, 0.0, 5) == 0.0
        assert a_priori_bound(0.5, 2.0, 3) == pytest.approx(0.5, rel=1e-15)

    def test_a_posteriori_values(self):
        assert a_posteriori_bound(0.0225, 1e-6) == pytest.approx(2.3017902813299e-8, rel=1e-12)
        assert a_posteriori_bound(0.4, 0.0) == 0.0
        assert a_posteriori_bound(0.5, 0.1) == pytest.approx(0.1, rel=1e-15)

    @pytest.mark.parametrize("lam", [0.0, 1.0, -0.1, 1.5])
    def test_rate_outside_unit_interval(self, lam):
        with pytest.raises(ValueError):
            a_priori_bound(lam, 1.0, 1)
        with pytest.raises(ValueError):
            a_posteriori_bound(lam, 1.0)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(1e-6, 0.999), st.floats(0.0, 1e6), st.integers(0, 200))
    def test_bound_chain(self, lam, d0, k):
        nxt = a_priori_bound(lam, d0, k + 1)
        assert nxt == pytest.approx(lam * a_priori_bound(lam, d0, k), rel=1e-13, abs=1e-300)
        assert nxt <= a_priori_bound(lam, d0, k)


def test_squared_operator_contraction_signal():
    A = SignalFeedbackOperator(n=200)
    report = check_squared_contraction(square(A), Modulus.constant(0.15), comparable_pairs(200, 50, seed=5))
    assert report.passed


def test_squared_operator_contraction_detects_expansion():
    report = check_squared_contraction(lambda u: 4.0 * u, Modulus.constant(0.5), comparable_pairs(20, 10, seed=5))
    assert not report.passed
    assert report.witness["lhs"] > report.witness["rhs"]
