from __future__ import annotations

import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nkpoly.errors import LogarithmicCaseError, ShiftMismatchError, TermCountError
from nkpoly.exp_series import (
    ExpSeries,
    OperatorExp,
    OperatorExpr,
    antidifferentiate,
    as_fraction,
    differentiate,
    evaluate,
    fractional_shift,
    operator_apply,
    series_add,
    series_mul,
    series_residual,
    substitute_reciprocal,
)

# 3t - 3tw - 1: the first set at s=1, p=5, q=0, upsilon=1
N1 = ExpSeries({(1, 0): 3.0, (1, 1): -3.0, (0, 0): -1.0})
T = ExpSeries.monomial(1.0, 1, 0)
ONE = ExpSeries.constant(1.0)

POINTS = [(0.3, 0.2), (1.0, 1.0), (2.0, 0.5), (3.7, 1.9), (0.8, 4.0)]


def same_values(x: ExpSeries, y: ExpSeries, tol=1e-13):
    for t, w in POINTS:
        a, b = evaluate(x, t, w), evaluate(y, t, w)
        assert abs(a - b) <= tol * max(1.0, abs(a), abs(b))


exps = st.fractions(min_value=-3, max_value=3, max_denominator=4)
coeffs = st.floats(-5, 5, allow_nan=False).filter(lambda c: c == 0 or abs(c) > 1e-3)
small_series = st.dictionaries(st.tuples(exps, exps), coeffs, max_size=5).map(ExpSeries)
nonneg_int_series = st.dictionaries(
    st.tuples(st.integers(0, 4), st.integers(0, 4)), coeffs, max_size=5
).map(ExpSeries)


class TestConstruction:
    def test_zero_terms_dropped(self):
        assert len(ExpSeries({(1, 0): 0.0, (0, 0): 2.0})) == 1

    def test_exact_merging(self):
        x = ExpSeries([((F(1, 3), 0), 1.0), ((F(2, 6), 0), 2.0)])
        assert x.terms == {(F(1, 3), F(0)): 3.0}

    def test_as_fraction(self):
        assert as_fraction("3/4") == F(3, 4)
        assert as_fraction(0.75) == F(3, 4)
        assert as_fraction(1 / 3) == F(1, 3)
        with pytest.raises(ValueError):
            as_fraction("x")

    def test_json_round_trip(self):
        x = ExpSeries({(F(1, 2), F(-3, 4)): 1.5, (2, 0): -0.25})
        assert ExpSeries.from_json(x.to_json()) == x


class TestAlgebra:
    def test_add_examples(self):
        assert series_add(N1, T, 1.0, 0.0) == N1
        assert not series_add(T, T, 1.0, -1.0)
        same_values(series_add(N1, ONE), ExpSeries({(1, 0): 3.0, (1, 1): -3.0}))

    def test_mul_examples(self):
        assert series_mul(N1, ONE) == N1
        root = ExpSeries({(0, F(1, 2)): 1.0})
        assert series_mul(root, root).terms == {(F(0), F(1)): 1.0}
        x = ExpSeries({(1, 0): 3.0, (0, 0): -1.0})
        assert series_mul(x, x) == ExpSeries({(2, 0): 9.0, (1, 0): -6.0, (0, 0): 1.0})

    def test_term_cap(self):
        with pytest.raises(TermCountError):
            series_mul(N1, N1, cap=4)

    def test_shift_mismatch(self):
        with pytest.raises(ShiftMismatchError):
            N1 + N1.with_shifts(0.0, 0.5)

    @settings(max_examples=50)
    @given(small_series, small_series, small_series)
    def test_mul_commutative_associative(self, x, y, z):
        assert series_residual(series_mul(x, y), series_mul(y, x)) == 0.0
        lhs, rhs = series_mul(series_mul(x, y), z), series_mul(x, series_mul(y, z))
        assert set(lhs.terms) == set(rhs.terms)
        assert series_residual(lhs, rhs) <= 1e-13

    @settings(max_examples=50)
    @given(small_series, small_series)
    def test_add_evaluates_linearly(self, x, y):
        for t, w in POINTS:
            a = evaluate(series_add(x, y, 1, 1), t, w)
            b = evaluate(x, t, w) + evaluate(y, t, w)
            scale = sum(abs(c) * t ** float(p) * w ** float(q) for s in (x, y) for (p, q), c in s.items())
            assert abs(a - b) <= 1e-13 * max(scale, 1e-300)


class TestCalculus:
    def test_differentiate_examples(self):
        assert not differentiate(ONE, "t")
        x = ExpSeries({(0, F(3, 2)): 1.0})
        assert differentiate(x, "w").terms == {(F(0), F(1, 2)): 1.5}
        d = differentiate(N1, "t")
        assert d == ExpSeries({(0, 0): 3.0, (0, 1): -3.0})
        h = 1e-6
        for t, w in POINTS:
            fd = (evaluate(N1, t + h, w) - evaluate(N1, t - h, w)) / (2 * h)
            assert fd == pytest.approx(evaluate(d, t, w), abs=1e-6)

    def test_antidifferentiate_examples(self):
        assert antidifferentiate(ONE, "w") == ExpSeries({(0, 1): 1.0})
        assert antidifferentiate(ONE, "w", 2) == ExpSeries({(0, 2): 0.5})
        # w * first set at (s, p, q, u) = (1, 5, 1, 1): 3t - (3/2) t w - 1
        expected = ExpSeries({(1, 0): 3.0, (1, 1): -1.5, (0, 0): -1.0}).times_monomial(0, 1)
        assert series_residual(antidifferentiate(N1, "w"), expected) <= 1e-15

    def test_log_case(self):
        with pytest.raises(LogarithmicCaseError):
            antidifferentiate(ExpSeries({(-1, 0): 1.0}), "t")

    @settings(max_examples=50)
    @given(small_series, st.integers(1, 3), st.sampled_from("tw"))
    def test_d_after_integral(self, x, m, var):
        i = 0 if var == "t" else 1
        if any(k[i] < 0 and k[i].denominator == 1 for k in x.terms):
            return
        assert series_residual(differentiate(antidifferentiate(x, var, m), var, m), x) <= 1e-13

    @settings(max_examples=50)
    @given(nonneg_int_series, st.sampled_from("tw"))
    def test_integral_after_d(self, x, var):
        i = 0 if var == "t" else 1
        kept = ExpSeries({k: c for k, c in x.items() if k[i] != 0})
        assert series_residual(antidifferentiate(differentiate(x, var), var), kept) <= 1e-14

    def test_substitute_reciprocal(self):
        assert substitute_reciprocal(ONE, "t") == ONE
        assert substitute_reciprocal(ExpSeries({(2, 0): 1.0}), "t") == ExpSeries({(-2, 0): 1.0})
        n = ExpSeries({(1, 0): 3.0, (0, 0): -1.0})
        same_values(substitute_reciprocal(n, "t").times_monomial(1, 0), ExpSeries({(0, 0): 3.0, (1, 0): -1.0}))


class TestOperators:
    def test_identity(self):
        assert operator_apply(OperatorExpr.identity(), N1) == N1

    def test_one_minus_integral(self):
        op = OperatorExpr.identity() - OperatorExpr.integ("w")
        assert operator_apply(op, ONE) == ExpSeries({(0, 0): 1.0, (0, 1): -1.0})

    def test_right_to_left(self):
        # D_t then multiply by t^-2 differs from multiply first then D_t
        a = OperatorExpr.mul("t", -2) * OperatorExpr.d("t")
        b = OperatorExpr.d("t") * OperatorExpr.mul("t", -2)
        x = ExpSeries({(3, 0): 1.0})
        assert operator_apply(a, x) == ExpSeries({(0, 0): 3.0})
        assert operator_apply(b, x) == ExpSeries({(0, 0): 1.0})

    def test_exponential_truncation(self):
        e = OperatorExp(OperatorExpr.integ("w"))
        # exp(D_w^{-1}) 1 = sum w^n / (n!)^2
        expected = ExpSeries({(0, n): 1.0 / math.factorial(n) ** 2 for n in range(4)})
        assert series_residual(operator_apply(e, ONE, truncation=3), expected) <= 1e-15
        with pytest.raises(ValueError):
            operator_apply(e, ONE)


class TestFractional:
    def test_order_zero(self):
        assert fractional_shift(N1, "w", 0, "integral") == N1

    def test_order_one_is_antiderivative(self):
        assert fractional_shift(ONE, "w", 1, "integral") == ExpSeries({(0, 1): 1.0})

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_integer_order(self, m):
        x = ExpSeries({(0, 2): 1.5, (1, F(1, 2)): -2.0})
        assert series_residual(fractional_shift(x, "w", m, "integral"), antidifferentiate(x, "w", m)) <= 1e-14

    def test_half_integral_numeric(self):
        w = 1.7
        got = evaluate(fractional_shift(ExpSeries({(0, 1): 1.0}), "w", F(1, 2), "integral"), 1.0, w)
        assert got == pytest.approx(math.gamma(2) / math.gamma(2.5) * w**1.5, rel=1e-14)
        num, _ = integrate.quad(lambda xi: xi, 0, w, weight="alg", wvar=(0, -0.5))
        assert got == pytest.approx(num / math.gamma(0.5), rel=1e-8)

    @pytest.mark.parametrize("tau", [F(1, 2), F(3, 2)])
    def test_round_trip(self, tau):
        x = ExpSeries({(1, F(3, 4)): 2.0, (0, F(7, 4)): -1.0})
        back = fractional_shift(fractional_shift(x, "w", tau, "integral"), "w", tau, "derivative")
        assert set(back.terms) == set(x.terms)
        assert series_residual(back, x) <= 1e-14


class TestEvaluate:
    def test_examples(self):
        assert evaluate(ExpSeries(), 2.0, 3.0) == 0.0
        assert evaluate(N1, 2.0, 0.5) == pytest.approx(2.0, rel=1e-15)
        assert evaluate(ExpSeries({(0, F(3, 2)): 1.0}), 1.0, 4.0) == pytest.approx(8.0, rel=1e-15)
