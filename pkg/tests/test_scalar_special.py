from __future__ import annotations

import cmath
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nkpoly.errors import PoleError
from nkpoly.scalar_special import (
    DoubleSeriesSpec,
    complex_gamma,
    delta_array,
    gamma_ratio,
    hyp_pfq_terminating,
    kdf_eval,
    log_gamma_signed,
    ml_bivariate,
    ml_prabhakar,
    pochhammer,
    s_series,
)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


class TestLogGamma:
    def test_one(self):
        v = log_gamma_signed(1)
        assert v.log_abs == 0.0 and v.sign == 1

    def test_four(self):
        v = log_gamma_signed(4)
        assert v.log_abs == pytest.approx(math.log(6), rel=1e-15) and v.sign == 1

    def test_negative_half(self):
        v = log_gamma_signed(-0.5)
        assert v.sign == -1
        assert v.log_abs == pytest.approx(math.log(2 * math.sqrt(math.pi)), rel=1e-14)

    @pytest.mark.parametrize("x", [0, -1, -7, 0.0, -3.0])
    def test_poles(self, x):
        with pytest.raises(PoleError):
            log_gamma_signed(x)

    @pytest.mark.parametrize("x", [0.3, 2.5, 17.25, 49.9, -2.5, -11.75])
    def test_against_mpmath(self, x):
        v = log_gamma_signed(x)
        ref = mpmath.gamma(x)
        assert v.sign == (1 if ref > 0 else -1)
        assert v.value() == pytest.approx(float(ref), rel=1e-13)


class TestPochhammer:
    def test_examples(self):
        assert pochhammer(-1, 1) == -1
        assert pochhammer(-2, 3) == 0
        assert pochhammer(0.5, 3) == pytest.approx(1.875, rel=1e-15)
        assert pochhammer(7.3, 0) == 1

    def test_exact_for_rationals(self):
        assert pochhammer(Fraction(1, 2), 3) == Fraction(15, 8)

    def test_complex(self):
        z = 0.5 + 2j
        assert pochhammer(z, 2) == pytest.approx(z * (z + 1), rel=1e-15)

    # values within the integer-snapping band of 0, -1, ... are exact poles by design
    @given(
        st.floats(-20, 20, allow_nan=False).filter(lambda a: a > 0.5 or abs(a - round(a)) > 1e-9),
        st.integers(0, 12),
    )
    def test_step(self, a, n):
        lhs = pochhammer(a, n) * (a + n)
        rhs = pochhammer(a, n + 1)
        assert abs(lhs - rhs) <= 1e-13 * max(abs(rhs), abs(lhs), 1e-300)


class TestGammaRatio:
    def test_examples(self):
        assert gamma_ratio(3.7, 3.7) == pytest.approx(1.0, rel=1e-15)
        assert gamma_ratio(4, 2) == pytest.approx(6.0, rel=1e-14)
        assert gamma_ratio(5.5, 2.5) == pytest.approx(2.5 * 3.5 * 4.5, rel=1e-13)

    @given(st.floats(0.1, 40))
    def test_shift(self, a):
        assert rel(gamma_ratio(a + 1, a), a) <= 1e-13

    def test_large_arguments(self):
        assert gamma_ratio(-49.5, -47.5) == pytest.approx(float(mpmath.gamma(-49.5) / mpmath.gamma(-47.5)), rel=1e-12)


class TestComplexGamma:
    def test_examples(self):
        assert complex_gamma(1 + 0j) == pytest.approx(1.0, rel=1e-14)
        assert complex_gamma(0.5 + 0j) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
        z = 1 + 3j
        assert rel(complex_gamma(z + 1), z * complex_gamma(z)) <= 1e-12

    def test_conjugate_symmetry(self):
        z = 2.3 - 7.1j
        assert complex_gamma(z.conjugate()) == pytest.approx(complex_gamma(z).conjugate(), rel=1e-14)

    def test_recurrence_grid(self):
        for re in (0.5, 1.7, 4.0, 10.0):
            for im in (-20.0, -9.5, -1.0, 0.0, 3.3, 12.0, 20.0):
                z = complex(re, im)
                g1 = complex_gamma(z + 1)
                assert abs(g1 - z * complex_gamma(z)) / abs(g1) <= 1e-11

    @pytest.mark.parametrize("z", [3 + 39j, 29.5 - 12j, 0.25 + 0.5j, -2.5 + 1j])
    def test_against_mpmath(self, z):
        assert rel(complex_gamma(z), complex(mpmath.gamma(z))) <= 1e-12

    def test_pole(self):
        with pytest.raises(PoleError):
            complex_gamma(-3 + 0j)


class TestHypergeometric:
    def test_examples(self):
        assert hyp_pfq_terminating([0], [2.5], 3.0) == 1
        assert hyp_pfq_terminating([-1], [3], 0.6) == pytest.approx(1 - 0.6 / 3, rel=1e-15)
        assert hyp_pfq_terminating([-1, 2.5], [4], 2) == pytest.approx(-0.25, rel=1e-15)

    @pytest.mark.parametrize("s", [0, 1, 3, 6])
    def test_terminating_brute_force(self, s):
        z, b = -1.7, 2.25
        brute = math.fsum(pochhammer(-s, k) / pochhammer(b, k) * z**k / math.factorial(k) for k in range(s + 1))
        assert rel(hyp_pfq_terminating([-s], [b], z), brute) <= 1e-14

    def test_nonterminating_exp(self):
        assert hyp_pfq_terminating([], [], 0.7) == pytest.approx(math.exp(0.7), rel=1e-14)

    def test_bottom_pole(self):
        with pytest.raises(PoleError):
            hyp_pfq_terminating([-3], [-1], 1.0)

    def test_complex_argument(self):
        z = 0.3 + 0.4j
        assert hyp_pfq_terminating([], [], z) == pytest.approx(cmath.exp(z), rel=1e-14)


def test_delta_array():
    assert delta_array(3, 2) == pytest.approx((2 / 3, 1.0, 4 / 3))
    assert delta_array(1, 0.5) == pytest.approx((0.5,))


class TestDoubleSeries:
    def test_empty(self):
        assert kdf_eval(DoubleSeriesSpec(), 0.0, 0.0) == 1
        assert s_series(DoubleSeriesSpec(), 0.0, 0.0) == 1

    def test_kdf_terminates_at_zero(self):
        spec = DoubleSeriesSpec.kampe_de_feriet(joint_top=[0], first_bottom=[2.0], second_bottom=[1.5])
        assert kdf_eval(spec, 3.0, -2.0) == 1

    def test_s_series_leading_term(self):
        p, q = 3.5, 0.75
        spec = DoubleSeriesSpec(joint_top=((1, 1, 1),), first_bottom=((p, 1),), second_bottom=((q + 1, 1),))
        assert s_series(spec, 0.0, 0.0) == pytest.approx(1 / (math.gamma(p) * math.gamma(q + 1)), rel=1e-14)

    def test_kdf_product_reduction(self):
        # no joint groups: the double series factorizes into two 1F1's
        spec = DoubleSeriesSpec.kampe_de_feriet(first_top=[-2], first_bottom=[1.5], second_top=[-3], second_bottom=[2.5])
        lhs = kdf_eval(spec, 0.4, -1.1)
        rhs = hyp_pfq_terminating([-2], [1.5], 0.4) * hyp_pfq_terminating([-3], [2.5], -1.1)
        assert rel(lhs, rhs) <= 1e-14


class TestMittagLeffler:
    def test_trivial(self):
        assert ml_bivariate(0, None, 2.5, 1.5, 2, 0.7, 0.4) == pytest.approx(1 / (math.gamma(2.5) * math.gamma(1.5)))

    def test_fnkp_relation(self):
        s, p, q, t, w = 1, 5, 0, 2.0, 0.5
        v = t**s * math.gamma(p - s) * ml_bivariate(-s, None, p - 2 * s, q + 1, 1, 1 / t, w)
        assert v == pytest.approx(2.0, rel=1e-14)

    def test_jacobi_konhauser_expansion(self):
        p, q, t, w = 1.5, 2.0, 0.8, 1.3
        terms = {(0, 0): 1.0, (1, 0): -1.0, (0, 1): -1.0}
        brute = math.fsum(
            c * (1 if j == 0 else 1.0) * t**m * w**j / (math.gamma(p + m) * math.gamma(q + j))
            for (m, j), c in terms.items()
        )
        assert rel(ml_bivariate(-1, 1, p, q, 1, t, w), brute) <= 1e-14

    def test_w_zero_independent_of_upsilon(self):
        vals = [ml_bivariate(-3, None, 2.0, 1.25, u, 0.6, 0.0) * math.gamma(1.25) for u in (1, 2, 3)]
        assert max(vals) - min(vals) <= 1e-15 * abs(vals[0])

    def test_prabhakar(self):
        assert ml_prabhakar(1.3, 2.5, 0, 0.9) == pytest.approx(1 / math.gamma(2.5), rel=1e-15)
        assert ml_prabhakar(1, 1, 1, 0.3) == pytest.approx(math.exp(0.3), rel=1e-14)
        t = 2.0
        assert math.gamma(4) * t * ml_prabhakar(1, 3, -1, 1 / t) == pytest.approx(5.0, rel=1e-14)
