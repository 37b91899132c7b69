from __future__ import annotations

import math

import numpy as np
import pytest

from nkpoly.errors import DivergentMomentError, DomainError
from nkpoly.exp_series import ExpSeries
from nkpoly.families import ParamSet, fnkp_first, fnkp_second, konhauser_y, konhauser_z
from nkpoly.quadrature import (
    WeightDescriptor,
    fourier_box,
    fourier_plane_integral,
    gamma_moment_integral,
    gauss_laguerre_rule,
    integrate_biorthogonality,
    laplace_termwise,
    plane_integrate,
    tail_cutoff,
)
from nkpoly.scalar_special import complex_gamma_array

W = WeightDescriptor


class TestGammaMoment:
    def test_constant(self):
        assert gamma_moment_integral(ExpSeries.constant(1.0), W.laguerre(0)) == 1.0

    def test_finite_n_norm(self):
        x = ExpSeries({(1, 0): 3.0, (0, 0): -1.0})
        assert gamma_moment_integral(x * x, W.reciprocal(5)) == pytest.approx(3.0, rel=1e-15)

    def test_pair_norm(self):
        f, g = fnkp_first(1, 5, 0, 1), fnkp_second(1, 5, 0, 1)
        assert gamma_moment_integral(f * g, W.product(5, 0)) == pytest.approx(3.0, rel=1e-14)

    def test_divergent(self):
        with pytest.raises(DivergentMomentError):
            gamma_moment_integral(ExpSeries({(4, 0): 1.0}), W.reciprocal(5))

    def test_wrong_variable(self):
        with pytest.raises(DomainError):
            gamma_moment_integral(ExpSeries({(1, 1): 1.0}), W.laguerre(0))

    @pytest.mark.parametrize("d", [0.5, 3.0, 11.25, 20.0])
    def test_reciprocal_substitution(self, d):
        # int t^{-p} e^{-1/t} t^a dt = Gamma(p-a-1); u = 1/t turns it into a Laguerre moment
        p, a = 9.0, 9.0 - d - 1
        exact = gamma_moment_integral(ExpSeries({(a, 0): 1.0}), W.reciprocal(p))
        rule = gauss_laguerre_rule(64, p - a - 2)
        assert rule.integrate(lambda u: np.ones_like(u)) == pytest.approx(exact, rel=1e-10)
        assert exact == pytest.approx(math.gamma(d), rel=1e-13)


class TestGaussLaguerre:
    def test_one_point(self):
        r = gauss_laguerre_rule(1, 0)
        assert r.nodes == pytest.approx((1.0,)) and r.weights == pytest.approx((1.0,))

    def test_two_point(self):
        r = gauss_laguerre_rule(2, 0)
        s2 = math.sqrt(2)
        assert r.nodes == pytest.approx((2 - s2, 2 + s2), rel=1e-14)
        assert r.weights == pytest.approx(((2 + s2) / 4, (2 - s2) / 4), rel=1e-14)

    def test_moment_example(self):
        r = gauss_laguerre_rule(8, 1.5)
        assert r.integrate(lambda w: w**10) == pytest.approx(math.gamma(12.5), rel=1e-11)

    @pytest.mark.parametrize("n", [4, 16, 64])
    @pytest.mark.parametrize("alpha", [0.0, 0.75, -0.5])
    def test_exactness(self, n, alpha):
        r = gauss_laguerre_rule(n, alpha)
        for k in (0, n, 2 * n - 1):
            exact = math.exp(math.lgamma(k + alpha + 1))
            assert r.integrate(lambda w: w**k) == pytest.approx(exact, rel=1e-11)

    @pytest.mark.parametrize("n,alpha", [(0, 0), (257, 0), (4, -1), (4, -2.5)])
    def test_range(self, n, alpha):
        with pytest.raises(ValueError):
            gauss_laguerre_rule(n, alpha)


class TestBiorthogonalityQuadrature:
    def test_constant(self):
        q = 0.75
        assert integrate_biorthogonality(ExpSeries.constant(1), ExpSeries.constant(1), W.laguerre(q), 4) == pytest.approx(
            math.gamma(q + 1), rel=1e-14
        )

    def test_konhauser_case(self):
        z, y = konhauser_z(1, 0, 2), konhauser_y(1, 0, 2)
        assert integrate_biorthogonality(z, y, W.laguerre(0), 16) == pytest.approx(2.0, rel=1e-12)

    def test_pair_off_diagonal(self):
        f, g = fnkp_first(1, 5, 0, 1), fnkp_second(0, 5, 0, 1)
        v = integrate_biorthogonality(f, g, W.product(5, 0))
        assert abs(v - gamma_moment_integral(f * g, W.product(5, 0))) <= 1e-12 * 3

    def test_oracles_agree(self):
        f, g = fnkp_first(3, 12.5, 0.75, 2), fnkp_second(2, 12.5, 0.75, 2)
        exact = gamma_moment_integral(f * g, W.product(12.5, 0.75))
        quad = integrate_biorthogonality(f, g, W.product(12.5, 0.75))
        scale = gamma_moment_integral(fnkp_first(2, 12.5, 0.75, 2) * g, W.product(12.5, 0.75))
        assert abs(exact - quad) <= 1e-8 * abs(scale)


def test_laplace_termwise():
    x = ExpSeries({(2, 0): 1.0, (0, 1): 3.0})
    img = laplace_termwise(x, "t", 2.0)
    assert img.terms[(0, 0)] == pytest.approx(2 / 8, rel=1e-15)
    assert img.terms[(0, 1)] == pytest.approx(3 / 2, rel=1e-15)


class TestPlane:
    P = ParamSet(p1=2, p2=2, q1=1, q2=1, upsilon=1, s=0, n=0)

    @staticmethod
    def weight(x1, x2):
        return (
            complex_gamma_array(2 + 1j * x1)
            * complex_gamma_array(2 - 1j * x1)
            * complex_gamma_array(1 - 1j * x2)
            * complex_gamma_array(1 + 1j * x2)
        )

    def test_gamma_weight_integral(self):
        # Parseval: int |Gamma(2+ix)|^2 dx = 2 pi Gamma(4)/2^4, int |Gamma(1+iy)|^2 dy = 2 pi Gamma(2)/2^2
        v = fourier_plane_integral(self.weight, self.P, 1e-8)
        expected = (2 * math.pi) ** 2 * math.gamma(4) / 2**4 * math.gamma(2) / 2**2
        assert v.real == pytest.approx(expected, rel=1e-6)
        assert abs(v.imag) <= 1e-8 * expected

    def test_odd_imaginary_part(self):
        f = lambda x1, x2: self.weight(x1, x2) * (1 + 1j * x1 * x2)
        v = fourier_plane_integral(f, self.P, 1e-7)
        assert abs(v.imag) <= 1e-7 * abs(v.real)

    def test_stacked_outputs(self):
        f = lambda x1, x2: np.stack([self.weight(x1, x2), 2 * self.weight(x1, x2)])
        res = plane_integrate(f, fourier_box(self.P, 1e-7), 1e-7)
        assert res.values[1] == pytest.approx(2 * res.values[0], rel=1e-12)

    def test_tail_cutoff_grows(self):
        assert tail_cutoff(1, 1e-6) < tail_cutoff(10, 1e-6) < tail_cutoff(10, 1e-12)
