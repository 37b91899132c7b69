"""Scalar special-function kernels.

Gamma machinery in signed-log form, Pochhammer symbols, terminating and
truncated hypergeometric series, two double hypergeometric series
(Kampe de Feriet in Pochhammer form and a Gamma-form S-series), and the
Mittag-Leffler type functions that the polynomial families reduce to.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ConvergenceWarning, PoleError

Real = Union[float, int, Fraction]
Scalar = Union[float, complex]

_INT_TOL = 1e-12


def is_nonpositive_integer(x: Real | complex, tol: float = _INT_TOL) -> bool:
    if isinstance(x, complex):
        if abs(x.imag) > tol:
            return False
        x = x.real
    if isinstance(x, (int, Fraction)):
        return x <= 0 and Fraction(x).denominator == 1
    r = round(x)
    return r <= 0 and abs(x - r) <= tol


@dataclass(frozen=True)
class SignedLog:
    """A real number stored as sign * exp(log_abs)."""

    log_abs: float
    sign: int

    @classmethod
    def from_value(cls, x: float) -> "SignedLog":
        if x == 0:
            return cls(-math.inf, 0)
        return cls(math.log(abs(x)), 1 if x > 0 else -1)

    def __mul__(self, other: "SignedLog") -> "SignedLog":
        if self.sign == 0 or other.sign == 0:
            return ZERO_LOG
        return SignedLog(self.log_abs + other.log_abs, self.sign * other.sign)

    def __truediv__(self, other: "SignedLog") -> "SignedLog":
        if other.sign == 0:
            raise ZeroDivisionError("division by a SignedLog zero")
        if self.sign == 0:
            return ZERO_LOG
        return SignedLog(self.log_abs - other.log_abs, self.sign * other.sign)

    def reciprocal(self) -> "SignedLog":
        return ONE_LOG / self

    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)


ZERO_LOG = SignedLog(-math.inf, 0)
ONE_LOG = SignedLog(0.0, 1)


def log_gamma_signed(x: Real) -> SignedLog:
    """log|Gamma(x)| and the sign of Gamma(x) for real x."""
    if is_nonpositive_integer(x):
        raise PoleError(f"Gamma has a pole at {x}")
    xf = float(x)
    sign = 1
    if xf < 0 and math.floor(xf) % 2 == 1:
        sign = -1
    return SignedLog(math.lgamma(xf), sign)


def rgamma(x: Real) -> float:
    """1/Gamma(x), equal to 0 at the poles of Gamma."""
    if is_nonpositive_integer(x):
        return 0.0
    xf = float(x)
    if 0 < xf < 170:
        return 1.0 / math.gamma(xf)
    return log_gamma_signed(x).reciprocal().value()


def gamma(x: Real) -> float:
    xf = float(x)
    if is_nonpositive_integer(x):
        raise PoleError(f"Gamma has a pole at {x}")
    if abs(xf) < 170:
        return math.gamma(xf)
    return log_gamma_signed(x).value()


def pochhammer(a: Real | complex, n: int) -> Real | complex:
    """Rising factorial (a)_n.

    Exact for ``Fraction`` or ``int`` input; returns an exact 0 when ``a`` is a
    non-positive integer with |a| < n.
    """
    if n < 0:
        raise ValueError("pochhammer order must be non-negative")
    if n == 0:
        return 1 if isinstance(a, (int, Fraction)) else 1.0
    if is_nonpositive_integer(a) and -round(_real(a)) < n:
        return 0 if isinstance(a, (int, Fraction)) else 0.0
    if isinstance(a, (int, Fraction)):
        out: Real = Fraction(1)
        for i in range(n):
            out *= a + i
        return out if isinstance(a, Fraction) or out.denominator != 1 else int(out)
    out_f: float | complex = 1.0
    for i in range(n):
        out_f *= a + i
    return out_f


def _real(a: Real | complex) -> float:
    return a.real if isinstance(a, complex) else float(a)


def gamma_ratio(a: Real, b: Real) -> float:
    """Gamma(a)/Gamma(b) without intermediate overflow."""
    if is_nonpositive_integer(a):
        raise PoleError(f"Gamma has a pole at {a}")
    if is_nonpositive_integer(b):
        raise PoleError(f"Gamma has a pole at {b}")
    d = Fraction(a) - Fraction(b) if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)) else None
    if d is None:
        df = float(a) - float(b)
        if abs(df - round(df)) <= _INT_TOL and abs(df) <= 64:
            d = Fraction(round(df))
    if d is not None and d.denominator == 1 and abs(d) <= 64:
        k = int(d)
        if k >= 0:
            return float(pochhammer(b if isinstance(b, (int, Fraction)) else float(b), k))
        return 1.0 / float(pochhammer(a if isinstance(a, (int, Fraction)) else float(a), -k))
    return (log_gamma_signed(a) / log_gamma_signed(b)).value()


def delta_array(upsilon: int, sigma: Real) -> tuple:
    """Delta(upsilon; sigma) = (sigma/upsilon, (sigma+1)/upsilon, ...)."""
    if upsilon < 1:
        raise ValueError("upsilon must be a positive integer")
    if isinstance(sigma, (int, Fraction)):
        return tuple(Fraction(sigma + j, upsilon) for j in range(upsilon))
    return tuple((sigma + j) / upsilon for j in range(upsilon))


# Lanczos approximation, g = 7, n = 9 (the widely published coefficient set).
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _complex_log_gamma_right(z: complex) -> complex:
    z = z - 1
    x = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        x += _LANCZOS[i] / (z + i)
    tt = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(tt) - tt + cmath.log(x)


def complex_log_gamma(z: complex) -> complex:
    """A branch of log Gamma(z); exp of it is Gamma(z)."""
    z = complex(z)
    if z.imag == 0 and is_nonpositive_integer(z.real):
        raise PoleError(f"Gamma has a pole at {z}")
    if z.real < 0.5:
        return cmath.log(math.pi) - cmath.log(cmath.sin(math.pi * z)) - _complex_log_gamma_right(1 - z)
    return _complex_log_gamma_right(z)


def complex_gamma(z: complex) -> complex:
    """Gamma(z) for complex z via Lanczos plus reflection."""
    z = complex(z)
    if z.imag == 0:
        return complex(gamma(z.real))
    return cmath.exp(complex_log_gamma(z))


def complex_log_gamma_array(z: np.ndarray) -> np.ndarray:
    """Vectorised complex_log_gamma; requires Re z >= 0.5 after reflection."""
    z = np.asarray(z, dtype=complex)
    left = z.real < 0.5
    w = np.where(left, 1 - z, z) - 1
    x = np.full(w.shape, _LANCZOS[0], dtype=complex)
    for i in range(1, len(_LANCZOS)):
        x = x + _LANCZOS[i] / (w + i)
    tt = w + _LANCZOS_G + 0.5
    lg = _HALF_LOG_2PI + (w + 0.5) * np.log(tt) - tt + np.log(x)
    if np.any(left):
        refl = np.log(np.pi) - np.log(np.sin(np.pi * z)) - lg
        lg = np.where(left, refl, lg)
    return lg


def complex_gamma_array(z: np.ndarray) -> np.ndarray:
    return np.exp(complex_log_gamma_array(z))


# ---------------------------------------------------------------------------
# single-variable hypergeometric series


def pfq_coefficients(top: Sequence, bottom: Sequence, order: int) -> list:
    """Taylor coefficients prod(top)_k / (prod(bottom)_k k!) for k <= order.

    Exact when every parameter is an ``int`` or ``Fraction``.
    """
    exact = all(isinstance(v, (int, Fraction)) for v in (*top, *bottom))
    one = Fraction(1) if exact else 1.0
    coeffs = [one]
    c = one
    for k in range(order):
        num = one
        for a in top:
            num *= a + k
        den = one * (k + 1)
        for b in bottom:
            den *= b + k
        if num == 0:
            coeffs.extend([0 * one] * (order - k))
            break
        if den == 0:
            raise PoleError(f"bottom parameter pole at order {k + 1}")
        c = c * num / den
        coeffs.append(c)
    return coeffs


def _fsum_scalar(values: Iterable[Scalar]) -> Scalar:
    values = list(values)
    if any(isinstance(v, complex) for v in values):
        return complex(math.fsum(v.real for v in values), math.fsum(complex(v).imag for v in values))
    return math.fsum(values)


def _termination_order(top: Sequence) -> int | None:
    orders = [-round(_real(a)) for a in top if is_nonpositive_integer(a)]
    return min(orders) if orders else None


def hyp_pfq_terminating(top: Sequence, bottom: Sequence, z: Scalar, max_terms: int = 500) -> Scalar:
    """Generalized hypergeometric series pFq(top; bottom; z).

    Terminates exactly when a top parameter is a non-positive integer; otherwise
    sums until three consecutive terms fall below 1e-16 of the partial sum.
    """
    n_stop = _termination_order(top)
    terms: list[Scalar] = []
    term: Scalar = 1.0
    small = 0
    k = 0
    limit = n_stop if n_stop is not None else max_terms
    while True:
        terms.append(term)
        if k >= limit:
            break
        num: Scalar = 1.0
        for a in top:
            num *= a + k
        den: Scalar = float(k + 1)
        for b in bottom:
            den *= b + k
        if num == 0:
            break
        if den == 0:
            raise PoleError(f"bottom parameter pole at order {k + 1}")
        term = term * num / den * z
        k += 1
        if n_stop is None:
            partial = abs(_fsum_scalar(terms))
            if abs(term) < 1e-16 * partial:
                small += 1
                if small >= 3:
                    terms.append(term)
                    return _fsum_scalar(terms)
            else:
                small = 0
    if n_stop is None:
        warnings.warn(f"pFq series not converged after {max_terms} terms", ConvergenceWarning, stacklevel=2)
    return _fsum_scalar(terms)


# ---------------------------------------------------------------------------
# double series


@dataclass(frozen=True)
class DoubleSeriesSpec:
    """Parameter groups of a double hypergeometric series in (z1, z2).

    Joint groups hold ``(param, step1, step2)``; per-variable groups hold
    ``(param, step)``.  ``kdf_eval`` reads every group as Pochhammer symbols
    (param)_{...}, ``s_series`` as Gamma functions Gamma(param + ...).
    Orders ``(order1, order2)`` truncate the sums; they are raised to the
    termination order automatically when a top parameter terminates.
    """

    joint_top: tuple = ()
    first_top: tuple = ()
    second_top: tuple = ()
    joint_bottom: tuple = ()
    first_bottom: tuple = ()
    second_bottom: tuple = ()
    orders: tuple = (60, 60)

    @classmethod
    def kampe_de_feriet(
        cls,
        joint_top: Sequence = (),
        first_top: Sequence = (),
        second_top: Sequence = (),
        joint_bottom: Sequence = (),
        first_bottom: Sequence = (),
        second_bottom: Sequence = (),
        orders: tuple = (60, 60),
    ) -> "DoubleSeriesSpec":
        return cls(
            tuple((a, 1, 1) for a in joint_top),
            tuple((a, 1) for a in first_top),
            tuple((a, 1) for a in second_top),
            tuple((a, 1, 1) for a in joint_bottom),
            tuple((a, 1) for a in first_bottom),
            tuple((a, 1) for a in second_bottom),
            orders,
        )

    def termination(self) -> tuple[int | None, int | None, int | None]:
        """(total, first, second) termination orders implied by the top groups."""
        total = _termination_order([a for a, th, ph in self.joint_top if th == 1 and ph == 1])
        first = _termination_order([a for a, st in self.first_top if st == 1])
        second = _termination_order([a for a, st in self.second_top if st == 1])
        return total, first, second


def _double_sum(spec: DoubleSeriesSpec, z1: Scalar, z2: Scalar, term_fn) -> Scalar:
    total, first, second = spec.termination()
    m_max, n_max = spec.orders
    if first is not None:
        m_max = first
    if second is not None:
        n_max = second
    if total is not None:
        m_max = min(m_max, total) if first is not None else total
        n_max = min(n_max, total) if second is not None else total
    terminating = total is not None or (first is not None and second is not None)
    terms: list[Scalar] = []
    small = 0
    for d in range(m_max + n_max + 1):
        if total is not None and d > total:
            break
        diag: list[Scalar] = []
        for m in range(max(0, d - n_max), min(d, m_max) + 1):
            n = d - m
            tv = term_fn(m, n)
            if tv != 0:
                diag.append(tv * _power(z1, m) * _power(z2, n))
        terms.extend(diag)
        if not terminating:
            partial = abs(_fsum_scalar(terms)) if terms else 0.0
            if all(abs(v) < 1e-16 * partial for v in diag):
                small += 1
                if small >= 3:
                    return _fsum_scalar(terms)
            else:
                small = 0
    if not terminating:
        warnings.warn("double series not converged within truncation orders", ConvergenceWarning, stacklevel=3)
    return _fsum_scalar(terms) if terms else 0.0


def _power(z: Scalar, k: int) -> Scalar:
    return 1.0 if k == 0 else z**k


def _poch_log(a: Real, k: int) -> SignedLog:
    v = pochhammer(a if isinstance(a, (int, Fraction)) else float(a), k)
    return SignedLog.from_value(float(v))


def kdf_eval(spec: DoubleSeriesSpec, z1: Scalar, z2: Scalar) -> Scalar:
    """Kampe de Feriet type double series with Pochhammer-form groups.

    Term (m, n): prod (a)_{th m + ph n} prod (b)_{st m} prod (c)_{st n} /
    (same for the bottom groups) * z1^m z2^n / (m! n!).  The first-variable
    groups pair with z1.
    """

    def term(m: int, n: int) -> float:
        acc = ONE_LOG
        for a, th, ph in spec.joint_top:
            acc = acc * _poch_log(a, th * m + ph * n)
        for b, st in spec.first_top:
            acc = acc * _poch_log(b, st * m)
        for c, st in spec.second_top:
            acc = acc * _poch_log(c, st * n)
        if acc.sign == 0:
            return 0.0
        for a, th, ph in spec.joint_bottom:
            acc = acc / _nonzero(_poch_log(a, th * m + ph * n), a)
        for b, st in spec.first_bottom:
            acc = acc / _nonzero(_poch_log(b, st * m), b)
        for c, st in spec.second_bottom:
            acc = acc / _nonzero(_poch_log(c, st * n), c)
        acc = acc / SignedLog(math.lgamma(m + 1) + math.lgamma(n + 1), 1)
        return acc.value()

    return _double_sum(spec, z1, z2, term)


def _nonzero(v: SignedLog, param) -> SignedLog:
    if v.sign == 0:
        raise PoleError(f"denominator Pochhammer vanishes for parameter {param}")
    return v


def s_series(spec: DoubleSeriesSpec, z1: Scalar, z2: Scalar) -> Scalar:
    """Gamma-form double series.

    Term (m, n): prod Gamma(a + th m + ph n) prod Gamma(b + st m) prod Gamma(c + st n)
    / (same for bottom groups) * z1^m z2^n / (m! n!).  Bottom poles give a
    zero term; top poles raise.
    """

    def term(m: int, n: int) -> float:
        acc = ONE_LOG
        for a, th, ph in spec.joint_top:
            acc = acc * log_gamma_signed(a + th * m + ph * n)
        for b, st in spec.first_top:
            acc = acc * log_gamma_signed(b + st * m)
        for c, st in spec.second_top:
            acc = acc * log_gamma_signed(c + st * n)
        for args in (
            [a + th * m + ph * n for a, th, ph in spec.joint_bottom],
            [b + st * m for b, st in spec.first_bottom],
            [c + st * n for c, st in spec.second_bottom],
        ):
            for x in args:
                if is_nonpositive_integer(x):
                    return 0.0
                acc = acc / log_gamma_signed(x)
        acc = acc / SignedLog(math.lgamma(m + 1) + math.lgamma(n + 1), 1)
        return acc.value()

    return _double_sum(spec, z1, z2, term)


# ---------------------------------------------------------------------------
# Mittag-Leffler type functions


def ml_bivariate(
    chi1: Real,
    chi2: Real | None,
    p: Real,
    q: Real,
    upsilon: int,
    t: Scalar,
    w: Scalar,
    max_terms: int = 200,
) -> Scalar:
    """Bivariate Mittag-Leffler function.

    sum_{m,j} (chi1)_{m+j} [(chi2)_j] t^m w^{upsilon j} / (m! j! Gamma(p+m) Gamma(q+upsilon j)).
    """
    joint_top = ((chi1, 1, 1),)
    second_top = ((chi2, 1),) if chi2 is not None else ()

    def term(m: int, j: int) -> float:
        acc = _poch_log(chi1, m + j)
        if acc.sign == 0:
            return 0.0
        if chi2 is not None:
            acc = acc * _poch_log(chi2, j)
            if acc.sign == 0:
                return 0.0
        for x in (p + m, q + upsilon * j):
            if is_nonpositive_integer(x):
                return 0.0
            acc = acc / log_gamma_signed(x)
        acc = acc / SignedLog(math.lgamma(m + 1) + math.lgamma(j + 1), 1)
        return acc.value()

    spec = DoubleSeriesSpec(joint_top=joint_top, second_top=second_top, orders=(max_terms, max_terms))
    return _double_sum(spec, t, _power(w, upsilon), term)


def ml_prabhakar(alpha: Real, beta: Real, gamma_: Real, z: Scalar, max_terms: int = 500) -> Scalar:
    """Prabhakar function sum_k (gamma)_k z^k / (k! Gamma(beta + alpha k))."""
    n_stop = _termination_order([gamma_])
    limit = n_stop if n_stop is not None else max_terms
    terms: list[Scalar] = []
    small = 0
    for k in range(limit + 1):
        acc = _poch_log(gamma_, k)
        if acc.sign == 0:
            break
        x = beta + alpha * k
        if is_nonpositive_integer(x):
            v = 0.0
        else:
            v = (acc / log_gamma_signed(x) / SignedLog(math.lgamma(k + 1), 1)).value()
        term = v * _power(z, k)
        terms.append(term)
        if n_stop is None:
            if abs(term) < 1e-16 * abs(_fsum_scalar(terms)):
                small += 1
                if small >= 3:
                    return _fsum_scalar(terms)
            else:
                small = 0
    if n_stop is None:
        warnings.warn(f"Prabhakar series not converged after {max_terms} terms", ConvergenceWarning, stacklevel=2)
    return _fsum_scalar(terms)
