"""Polynomial families as :class:`ExpSeries`, each with several constructions.

Direct constructions use exact rational arithmetic wherever the
coefficient is rational (Gamma ratios with integer argument gaps become
rising factorials); the alternate constructions go through the Konhauser,
Laguerre or hypergeometric representations with floating Gamma values so
that agreement between them is a genuine cross-check.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .errors import ConstraintError, UnsupportedConstructionError
from .exp_series import ExpSeries, as_fraction, evaluate, series_sum, substitute_reciprocal
from .scalar_special import delta_array, gamma_ratio, pochhammer, rgamma


class Family(str, Enum):
    KONHAUSER_Z = "konhauser_z"
    KONHAUSER_Y = "konhauser_y"
    FINITE_N = "finite_n"
    LAGUERRE = "laguerre"
    FNKP_FIRST = "fnkp_first"
    FNKP_SECOND = "fnkp_second"
    LK_FIRST = "lk_first"
    LK_SECOND = "lk_second"
    GEN_LK = "gen_lk"


class Construction(str, Enum):
    DIRECT = "direct"
    VIA_Z = "via_z"
    VIA_LAGUERRE = "via_laguerre"
    VIA_HYPERGEOMETRIC = "via_hypergeometric"
    VIA_GENLK = "via_genlk"
    VIA_LK = "via_lk"


# short names used on the command line
FAMILY_ALIASES = {
    "fnkp1": Family.FNKP_FIRST,
    "fnkp2": Family.FNKP_SECOND,
    "kz": Family.KONHAUSER_Z,
    "ky": Family.KONHAUSER_Y,
    "finite_n": Family.FINITE_N,
    "laguerre": Family.LAGUERRE,
    "lk1": Family.LK_FIRST,
    "lk2": Family.LK_SECOND,
    "genlk": Family.GEN_LK,
}

_Num = Fraction


def _frac(x) -> Fraction:
    return as_fraction(x)


@dataclass(frozen=True)
class ParamSet:
    """Validated parameter bundle.

    ``p``, ``q``, ``chi`` and the fractional orders are exact rationals so that
    exponents such as ``q + upsilon*m`` merge exactly.  Optional scalars are
    ``None`` when unused.
    """

    p: Fraction = Fraction(0)
    q: Fraction = Fraction(0)
    upsilon: int = 1
    s: int = 0
    n: int = 0
    chi: Fraction = Fraction(0)
    m: Optional[int] = None
    beta: Optional[Fraction] = None
    tau: Optional[Fraction] = None
    lam: Optional[Fraction] = None
    mu: Optional[Fraction] = None
    a: Optional[float] = None
    b: Optional[float] = None
    y: Optional[float] = None
    y1: Optional[float] = None
    y2: Optional[float] = None
    p1: Optional[Fraction] = None
    p2: Optional[Fraction] = None
    q1: Optional[Fraction] = None
    q2: Optional[Fraction] = None

    _RATIONAL = ("p", "q", "chi", "beta", "tau", "lam", "mu", "p1", "p2", "q1", "q2")
    _REAL = ("a", "b", "y", "y1", "y2")

    def __post_init__(self):
        for name in self._RATIONAL:
            v = getattr(self, name)
            if v is not None and not isinstance(v, Fraction):
                object.__setattr__(self, name, _frac(v))
        for name in self._REAL:
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, float(v))
        for name in ("upsilon", "s", "n", "m"):
            v = getattr(self, name)
            if v is None:
                continue
            if isinstance(v, float) and v.is_integer():
                v = int(v)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConstraintError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, v)
        if self.upsilon < 1:
            raise ConstraintError("upsilon must be a positive integer")
        if self.s < 0 or self.n < 0:
            raise ConstraintError("degrees s and n must be non-negative")

    def replace(self, **changes) -> "ParamSet":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        """Non-default fields, rationals rendered as strings (e.g. '3/4')."""
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name in ("n", "chi") and v == 0:
                continue
            out[f.name] = str(v) if isinstance(v, Fraction) else v
        return out

    def label(self) -> str:
        return ", ".join(f"{k}={v}" for k, v in self.as_dict().items())

    def check_finite_class(self, s: Optional[int] = None) -> None:
        s = self.s if s is None else s
        if not 2 * s < self.p - 1:
            raise ConstraintError(
                f"finite-class constraint s < (p-1)/2 violated (s={s}, p={self.p})"
            )
        if not self.q > -1:
            raise ConstraintError(f"q must exceed -1 (q={self.q})")


@dataclass(frozen=True)
class FamilySpec:
    family: Family
    construction: Construction = Construction.DIRECT

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "construction", Construction(self.construction))


# ---------------------------------------------------------------------------
# helpers


def _float(x) -> float:
    return float(x)


def _rising(a: Fraction, k: int) -> Fraction:
    return Fraction(pochhammer(a, k))


def _binom_frac(x: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for i in range(k):
        out *= x - i
    return out / math.factorial(k)


def _neg_s_poch(s: int, k: int) -> int:
    """(-s)_k as an exact integer."""
    if k > s:
        return 0
    return (-1) ** k * math.factorial(s) // math.factorial(s - k)


# ---------------------------------------------------------------------------
# univariate families


def konhauser_z(s: int, chi, upsilon: int, var: str = "w") -> ExpSeries:
    """Z_s^(chi)(w; upsilon): Gamma ratios with integer gaps are exact."""
    chi = _frac(chi)
    if s < 0:
        return ExpSeries()
    terms = {}
    for l in range(s + 1):
        c = Fraction((-1) ** l * math.comb(s, l)) * _rising(upsilon * l + chi + 1, upsilon * (s - l)) / math.factorial(s)
        terms[_key(var, upsilon * l)] = _float(c)
    return ExpSeries(terms)


def konhauser_y_terms(s: int, chi, upsilon: int) -> dict:
    """Exact coefficients {m: c} of Y_s^(chi)(w; upsilon) = sum_m c w^m (rational chi)."""
    chi = _frac(chi)
    if s < 0:
        return {}
    terms = {}
    for m in range(s + 1):
        inner = sum(
            Fraction((-1) ** l * math.comb(m, l)) * _rising(Fraction(chi + l + 1, upsilon), s)
            for l in range(m + 1)
        )
        terms[m] = inner / (math.factorial(s) * math.factorial(m))
    return terms


def konhauser_y(s: int, chi, upsilon: int, var: str = "w") -> ExpSeries:
    """Y_s^(chi)(w; upsilon) with the inner alternating sum in exact arithmetic."""
    return ExpSeries({_key(var, m): _float(c) for m, c in konhauser_y_terms(s, chi, upsilon).items()})


def konhauser_y_partial_sum(s: int, chi, upsilon: int) -> ExpSeries:
    """sum_{k<=s} Y_k^(chi)(w; upsilon)."""
    return series_sum((konhauser_y(k, chi, upsilon) for k in range(s + 1)))


def finite_n_terms(s: int, p) -> dict:
    """Exact coefficients {k: c} of N_s^(p)(t) = sum_k c t^k."""
    p = _frac(p)
    if s < 0:
        return {}
    return {
        k: Fraction((-1) ** (s + k) * math.factorial(k) * math.comb(s, k)) * _binom_frac(p - s - 1, k)
        for k in range(s + 1)
    }


def finite_n(s: int, p, var: str = "t") -> ExpSeries:
    """N_s^(p)(t) = (-1)^s sum_k k! C(p-s-1, k) C(s, k) (-t)^k."""
    return ExpSeries({_key(var, k): _float(c) for k, c in finite_n_terms(s, p).items()})


def laguerre(s: int, alpha, var: str = "t") -> ExpSeries:
    """L_s^(alpha)(t) = sum_j (-1)^j (alpha+j+1)_{s-j} t^j / ((s-j)! j!)."""
    alpha = _frac(alpha)
    if s < 0:
        return ExpSeries()
    terms = {}
    for j in range(s + 1):
        c = Fraction((-1) ** j) * _rising(alpha + j + 1, s - j) / (math.factorial(s - j) * math.factorial(j))
        terms[_key(var, j)] = _float(c)
    return ExpSeries(terms)


def _key(var: str, e) -> tuple:
    return (e, 0) if var == "t" else (0, e)


# ---------------------------------------------------------------------------
# bivariate families, direct forms


def fnkp_first_terms(s: int, p, q, upsilon: int) -> dict:
    """Exact coefficients {(a, b): c} of Gamma(q+1) times the first set."""
    p, q = _frac(p), _frac(q)
    if s < 0:
        return {}
    terms = {}
    for k in range(s + 1):
        for m in range(s - k + 1):
            terms[(Fraction(s - k), Fraction(upsilon * m))] = (
                Fraction(_neg_s_poch(s, k + m))
                * _rising(p - 2 * s + k, s - k)
                / (_rising(q + 1, upsilon * m) * math.factorial(k) * math.factorial(m))
            )
    return terms


def fnkp_first(s: int, p, q, upsilon: int) -> ExpSeries:
    """First set, double sum; no finite-class check (used for shifted indices).

    Gamma(p-s)/Gamma(p-2s+k) = (p-2s+k)_{s-k} and
    1/Gamma(q+1+u m) = rgamma(q+1)/(q+1)_{u m}.
    """
    g = rgamma(_frac(q) + 1)
    return ExpSeries({k: _float(c) * g for k, c in fnkp_first_terms(s, p, q, upsilon).items()})


def fnkp_second_terms(s: int, p, q, upsilon: int) -> dict:
    """Exact coefficients {(a, b): c} of the second set."""
    if s < 0:
        return {}
    n = finite_n_terms(s, p)
    y: dict = {}
    for k in range(s + 1):
        for m, c in konhauser_y_terms(k, q, upsilon).items():
            y[m] = y.get(m, Fraction(0)) + c
    return {(Fraction(a), Fraction(b)): ca * cb for a, ca in n.items() for b, cb in y.items() if ca * cb != 0}


def fnkp_second(s: int, p, q, upsilon: int) -> ExpSeries:
    """Second set: N_s^(p)(t) * sum_{k<=s} Y_k^(q)(w; upsilon)."""
    if s < 0:
        return ExpSeries()
    return finite_n(s, p) * konhauser_y_partial_sum(s, q, upsilon)


def gen_lk(s: int, p, q, upsilon: int) -> ExpSeries:
    """Generalized Laguerre-Konhauser polynomial, exponents t^{k+p} w^{u m + q}."""
    p, q = _frac(p), _frac(q)
    if s < 0:
        return ExpSeries()
    gp, gq = rgamma(p + 1), rgamma(q + 1)
    terms = {}
    for k in range(s + 1):
        for m in range(s - k + 1):
            c = Fraction((-1) ** (k + m) * math.factorial(s)) / (
                math.factorial(k)
                * math.factorial(m)
                * math.factorial(s - k - m)
                * _rising(p + 1, k)
                * _rising(q + 1, upsilon * m)
            )
            terms[(k + p, upsilon * m + q)] = _float(c) * gp * gq
    return ExpSeries(terms)


def lk_first(s: int, p, q, upsilon: int) -> ExpSeries:
    """First set of the Laguerre-Konhauser pair (double sum form)."""
    p, q = _frac(p), _frac(q)
    if s < 0:
        return ExpSeries()
    gq = rgamma(q + 1)
    terms = {}
    for k in range(s + 1):
        for m in range(s - k + 1):
            c = (
                Fraction(_neg_s_poch(s, k + m))
                * _rising(p + 1 + k, s - k)
                / (math.factorial(s) * _rising(q + 1, upsilon * m) * math.factorial(k) * math.factorial(m))
            )
            terms[(k, upsilon * m)] = _float(c) * gq
    return ExpSeries(terms)


def lk_second(s: int, p, q, upsilon: int) -> ExpSeries:
    if s < 0:
        return ExpSeries()
    return laguerre(s, p) * konhauser_y_partial_sum(s, q, upsilon)


# ---------------------------------------------------------------------------
# alternate constructions (floating Gamma values on purpose)


def fnkp_first_via_z(s: int, p, q, upsilon: int) -> ExpSeries:
    p, q = _frac(p), _frac(q)
    parts = []
    for k in range(s + 1):
        c = (
            math.factorial(s)
            * (-1) ** k
            * gamma_ratio(p - s, p - 2 * s + k)
            * rgamma(q + 1 + upsilon * (s - k))
            / math.factorial(k)
        )
        parts.append(konhauser_z(s - k, q, upsilon).times_monomial(s - k, 0, c))
    return series_sum(parts)


def fnkp_first_via_laguerre(s: int, p, q, upsilon: int) -> ExpSeries:
    p, q = _frac(p), _frac(q)
    parts = []
    for k in range(s + 1):
        c = (
            math.factorial(s)
            * (-1) ** k
            * gamma_ratio(p - s, p - s - k)
            * rgamma(q + 1 + upsilon * k)
            / math.factorial(k)
        )
        lag = substitute_reciprocal(laguerre(s - k, p - 2 * s - 1), "t")
        parts.append(lag.times_monomial(s, upsilon * k, c))
    return series_sum(parts)


def fnkp_first_via_genlk(s: int, p, q, upsilon: int) -> ExpSeries:
    """Sum_k (-s)_k t^{s-k} w^{-q} genLK_{s-k}^{(0,q)}(0, w) Gamma(p-s)/(k! Gamma(p-2s+k))."""
    p, q = _frac(p), _frac(q)
    parts = []
    for k in range(s + 1):
        c = _neg_s_poch(s, k) * gamma_ratio(p - s, p - 2 * s + k) / math.factorial(k)
        lk0 = gen_lk(s - k, 0, q, upsilon).at_zero("t")
        parts.append(lk0.times_monomial(s - k, -q, c))
    return series_sum(parts)


def fnkp_first_via_lk(s: int, p, q, upsilon: int) -> ExpSeries:
    p, q = _frac(p), _frac(q)
    parts = []
    for k in range(s + 1):
        c = _neg_s_poch(s, k) * gamma_ratio(p - s, p - 2 * s + k) / math.factorial(k)
        lk0 = lk_first(s - k, 0, q, upsilon).at_zero("t")
        parts.append(lk0.times_monomial(s - k, 0, c))
    return series_sum(parts)


def fnkp_first_via_hypergeometric(s: int, p, q, upsilon: int) -> ExpSeries:
    """Expansion of the Kampe de Feriet form in 1/t and (w/upsilon)^upsilon.

    Term (j, r): (-s)_{j+r} / ((p-2s)_j prod_i (Delta_i)_r j! r!), times the
    prefactor t^s Gamma(p-s) / (Gamma(p-2s) Gamma(q+1)).
    """
    p, q = _frac(p), _frac(q)
    delta = delta_array(upsilon, q + 1)
    pref = gamma_ratio(p - s, p - 2 * s) * rgamma(q + 1) if s > 0 else rgamma(q + 1)
    terms = {}
    for j in range(s + 1):
        for r in range(s - j + 1):
            den = _rising(p - 2 * s, j) * math.factorial(j) * math.factorial(r)
            for d in delta:
                den *= _rising(d, r)
            c = _neg_s_poch(s, j + r) * pref / float(den) * float(upsilon) ** (-upsilon * r)
            terms[(s - j, upsilon * r)] = terms.get((s - j, upsilon * r), 0.0) + c
    return ExpSeries(terms)


def gen_lk_via_z(s: int, p, q, upsilon: int) -> ExpSeries:
    p, q = _frac(p), _frac(q)
    parts = []
    for k in range(s + 1):
        c = math.factorial(s) * (-1) ** k * rgamma(k + p + 1) * rgamma(upsilon * (s - k) + q + 1) / math.factorial(k)
        parts.append(konhauser_z(s - k, q, upsilon).times_monomial(k + p, q, c))
    return series_sum(parts)


def gen_lk_via_laguerre(s: int, p, q, upsilon: int) -> ExpSeries:
    p, q = _frac(p), _frac(q)
    parts = []
    for k in range(s + 1):
        c = math.factorial(s) * (-1) ** k * rgamma(s - k + p + 1) * rgamma(upsilon * k + q + 1) / math.factorial(k)
        parts.append(laguerre(s - k, p).times_monomial(p, upsilon * k + q, c))
    return series_sum(parts)


def lk_first_via_z(s: int, p, q, upsilon: int) -> ExpSeries:
    """Second display of the LK first set, summed over k <= s."""
    p, q = _frac(p), _frac(q)
    parts = []
    for k in range(s + 1):
        c = (
            gamma_ratio(s + p + 1, p + 1 + k)
            * (-1) ** k
            * rgamma(q + 1 + upsilon * (s - k))
            / math.factorial(k)
        )
        parts.append(konhauser_z(s - k, q, upsilon).times_monomial(k, 0, c))
    return series_sum(parts)


def finite_n_via_laguerre(s: int, p) -> ExpSeries:
    p = _frac(p)
    return substitute_reciprocal(laguerre(s, p - 2 * s - 1), "t").times_monomial(s, 0, math.factorial(s))


def finite_n_via_hypergeometric(s: int, p) -> ExpSeries:
    """t^s s! C(p-s-1, s) 1F1(-s; p-2s; 1/t) expanded termwise."""
    p = _frac(p)
    lead = math.factorial(s) * _float(_binom_frac(p - s - 1, s))
    terms = {}
    for j in range(s + 1):
        c = _neg_s_poch(s, j) / (float(_rising(p - 2 * s, j)) * math.factorial(j))
        terms[(s - j, 0)] = lead * c
    return ExpSeries(terms)


def laguerre_via_hypergeometric(s: int, alpha) -> ExpSeries:
    """C(s+alpha, s) 1F1(-s; alpha+1; t)."""
    alpha = _frac(alpha)
    lead = _float(_binom_frac(alpha + s, s))
    terms = {}
    for j in range(s + 1):
        terms[(j, 0)] = lead * _neg_s_poch(s, j) / (float(_rising(alpha + 1, j)) * math.factorial(j))
    return ExpSeries(terms)


# ---------------------------------------------------------------------------
# dispatch


def _bivariate(fn):
    return lambda P: fn(P.s, P.p, P.q, P.upsilon)


_BUILDERS = {
    (Family.KONHAUSER_Z, Construction.DIRECT): lambda P: konhauser_z(P.s, P.chi, P.upsilon),
    (Family.KONHAUSER_Y, Construction.DIRECT): lambda P: konhauser_y(P.s, P.chi, P.upsilon),
    (Family.FINITE_N, Construction.DIRECT): lambda P: finite_n(P.s, P.p),
    (Family.FINITE_N, Construction.VIA_LAGUERRE): lambda P: finite_n_via_laguerre(P.s, P.p),
    (Family.FINITE_N, Construction.VIA_HYPERGEOMETRIC): lambda P: finite_n_via_hypergeometric(P.s, P.p),
    (Family.LAGUERRE, Construction.DIRECT): lambda P: laguerre(P.s, P.p),
    (Family.LAGUERRE, Construction.VIA_HYPERGEOMETRIC): lambda P: laguerre_via_hypergeometric(P.s, P.p),
    (Family.FNKP_FIRST, Construction.DIRECT): _bivariate(fnkp_first),
    (Family.FNKP_FIRST, Construction.VIA_Z): _bivariate(fnkp_first_via_z),
    (Family.FNKP_FIRST, Construction.VIA_LAGUERRE): _bivariate(fnkp_first_via_laguerre),
    (Family.FNKP_FIRST, Construction.VIA_GENLK): _bivariate(fnkp_first_via_genlk),
    (Family.FNKP_FIRST, Construction.VIA_LK): _bivariate(fnkp_first_via_lk),
    (Family.FNKP_FIRST, Construction.VIA_HYPERGEOMETRIC): _bivariate(fnkp_first_via_hypergeometric),
    (Family.FNKP_SECOND, Construction.DIRECT): _bivariate(fnkp_second),
    (Family.LK_FIRST, Construction.DIRECT): _bivariate(lk_first),
    (Family.LK_FIRST, Construction.VIA_Z): _bivariate(lk_first_via_z),
    (Family.LK_SECOND, Construction.DIRECT): _bivariate(lk_second),
    (Family.GEN_LK, Construction.DIRECT): _bivariate(gen_lk),
    (Family.GEN_LK, Construction.VIA_Z): _bivariate(gen_lk_via_z),
    (Family.GEN_LK, Construction.VIA_LAGUERRE): _bivariate(gen_lk_via_laguerre),
}


def constructions(family: Family | str) -> list:
    family = Family(family)
    return [c for (f, c) in _BUILDERS if f == family]


def validate(family: Family, params: ParamSet) -> None:
    if family in (Family.FNKP_FIRST, Family.FNKP_SECOND):
        params.check_finite_class()
    elif family in (Family.LK_FIRST, Family.LK_SECOND, Family.GEN_LK):
        if not params.q > -1:
            raise ConstraintError(f"q must exceed -1 (q={params.q})")
        if not params.p > -1:
            raise ConstraintError(f"p must exceed -1 (p={params.p})")
    elif family in (Family.KONHAUSER_Z, Family.KONHAUSER_Y):
        if not params.chi > -1:
            raise ConstraintError(f"chi must exceed -1 (chi={params.chi})")


def build_family(spec: FamilySpec, params: ParamSet, check: bool = True) -> ExpSeries:
    if check:
        validate(spec.family, params)
    return _build_cached(spec, params)


@lru_cache(maxsize=4096)
def _build_cached(spec: FamilySpec, params: ParamSet) -> ExpSeries:
    try:
        builder = _BUILDERS[(spec.family, spec.construction)]
    except KeyError:
        raise UnsupportedConstructionError(
            f"construction {spec.construction.value} is not available for {spec.family.value}"
        ) from None
    return builder(params)


def family_coeffs(spec: FamilySpec, params: ParamSet) -> list:
    """[((a, b), c), ...] in lexicographic exponent order."""
    return build_family(spec, params).items()


def family_eval(spec: FamilySpec, params: ParamSet, t: float, w: float) -> float:
    return evaluate(build_family(spec, params), t, w)
