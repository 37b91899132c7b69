"""Identity catalog: one descriptor per checkable display.

Importing this module registers every descriptor.  Each evaluator returns an
:class:`Evaluation`; exponent and prefactor variants are declared next to the
display they correct.
"""

from __future__ import annotations

import itertools
import math
import warnings
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate as spi
from scipy import special as sps

from ..exp_series import (
    ExpSeries,
    OperatorExpr,
    differentiate,
    evaluate_array,
    fractional_shift,
    operator_apply,
    series_sum,
    substitute_reciprocal,
)
from ..families import (
    ParamSet,
    finite_n,
    finite_n_via_laguerre,
    fnkp_first,
    fnkp_first_terms,
    fnkp_first_via_genlk,
    fnkp_first_via_laguerre,
    fnkp_first_via_lk,
    fnkp_first_via_z,
    fnkp_second,
    fnkp_second_terms,
    gen_lk,
    gen_lk_via_laguerre,
    gen_lk_via_z,
    konhauser_y,
    konhauser_z,
    laguerre,
    lk_first,
    lk_first_via_z,
    lk_second,
)
from ..quadrature import (
    WeightDescriptor,
    fourier_box,
    gamma_moment_exact,
    gamma_moment_integral,
    gauss_laguerre_rule,
    integrate_biorthogonality,
    laplace_termwise,
    multiply_terms,
    plane_integrate,
)
from ..scalar_special import (
    DoubleSeriesSpec,
    complex_gamma_array,
    delta_array,
    gamma,
    gamma_ratio,
    kdf_eval,
    ml_bivariate,
    ml_prabhakar,
    pochhammer,
    rgamma,
)
from .core import (
    EXACT_TOL,
    Evaluation,
    IdentityDescriptor,
    Variant,
    XSeries,
    compose,
    compose_double,
    register,
    variant_search,
)

F = Fraction
D = OperatorExpr.d
INTEG = OperatorExpr.integ
MUL = OperatorExpr.mul
ONE = OperatorExpr.identity


# ---------------------------------------------------------------------------
# helpers


def _grid(**axes) -> callable:
    """Cartesian grid factory; the last axis varies fastest."""
    names = list(axes)

    def build() -> list:
        return [ParamSet(**dict(zip(names, vals))) for vals in itertools.product(*axes.values())]

    return build


def _points(*dicts) -> callable:
    return lambda: [ParamSet(**d) for d in dicts]


def _finite(P: ParamSet) -> bool:
    return 2 * P.s < P.p - 1 and P.q > -1


def N(s: int, p, q, u: int) -> ExpSeries:
    return fnkp_first(s, p, q, u)


def mono(c: float = 1.0, a=0, b=0) -> ExpSeries:
    return ExpSeries.monomial(c, a, b)


def Dt(x: ExpSeries, m: int = 1) -> ExpSeries:
    return differentiate(x, "t", m) if m else x


def Dw(x: ExpSeries, m: int = 1) -> ExpSeries:
    return differentiate(x, "w", m) if m else x


def _zero_check(*parts: ExpSeries) -> Evaluation:
    """sum(parts) == 0, normalized by the largest single-term coefficient."""
    total = series_sum(parts)
    scale = max((p.max_abs() for p in parts), default=0.0)
    return Evaluation(total, ExpSeries(), scale=scale)


def _affine(c1: int, c0: int, base: str = "p") -> str:
    out = base
    if c1:
        out += ("+" if c1 > 0 else "-") + (f"{abs(c1)}s" if abs(c1) != 1 else "s")
    if c0:
        out += f"{c0:+d}"
    return out


FNKP_GRID = _grid(p=[F(11), F(27, 2)], q=[F(0), F(3, 4)], upsilon=[1, 2, 3], s=range(5))


def _s_probe(P: ParamSet, smax: int = 4) -> list:
    return [P.replace(s=k) for k in range(smax + 1) if 2 * k < P.p - 1]


# ---------------------------------------------------------------------------
# orthogonality


def _biorth_eval(ref: float, ind: float, expected: float, diag_scale: float, diagonal: bool) -> Evaluation:
    return Evaluation(
        ref, expected, scale=diag_scale, oracle=(ref, ind), tol=EXACT_TOL if diagonal else 1e-10
    )


def _konhauser_norm(s: int, chi, u: int) -> float:
    return gamma(u * s + chi + 1) / math.factorial(s)


def _eval_konhauser_biorth(P: ParamSet, v: Optional[Variant]) -> Evaluation:
    Z, Y = konhauser_z(P.s, P.chi, P.upsilon), konhauser_y(P.n, P.chi, P.upsilon)
    wt = WeightDescriptor.laguerre(P.chi)
    ref = gamma_moment_integral(Z * Y, wt)
    ind = integrate_biorthogonality(Z, Y, wt, 64)
    hs = _konhauser_norm(P.s, P.chi, P.upsilon)
    hn = _konhauser_norm(P.n, P.chi, P.upsilon)
    return _biorth_eval(ref, ind, hs if P.s == P.n else 0.0, max(hs, hn), P.s == P.n)


register(IdentityDescriptor(
    "konhauser_biorth", "orthogonality", "scalar",
    "Konhauser pair Z_s, Y_n biorthogonal for w^chi e^-w",
    _eval_konhauser_biorth,
    _grid(chi=[F(0), F(1, 2)], upsilon=[1, 2, 3], s=range(5), n=range(5)),
    lambda P: P.chi > -1,
))


def _finite_norm(s: int, p) -> float:
    return math.factorial(s) * gamma(p - s) / float(p - 2 * s - 1)


def _eval_finite_n_orth(P: ParamSet, v) -> Evaluation:
    a, b = finite_n(P.s, P.p), finite_n(P.n, P.p)
    wt = WeightDescriptor.reciprocal(P.p)
    ref = gamma_moment_integral(a * b, wt)
    ind = integrate_biorthogonality(a, b, wt, 64)
    hs, hn = _finite_norm(P.s, P.p), _finite_norm(P.n, P.p)
    return _biorth_eval(ref, ind, hs if P.s == P.n else 0.0, max(hs, hn), P.s == P.n)


def _two_index_finite(P: ParamSet) -> bool:
    return 2 * max(P.s, P.n) < P.p - 1 and P.q > -1


register(IdentityDescriptor(
    "finite_n_orth", "orthogonality", "scalar",
    "finite N polynomials orthogonal for t^-p e^-1/t",
    _eval_finite_n_orth,
    _grid(p=[F(9), F(11), F(25, 2), F(27, 2)], s=range(5), n=range(5)),
    _two_index_finite,
))


def _eval_fnkp_biorth(P: ParamSet, v) -> Evaluation:
    a = N(P.s, P.p, P.q, P.upsilon)
    b = fnkp_second(P.n, P.p, P.q, P.upsilon)
    wt = WeightDescriptor.product(P.p, P.q)
    # exact rational coefficients: the pairing cancels by several digits at s = 3
    exact = multiply_terms(fnkp_first_terms(P.s, P.p, P.q, P.upsilon), fnkp_second_terms(P.n, P.p, P.q, P.upsilon))
    ref = gamma_moment_exact(exact, wt) / gamma(P.q + 1)
    ind = integrate_biorthogonality(a, b, wt, 64)
    hs, hn = _finite_norm(P.s, P.p), _finite_norm(P.n, P.p)
    return _biorth_eval(ref, ind, hs if P.s == P.n else 0.0, max(hs, hn), P.s == P.n)


BIORTH_GRID = _grid(p=[F(9), F(25, 2)], q=[F(0), F(3, 4)], upsilon=[1, 2, 3], s=range(4), n=range(4))

register(IdentityDescriptor(
    "fnkp_biorth", "orthogonality", "scalar",
    "first and second sets biorthogonal for t^-p w^q e^{-w-1/t}",
    _eval_fnkp_biorth, BIORTH_GRID, _two_index_finite,
))


def _eval_biorth_triangular(P: ParamSet, v) -> Evaluation:
    """int weight * t^k * second set of degree n: zero below k = n."""
    k, n = P.m, P.n
    a = mono(1.0, k, 0)
    b = fnkp_second(n, P.p, P.q, P.upsilon)
    wt = WeightDescriptor.product(P.p, P.q)
    exact = multiply_terms({(F(k), F(0)): F(1)}, fnkp_second_terms(n, P.p, P.q, P.upsilon))
    ref = gamma_moment_exact(exact, wt)
    ind = integrate_biorthogonality(a, b, wt, 64)
    lead = math.factorial(n) * float(sps.binom(float(P.p - n - 1), n))
    top = gamma(P.q + 1) * _finite_norm(n, P.p) / lead
    return _biorth_eval(ref, ind, top if k == n else 0.0, abs(top), k == n)


register(IdentityDescriptor(
    "biorth_triangular", "orthogonality", "scalar",
    "t^k against the second set vanishes for k < n and not at k = n",
    _eval_biorth_triangular,
    _grid(p=[F(9), F(25, 2)], q=[F(0), F(3, 4)], upsilon=[1, 2, 3], n=range(4), m=range(4)),
    lambda P: P.m is not None and 0 <= P.m <= P.n and 2 * P.n < P.p - 1 and P.q > -1,
))


Z_GRID = _grid(chi=[F(0), F(1, 2)], upsilon=[1, 2, 3], s=range(5))


def _eval_z_rec_1(P: ParamSet, v) -> Evaluation:
    s, chi, u = P.s, P.chi, P.upsilon
    Z = konhauser_z(s, chi, u)
    lhs = Dw(Dw(Z).times_monomial(0, chi + 1), u)
    rhs = konhauser_z(s - 1, chi, u).times_monomial(0, chi, -u * float(pochhammer(u * (s - 1) + chi + 1, u)))
    return Evaluation(lhs, rhs)


def _eval_z_rec_2(P: ParamSet, v) -> Evaluation:
    s, chi, u = P.s, P.chi, P.upsilon
    Z = konhauser_z(s, chi, u)
    inner = Dw(Z).times_monomial(0, chi + 1)
    return Evaluation(Dw(inner, u), inner - Z.times_monomial(0, chi, s * u))


def _eval_z_rec_3(P: ParamSet, v) -> Evaluation:
    s, chi, u = P.s, P.chi, P.upsilon
    lhs = Dw(konhauser_z(s, chi, u))
    rhs = konhauser_z(s - 1, chi + u, u).times_monomial(0, u - 1, -u)
    return Evaluation(lhs, rhs)


for _i, _fn, _title in (
    (1, _eval_z_rec_1, "D^u[w^(chi+1) D Z_s] lowers s with a Pochhammer factor"),
    (2, _eval_z_rec_2, "D^u[w^(chi+1) D Z_s] in terms of Z_s itself"),
    (3, _eval_z_rec_3, "D Z_s^(chi) = -u w^(u-1) Z_(s-1)^(chi+u)"),
):
    register(IdentityDescriptor(f"z_rec_{_i}", "recurrence", "series_exact", _title, _fn, Z_GRID,
                                lambda P: P.chi > -1))


# ---------------------------------------------------------------------------
# reductions and representations


def _eval_remark_w0(P: ParamSet, v) -> Evaluation:
    at0 = N(P.s, P.p, P.q, P.upsilon).at_zero("w")
    g = rgamma(P.q + 1)
    return Evaluation([at0, at0], [finite_n(P.s, P.p).scale(g), finite_n_via_laguerre(P.s, P.p).scale(g)])


register(IdentityDescriptor(
    "remark_w0", "representation", "series_exact",
    "w = 0 reduces the first set to finite N and Laguerre forms",
    _eval_remark_w0, FNKP_GRID, _finite,
))
register(IdentityDescriptor(
    "remark_w0_q0", "representation", "series_exact",
    "w = 0 and q = 0 reduction",
    _eval_remark_w0,
    _grid(p=[F(11), F(27, 2)], q=[F(0)], upsilon=[1, 2, 3], s=range(5)),
    lambda P: _finite(P) and P.q == 0,
))


def _eval_remark_laguerre00(P: ParamSet, v) -> Evaluation:
    lhs = N(P.s, P.p, P.q, 1).at_zero("w")
    if v is None:
        rhs = laguerre(P.s, 0)
    else:
        rhs = finite_n_via_laguerre(P.s, P.p)
    return Evaluation(lhs, rhs)


register(IdentityDescriptor(
    "remark_laguerre00", "representation", "series_exact",
    "p = q = 0, u = 1 at w = 0 against a Laguerre polynomial",
    _eval_remark_laguerre00,
    _grid(p=[F(0)], q=[F(0)], upsilon=[1], s=range(4)),
    lambda P: P.p == 0 and P.q == 0 and P.upsilon == 1,
    variants=(Variant("reciprocal_laguerre", "s! t^s L_s^(p-2s-1)(1/t) at p = 0 (printed: L_s^(0)(t))"),),
))

PT_TW = ((0.5, 0.3), (2.0, 1.1), (7.0, 0.8), (1.3, 1.7), (3.0, 0.45))


def _eval_remark_prabhakar(P: ParamSet, v) -> Evaluation:
    s, p, q = P.s, P.p, P.q
    A = N(s, p, q, P.upsilon)
    lhs = [A.evaluate(t, 0.0) for t, _ in PT_TW]
    pre = gamma(p - s) * rgamma(q + 1)
    rhs = [pre * t**s * ml_prabhakar(1, float(p - 2 * s), -s, 1.0 / t) for t, _ in PT_TW]
    return Evaluation(lhs, rhs, tol=1e-10)


register(IdentityDescriptor(
    "remark_prabhakar", "representation", "pointwise",
    "w = 0 value as a Prabhakar function of 1/t",
    _eval_remark_prabhakar, FNKP_GRID, _finite,
))


def _ml_side(P: ParamSet) -> tuple:
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    A = N(s, p, q, u)
    lhs = [A.evaluate(t, w) for t, w in PT_TW]
    rhs = [t**s * gamma(p - s) * ml_bivariate(-s, None, float(p - 2 * s), float(q + 1), u, 1.0 / t, w)
           for t, w in PT_TW]
    return lhs, rhs


def _eval_rel_ml_bivariate(P: ParamSet, v) -> Evaluation:
    lhs, rhs = _ml_side(P)
    return Evaluation(lhs, rhs, tol=1e-10)


def _eval_rel_ml_jk(P: ParamSet, v) -> Evaluation:
    # the Jacobi-Konhauser form with its second parameter group absent
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    A = N(s, p, q, u)
    pts = [(t, 2.0 * w) for t, w in PT_TW]
    lhs = [A.evaluate(t, w) for t, w in pts]
    rhs = [t**s * gamma(p - s) * ml_bivariate(-s, None, float(p - 2 * s), float(q + 1), u, 1.0 / t, w)
           for t, w in pts]
    return Evaluation(lhs, rhs, tol=1e-10)


register(IdentityDescriptor(
    "rel_ml_bivariate", "representation", "pointwise",
    "first set as a bivariate Mittag-Leffler function",
    _eval_rel_ml_bivariate, FNKP_GRID, _finite,
))
register(IdentityDescriptor(
    "rel_ml_jk", "representation", "pointwise",
    "first set as a Jacobi-Konhauser Mittag-Leffler function",
    _eval_rel_ml_jk, FNKP_GRID, _finite,
))


def _construction(direct, alt) -> callable:
    def ev(P: ParamSet, v) -> Evaluation:
        args = (P.s, P.p, P.q, P.upsilon)
        return Evaluation(alt(*args), direct(*args))

    return ev


for _id, _d, _alt, _title in (
    ("rep_via_z", fnkp_first, fnkp_first_via_z, "first set through Konhauser Z polynomials"),
    ("rep_via_genlk", fnkp_first, fnkp_first_via_genlk, "first set through genLK at t = 0"),
    ("rep_via_laguerre", fnkp_first, fnkp_first_via_laguerre, "first set through Laguerre polynomials in 1/t"),
    ("cor_lk_rep", fnkp_first, fnkp_first_via_lk, "first set through the LK first set at t = 0"),
):
    register(IdentityDescriptor(_id, "representation", "series_exact", _title,
                                _construction(_d, _alt), FNKP_GRID, _finite))

LK_GRID = _grid(p=[F(0), F(1, 2), F(2), F(7, 2)], q=[F(0), F(3, 4)], upsilon=[1, 2, 3], s=range(5))


def _lk_ok(P: ParamSet) -> bool:
    return P.p > -1 and P.q > -1


for _id, _d, _alt, _title in (
    ("rep_genlk_z", gen_lk, gen_lk_via_z, "genLK through Konhauser Z polynomials"),
    ("rep_genlk_laguerre", gen_lk, gen_lk_via_laguerre, "genLK through Laguerre polynomials"),
    ("rep_lk_z", lk_first, lk_first_via_z, "LK first set through Konhauser Z polynomials"),
):
    register(IdentityDescriptor(_id, "representation", "series_exact", _title,
                                _construction(_d, _alt), LK_GRID, _lk_ok))


def _eval_rep_kdf(P: ParamSet, v) -> Evaluation:
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    spec = DoubleSeriesSpec.kampe_de_feriet(
        joint_top=(-s,), first_bottom=(float(p - 2 * s),), second_bottom=delta_array(u, q + 1)
    )
    pre = gamma_ratio(p - s, p - 2 * s) * rgamma(q + 1)
    A = N(s, p, q, u)
    lhs = [A.evaluate(t, w) for t, w in PT_TW]
    rhs = [pre * t**s * kdf_eval(spec, 1.0 / t, (w / u) ** u) for t, w in PT_TW]
    return Evaluation(lhs, rhs, tol=1e-10)


register(IdentityDescriptor(
    "rep_kdf", "representation", "pointwise",
    "first set as a Kampe de Feriet double series",
    _eval_rep_kdf, FNKP_GRID, _finite,
))


# ---------------------------------------------------------------------------
# N <-> genLK and the LK pair


NGENL_PRINTED = (0, 1)
NGENL_INV_PRINTED = (1, 3)


def _exponent_variants(printed: tuple, label: str) -> tuple:
    """t^(p + c1 s + c0) for c0, c1 in -3..3, minus the printed exponent."""
    out = []
    for c1 in range(-3, 4):
        for c0 in range(-3, 4):
            if (c0, c1) == printed:
                continue
            expr = _affine(c1, c0)
            out.append(Variant(f"t^({expr})", f"t-exponent {expr} (printed: {label})", (("c0", c0), ("c1", c1))))
    return tuple(out)


def _knobs(v: Optional[Variant], printed: tuple) -> tuple:
    if v is None:
        return printed
    return v.get("c0"), v.get("c1")


def _eval_rel_ngenl(P: ParamSet, v) -> Evaluation:
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    c0, c1 = _knobs(v, NGENL_PRINTED)
    L = substitute_reciprocal(gen_lk(s, p - 2 * s - 1, q, u), "t")
    rhs = L.times_monomial(p + c1 * s + c0, -q, gamma(p - s))
    return Evaluation(N(s, p, q, u), rhs)


register(IdentityDescriptor(
    "rel_ngenl", "representation", "series_exact",
    "first set in terms of genLK at (1/t, w)",
    _eval_rel_ngenl, FNKP_GRID, _finite,
    variants=_exponent_variants(NGENL_PRINTED, _affine(NGENL_PRINTED[1], NGENL_PRINTED[0])),
    probe=_s_probe,
))


@lru_cache(maxsize=1)
def _ngenl_correction() -> Optional[tuple]:
    """Exponent knobs (c0, c1) found for rel_ngenl at a canonical point."""
    P = ParamSet(p=11, q=0, upsilon=1, s=1)
    r, _ = _ngenl_residual_printed(P)
    if r <= EXACT_TOL:
        return NGENL_PRINTED
    found = variant_search("rel_ngenl", P)
    if found is None:
        return None
    from .core import lookup

    v = lookup("rel_ngenl").variant(found[0])
    return v.get("c0"), v.get("c1")


def _ngenl_residual_printed(P: ParamSet) -> tuple:
    from .core import residual_of

    ev = _eval_rel_ngenl(P, None)
    return residual_of("series_exact", ev), ev


def _eval_rel_ngenl_inv(P: ParamSet, v) -> Evaluation:
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    d0, d1 = _knobs(v, NGENL_INV_PRINTED)
    M = substitute_reciprocal(N(s, p + 2 * s + 1, q, u), "t")
    rhs = M.times_monomial(p + d1 * s + d0, q, rgamma(p + s + 1))
    return Evaluation(gen_lk(s, p, q, u), rhs)


def _predict_ngenl_inv() -> Optional[str]:
    c = _ngenl_correction()
    if c is None:
        return None
    c0, c1 = c
    return f"t^({_affine(c1 + 2, c0 + 1)})"


register(IdentityDescriptor(
    "rel_ngenl_inv", "representation", "series_exact",
    "genLK in terms of the first set at (1/t, w)",
    _eval_rel_ngenl_inv,
    _grid(p=[F(1, 2), F(2), F(7, 2)], q=[F(0), F(3, 4)], upsilon=[1, 2, 3], s=range(5)),
    lambda P: P.p > 0 and P.q > -1,
    variants=_exponent_variants(NGENL_INV_PRINTED, _affine(NGENL_INV_PRINTED[1], NGENL_INV_PRINTED[0])),
    probe=lambda P: [P.replace(s=k) for k in range(5)],
    predicted=_predict_ngenl_inv,
))


def _eval_rel_two_lk(P: ParamSet, v) -> Evaluation:
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    lhs = gen_lk(s, p, q, u).scale(gamma_ratio(s + 1 + p, s + 1))
    rhs = lk_first(s, p, q, u).times_monomial(p, q)
    return Evaluation(lhs, rhs)


register(IdentityDescriptor(
    "rel_two_lk", "representation", "series_exact",
    "genLK and the LK first set differ by t^p w^q and a constant",
    _eval_rel_two_lk, LK_GRID, _lk_ok,
))


def _eval_rel_n_lk_pair(P: ParamSet, v) -> Evaluation:
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    fs = math.factorial(s)
    pl = p - 2 * s - 1
    lhs = [
        N(s, p, q, u),
        fnkp_second(s, p, q, u),
        lk_first(s, pl, q, u),
        lk_second(s, pl, q, u),
    ]
    rhs = [
        substitute_reciprocal(lk_first(s, pl, q, u), "t").times_monomial(s, 0, fs),
        substitute_reciprocal(lk_second(s, pl, q, u), "t").times_monomial(s, 0, fs),
        substitute_reciprocal(N(s, p, q, u), "t").times_monomial(s, 0, 1.0 / fs),
        substitute_reciprocal(fnkp_second(s, p, q, u), "t").times_monomial(s, 0, 1.0 / fs),
    ]
    return Evaluation(lhs, rhs)


register(IdentityDescriptor(
    "rel_n_lk_pair", "representation", "series_exact",
    "both fNKp sets against the LK pair at (1/t, w), and back",
    _eval_rel_n_lk_pair, FNKP_GRID, _finite,
))


# ---------------------------------------------------------------------------
# generating functions

GEN_ORDER = 6
GEN_POINTS = _points(
    {"p": F(3, 2), "q": F(0), "upsilon": 1, "beta": F(1, 2)},
    {"p": F(3), "q": F(3, 4), "upsilon": 2, "beta": F(2)},
    {"p": F(9, 2), "q": F(1, 2), "upsilon": 3, "beta": F(3)},
)
LK_GEN_POINTS = _points(
    {"p": F(1, 2), "q": F(0), "upsilon": 1, "beta": F(1, 2)},
    {"p": F(2), "q": F(3, 4), "upsilon": 2, "beta": F(2)},
    {"p": F(7, 2), "q": F(1, 2), "upsilon": 3, "beta": F(3)},
)


def _gen_ok(P: ParamSet) -> bool:
    return P.p > 0 and P.q > -1 and (P.beta is None or P.beta > 0)


def _delta_poch(P: ParamSet, k: int) -> float:
    out = 1.0
    for d in delta_array(P.upsilon, P.q + 1):
        out *= float(pochhammer(d, k))
    return out


def _w_step(P: ParamSet) -> ExpSeries:
    """(w/u)^u as a monomial."""
    u = P.upsilon
    return mono(float(u) ** (-u), 0, u)


def _x_over_1mx(order: int, c: ExpSeries) -> XSeries:
    """c * x/(1-x)."""
    return XSeries([ExpSeries()] + [c] * order, order)


def _exp_x(order: int, monomial: tuple = (0, 0)) -> XSeries:
    return XSeries.from_scalars([1.0 / math.factorial(k) for k in range(order + 1)], order, monomial)


def _geometric(order: int, beta=1) -> XSeries:
    """(1-x)^-beta."""
    return XSeries.from_scalars([float(pochhammer(beta, k)) / math.factorial(k) for k in range(order + 1)], order)


def _ofu(P: ParamSet, z: XSeries, top_one: bool, order: int) -> XSeries:
    """0F_u(;Delta;z) or 1F_u(1;Delta;z)."""
    coeffs = [
        (1.0 if top_one else 1.0 / math.factorial(k)) / _delta_poch(P, k) for k in range(order + 1)
    ]
    return compose(coeffs, z)


def _oneline(P: ParamSet, z: XSeries, bottom, top_one: bool, order: int) -> XSeries:
    """0F1(;b;z) or 1F1(1;b;z)."""
    coeffs = [
        (1.0 if top_one else 1.0 / math.factorial(k)) / float(pochhammer(bottom, k)) for k in range(order + 1)
    ]
    return compose(coeffs, z)


def _gen_lhs_base(P: ParamSet, weight) -> list:
    """N_n^(p+2n,q)(t,w) * weight(n), n <= order."""
    return [N(n, P.p + 2 * n, P.q, P.upsilon).scale(weight(n)) for n in range(GEN_ORDER + 1)]


@lru_cache(maxsize=64)
def _gen_parts(which: int, P: ParamSet) -> tuple:
    """(LHS coefficients without the x-power scaling, RHS without the t^e factor)."""
    o, p, q = GEN_ORDER, P.p, P.q
    g = rgamma(q + 1)
    if which == 1:
        lhs = _gen_lhs_base(P, lambda n: 1.0 / (math.factorial(n) * float(pochhammer(p, n))))
        z1 = XSeries.x(o, mono(-1.0, -1, 0))
        z2 = XSeries.x(o, _w_step(P).scale(-1.0))
        rhs = _exp_x(o) * _oneline(P, z1, p, False, o) * _ofu(P, z2, False, o)
        return lhs, rhs.scale(g), None
    if which == 2:
        lhs = _gen_lhs_base(P, lambda n: 1.0 / float(pochhammer(p, n)))
        z1 = _x_over_1mx(o, mono(1.0, -1, 0))
        z2 = _x_over_1mx(o, _w_step(P).scale(-1.0))
        rhs = _geometric(o) * _oneline(P, z1, p, True, o) * _ofu(P, z2, True, o)
        joint = _geometric(o) * compose_double(
            lambda m, r: math.comb(m + r, m) / (float(pochhammer(p, m)) * _delta_poch(P, r)),
            _x_over_1mx(o, mono(-1.0, -1, 0)),
            z2,
        )
        return lhs, rhs.scale(g), joint.scale(g)
    if which == 3:
        beta = P.beta
        lhs = _gen_lhs_base(P, lambda n: float(pochhammer(beta, n)) / (math.factorial(n) * float(pochhammer(p, n))))
        z1 = _x_over_1mx(o, mono(-1.0, -1, 0))
        z2 = _x_over_1mx(o, _w_step(P).scale(-1.0))

        def coeff(m: int, r: int) -> float:
            return float(pochhammer(beta, m + r)) / (
                float(pochhammer(p, m)) * _delta_poch(P, r) * math.factorial(m) * math.factorial(r)
            )

        rhs = _geometric(o, beta) * compose_double(coeff, z1, z2)
        return lhs, rhs.scale(g), None
    # which == 4: operator exponential
    lhs = [
        substitute_reciprocal(N(n, p + 2 * n, q, P.upsilon), "t").times_monomial(
            p, q, rgamma(p + n) / math.factorial(n)
        )
        for n in range(o + 1)
    ]
    return lhs, _exp_operator_series(P.upsilon, mono(rgamma(p) * g, p - 1, q), o), None


def _exp_operator_series(u: int, seed: ExpSeries, order: int) -> XSeries:
    """exp(x (1 - D_t^-1 - D_w^-u)) seed; the x^n coefficient is G^n seed / n!."""
    gen = ONE() - INTEG("t") - INTEG("w", u)
    out, power = [], ONE()
    for n in range(order + 1):
        out.append(operator_apply(power, seed).scale(1.0 / math.factorial(n)))
        power = power * gen
    return XSeries(out, order)


GEN_PRINTED = {1: (3, 1), 2: (3, 1), 3: (3, 1), 4: (3, 0)}


JOINT_LABEL = (
    "; right side as the double series sum (m+r)!/(m! r! (p)_m prod(Delta)_r) z1^m z2^r"
    " with z1 = -x/(t(1-x)) (printed: product of 1F1 at +x/(t(1-x)) and 1F_u)"
)


def _gen_variants(which: int) -> tuple:
    k0, e0 = GEN_PRINTED[which]
    out = []
    forms = (False, True) if which == 2 else (False,)
    for joint in forms:
        for k in range(k0 - 3, k0 + 4):
            for e in range(e0 - 3, e0 + 4):
                if (k, e) == (k0, e0) and not joint:
                    continue
                if which == 4:
                    label = f"prefactor t^(p{-e:+d}) and (t^{k} x)^s on the left (printed: t^p, (t^3 x)^s)"
                else:
                    label = f"(x/t^{k})^s on the left, leading t^{e} on the right (printed: (x/t^3)^s, t^1)"
                name = f"k={k},e={e}"
                if joint:
                    name, label = name + ",joint", label + JOINT_LABEL
                out.append(Variant(name, label, (("k", k), ("e", e), ("joint", joint))))
    return tuple(out)


def _gen_eval(which: int) -> callable:
    def ev(P: ParamSet, v) -> Evaluation:
        k, e = (v.get("k"), v.get("e")) if v is not None else GEN_PRINTED[which]
        lhs, rhs, joint = _gen_parts(which, P)
        if v is not None and v.get("joint"):
            rhs = joint
        if which == 4:
            lx = [c.times_monomial(k * n - e, 0) for n, c in enumerate(lhs)]
            rx = list(rhs.coeffs)
        else:
            lx = [c.times_monomial(-k * n, 0) for n, c in enumerate(lhs)]
            rx = [c.times_monomial(e, 0) for c in rhs.coeffs]
        return Evaluation(XSeries(lx, GEN_ORDER), XSeries(rx, GEN_ORDER), tol=1e-9)

    return ev


def _gen_predicted(which: int) -> callable:
    def pred() -> Optional[str]:
        c = _ngenl_correction()
        if c is None:
            return None
        c0, c1 = c
        k = c1 + 2
        e = -c0 if which == 4 else c0 + 1
        name = f"k={k},e={e}"
        if which == 2:
            return name + ",joint"
        return None if (k, e) == GEN_PRINTED[which] else name

    return pred


_GEN_TITLES = {
    1: "exponential generating function with 0F1 and 0F_u factors",
    2: "ordinary generating function with 1F1 and 1F_u factors",
    3: "beta-weighted generating function as an S-series",
    4: "operator-exponential generating function",
}

for _w in (1, 2, 3, 4):
    register(IdentityDescriptor(
        f"genfun_{_w}", "generating_function", "series_exact", _GEN_TITLES[_w],
        _gen_eval(_w), GEN_POINTS, _gen_ok,
        variants=_gen_variants(_w),
        probe=lambda P: [Q for Q in GEN_POINTS()],
        tol=1e-9,
        predicted=_gen_predicted(_w),
    ))


def _eval_genfun_beta(P: ParamSet, v) -> Evaluation:
    o, p, q, u, beta = GEN_ORDER, P.p, P.q, P.upsilon, P.beta
    lhs = [
        N(n, p + 2 * n, q, u).scale(gamma_ratio(beta + n, p + n) / math.factorial(n)) for n in range(o + 1)
    ]
    geo_t = [ExpSeries()] + [mono(-1.0, n - 1, 0) for n in range(1, o + 1)]
    geo_tw = [ExpSeries()] + [mono(-1.0, n, u) for n in range(1, o + 1)]
    z1, z2 = XSeries(geo_t, o), XSeries(geo_tw, o)

    def coeff(m: int, r: int) -> float:
        return gamma(beta + m + r) * rgamma(p + m) * rgamma(q + 1 + u * r) / (math.factorial(m) * math.factorial(r))

    pref = XSeries.from_scalars(
        [float(pochhammer(beta, n)) / math.factorial(n) for n in range(o + 1)], o, (1, 0)
    )
    rhs = pref * compose_double(coeff, z1, z2)
    return Evaluation(XSeries(lhs, o), rhs, tol=1e-9)


register(IdentityDescriptor(
    "genfun_beta", "generating_function", "series_exact",
    "Gamma(beta+s)/Gamma(p+s) weighted generating function",
    _eval_genfun_beta, GEN_POINTS, _gen_ok, tol=1e-9,
))


# the same generating functions for genLK, i.e. before t -> 1/t


@lru_cache(maxsize=64)
def _chain_parts(which: int, P: ParamSet) -> tuple:
    o, p, q, u = GEN_ORDER, P.p, P.q, P.upsilon
    pre = mono(rgamma(p + 1) * rgamma(q + 1), p, q)
    if which == 1:
        lhs = [gen_lk(n, p, q, u).scale(1.0 / math.factorial(n)) for n in range(o + 1)]
        z1 = XSeries.x(o, mono(-1.0, 1, 0))
        z2 = XSeries.x(o, _w_step(P).scale(-1.0))
        rhs = _exp_x(o) * _oneline(P, z1, p + 1, False, o) * _ofu(P, z2, False, o)
    elif which == 2:
        lhs = [gen_lk(n, p, q, u) for n in range(o + 1)]
        z1 = _x_over_1mx(o, mono(-1.0, 1, 0))
        z2 = _x_over_1mx(o, _w_step(P).scale(-1.0))
        rhs = _geometric(o) * compose_double(
            lambda m, r: math.comb(m + r, m) / (float(pochhammer(p + 1, m)) * _delta_poch(P, r)),
            z1,
            z2,
        )
    elif which == 3:
        beta = P.beta
        lhs = [gen_lk(n, p, q, u).scale(float(pochhammer(beta, n)) / math.factorial(n)) for n in range(o + 1)]
        z1 = _x_over_1mx(o, mono(-1.0, 1, 0))
        z2 = _x_over_1mx(o, _w_step(P).scale(-1.0))

        def coeff(m: int, r: int) -> float:
            return float(pochhammer(beta, m + r)) / (
                float(pochhammer(p + 1, m)) * _delta_poch(P, r) * math.factorial(m) * math.factorial(r)
            )

        rhs = _geometric(o, beta) * compose_double(coeff, z1, z2)
    else:
        lhs = [gen_lk(n, p, q, u).scale(1.0 / math.factorial(n)) for n in range(o + 1)]
        return XSeries(lhs, o), _exp_operator_series(u, pre, o)
    return XSeries(lhs, o), rhs.scale(pre)


def _chain_eval(which: int) -> callable:
    def ev(P: ParamSet, v) -> Evaluation:
        lhs, rhs = _chain_parts(which, P)
        return Evaluation(lhs, rhs, tol=1e-9)

    return ev


for _w in (1, 2, 3, 4):
    register(IdentityDescriptor(
        f"chain_genlk_{_w}", "generating_function", "series_exact",
        f"genLK counterpart of genfun_{_w} (substitution-chain source)",
        _chain_eval(_w), LK_GEN_POINTS, _gen_ok, tol=1e-9,
    ))


# ---------------------------------------------------------------------------
# recurrences and PDEs

REC_GRID = FNKP_GRID


def _rec(fn) -> callable:
    def ev(P: ParamSet, v) -> Evaluation:
        lhs, rhs = fn(P.s, P.p, P.q, P.upsilon, P)
        return Evaluation(lhs, rhs)

    return ev


def _rec1(s, p, q, u, P):
    A = N(s, p, q, u)
    return Dt(A).times_monomial(1, 0), (A + N(s - 1, p - 1, q, u)).scale(s)


def _rec2(s, p, q, u, P):
    lhs = N(s, p, q, u) + N(s - 2, p - 2, q, u).times_monomial(1, 0, s - 1)
    B = N(s - 1, p - 1, q, u)
    rhs = (
        B.times_monomial(1, 0, float(p - 2 * s))
        - B
        - N(s - 1, p - 2, q + u, u).times_monomial(1, u, float(p - s - 1))
    )
    return lhs, rhs


def _rec3(s, p, q, u, P):
    rhs = (
        N(s - 1, p - 2, q + u, u).times_monomial(0, u, float(s * (s + 1 - p)))
        - N(s - 2, p - 2, q, u).scale(s * (s - 1))
        + N(s - 1, p - 1, q, u).scale(float(s * (p - 2 * s)))
    )
    return Dt(N(s, p, q, u)), rhs


def _rec4(s, p, q, u, P):
    m = P.m
    lhs = Dt(N(s, p, q, u).times_monomial(s - p + m, 0), m)
    rhs = N(s, p - m, q, u).times_monomial(s - p, 0, (-1) ** m * gamma_ratio(p - s, p - m - s))
    return lhs, rhs


def _rec5(s, p, q, u, P):
    m = P.m
    return Dw(N(s, p, q, u).times_monomial(0, q), m), N(s, p, q - m, u).times_monomial(0, q - m)


def _rec6(s, p, q, u, P):
    from ..exp_series import antidifferentiate

    m = P.m
    lhs = antidifferentiate(N(s, p, q, u).times_monomial(s - p - m, 0), "t", m)
    rhs = N(s, p + m, q, u).times_monomial(s - p, 0, (-1) ** m * gamma_ratio(p - s, p - s + m))
    return lhs, rhs


def _rec7(s, p, q, u, P):
    from ..exp_series import antidifferentiate

    m = P.m
    lhs = antidifferentiate(N(s, p, q, u).times_monomial(0, q), "w", m)
    return lhs, N(s, p, q + m, u).times_monomial(0, q + m)


def _rec8(s, p, q, u, P):
    lhs = Dw(Dw(N(s, p, q, u)).times_monomial(0, q + 1), u)
    rhs = N(s - 1, p - 2, q, u).times_monomial(1, q, -s * u * float(p - s - 1))
    return lhs, rhs


def _rec9(s, p, q, u, P):
    A = N(s, p, q, u)
    inner = Dw(A).times_monomial(0, q + 1)
    rhs = inner - (A + N(s - 1, p - 1, q, u)).times_monomial(0, q, s * u)
    return Dw(inner, u), rhs


def _rec10(s, p, q, u, P):
    A = N(s, p, q, u)
    rhs = (A + N(s - 1, p - 1, q, u) - N(s - 1, p - 2, q, u).times_monomial(1, 0, float(p - s - 1))).scale(s * u)
    return Dw(A).times_monomial(0, 1), rhs


def _rec11(s, p, q, u, P):
    rhs = N(s - 1, p - 2, q + u, u).times_monomial(1, u - 1, -s * u * float(p - s - 1))
    return Dw(N(s, p, q, u)), rhs


def _rec12(s, p, q, u, P):
    lhs = (N(s - 1, p - 2, q, u) - N(s - 1, p - 2, q + u, u).times_monomial(0, u)).times_monomial(
        1, 0, float(p - s - 1)
    )
    return lhs, N(s, p, q, u) + N(s - 1, p - 1, q, u)


def _rec4_ok(P: ParamSet) -> bool:
    return _finite(P) and P.m is not None and 0 <= P.m <= P.p - 2 * P.s - 1


def _rec5_ok(P: ParamSet) -> bool:
    return _finite(P) and P.q.denominator == 1 and P.m is not None and 0 <= P.m <= P.q


def _m_ok(P: ParamSet) -> bool:
    return _finite(P) and P.m is not None and P.m >= 0


_REC_TABLE = (
    (1, _rec1, "t D_t raises by the (s-1, p-1) neighbour", REC_GRID, _finite),
    (2, _rec2, "three-term relation in s", REC_GRID, lambda P: _finite(P) and P.s >= 2),
    (3, _rec3, "D_t through lower-degree neighbours", REC_GRID, _finite),
    (4, _rec4, "D_t^m of t^(s-p+m) N lowers p by m",
     _grid(p=[F(11), F(27, 2)], q=[F(0), F(3, 4)], upsilon=[1, 2, 3], m=[0, 1, 2, 3], s=range(5)), _rec4_ok),
    (5, _rec5, "D_w^m of w^q N lowers q by m",
     _grid(p=[F(11), F(27, 2)], q=[F(2), F(3)], upsilon=[1, 2, 3], m=[0, 1, 2], s=range(5)), _rec5_ok),
    (6, _rec6, "D_t^-m of t^(s-p-m) N raises p by m",
     _grid(p=[F(11), F(27, 2)], q=[F(0), F(3, 4)], upsilon=[1, 2, 3], m=[1, 2, 3], s=range(5)), _m_ok),
    (7, _rec7, "D_w^-m of w^q N raises q by m",
     _grid(p=[F(11), F(27, 2)], q=[F(0), F(3, 4)], upsilon=[1, 2, 3], m=[1, 2, 3], s=range(5)), _m_ok),
    (8, _rec8, "D_w^u(w^(q+1) D_w N) lowers s", REC_GRID, _finite),
    (9, _rec9, "D_w^u(w^(q+1) D_w N) through N itself", REC_GRID, _finite),
    (10, _rec10, "w D_w N through neighbours", REC_GRID, _finite),
    (11, _rec11, "D_w N through the (s-1, p-2, q+u) neighbour", REC_GRID, _finite),
    (12, _rec12, "relation between p-2 neighbours", REC_GRID, lambda P: _finite(P) and P.s >= 1),
)

for _i, _fn, _title, _g, _c in _REC_TABLE:
    register(IdentityDescriptor(f"rec_{_i}", "recurrence", "series_exact", _title, _rec(_fn), _g, _c))


def _wq_op(A: ExpSeries, q, u: int) -> ExpSeries:
    """w^-q D_w^u w^(q+1) D_w A."""
    return Dw(Dw(A).times_monomial(0, q + 1), u).times_monomial(0, -q)


def _eval_pde_2(P: ParamSet, v) -> Evaluation:
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    A = N(s, p, q, u)
    return _zero_check(Dw(A).times_monomial(0, 1), Dt(A).times_monomial(1, 0, -u), _wq_op(A, q, u).scale(-1.0))


def _eval_pde_3(P: ParamSet, v) -> Evaluation:
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    A = N(s, p, q, u)
    g = A.scale(float(p - s - 1)) - Dt(A).times_monomial(1, 0)
    h = g.scale(s) - Dt(g).times_monomial(1, 0)
    return _zero_check(h.times_monomial(1, 0, u), _wq_op(A, q, u).scale(-1.0))


def _eval_pde_second_set(P: ParamSet, v) -> Evaluation:
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    B = ONE() - D("w")
    Bu = B ** u
    lhs = Dt(operator_apply(Bu - ONE(), fnkp_second(s, p, q, u)))
    rhs = operator_apply(Bu, fnkp_second(s - 1, p - 2, q, u)).scale(float(s * (p - s - 1)))
    return Evaluation(lhs, rhs)


register(IdentityDescriptor("pde_2", "pde", "series_exact", "first-order-in-t PDE", _eval_pde_2, REC_GRID, _finite))
register(IdentityDescriptor("pde_3", "pde", "series_exact", "second-order-in-t PDE", _eval_pde_3, REC_GRID, _finite))
register(IdentityDescriptor(
    "pde_second_set", "pde", "series_exact", "operator relation for the second set",
    _eval_pde_second_set, REC_GRID, _finite,
))


# ---------------------------------------------------------------------------
# operational representations


def _w_seed(P: ParamSet) -> ExpSeries:
    return mono(rgamma(P.q + 1), 0, P.q)


def _t_one_minus(P: ParamSet, j: int) -> OperatorExpr:
    """(t (1 - D_w^-u))^j."""
    return MUL("t", j) * (ONE() - INTEG("w", P.upsilon)) ** j


def _apply_poly(P: ParamSet, coeffs: dict, prefactor: float) -> ExpSeries:
    """w^-q * sum_j c_j (t(1-D_w^-u))^j {w^q/Gamma(q+1)}."""
    op = OperatorExpr.identity(0.0)
    for j, c in coeffs.items():
        op = op + _t_one_minus(P, j) * c
    return operator_apply(op, _w_seed(P)).times_monomial(0, -P.q, prefactor)


def _eval_op_rep_main(P: ParamSet, v) -> Evaluation:
    s, p = P.s, P.p
    coeffs = {
        s - k: float(pochhammer(-s, k)) / (math.factorial(k) * float(pochhammer(p - 2 * s, k)))
        for k in range(s + 1)
    }
    rhs = _apply_poly(P, coeffs, gamma_ratio(p - s, p - 2 * s))
    return Evaluation(N(s, p, P.q, P.upsilon), rhs)


def _eval_op_rep_n(P: ParamSet, v) -> Evaluation:
    coeffs = {int(a): c for (a, _b), c in finite_n(P.s, P.p).terms.items()}
    return Evaluation(N(P.s, P.p, P.q, P.upsilon), _apply_poly(P, coeffs, 1.0))


def _eval_op_rep_lag(P: ParamSet, v) -> Evaluation:
    s = P.s
    coeffs = {s - int(a): c for (a, _b), c in laguerre(s, P.p - 2 * s - 1).terms.items()}
    return Evaluation(N(s, P.p, P.q, P.upsilon), _apply_poly(P, coeffs, math.factorial(s)))


def _eval_op_rep_shift(P: ParamSet, v) -> Evaluation:
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    if v is None:
        A = MUL("t", -2) * INTEG("t")
    else:
        A = INTEG("t") * MUL("t", -2)
    op = (ONE() + A - INTEG("w", u)) ** s
    seed = mono(rgamma(p - 2 * s) * rgamma(q + 1), -(p - 2 * s - 1), q)
    rhs = operator_apply(op, seed).times_monomial(p - s - 1, -q, gamma(p - s))
    return Evaluation(N(s, p, q, u), rhs)


register(IdentityDescriptor(
    "op_rep_main", "representation", "series_exact", "operational form through 1F1 in t(1 - D_w^-u)",
    _eval_op_rep_main, FNKP_GRID, _finite,
))
register(IdentityDescriptor(
    "op_rep_n", "representation", "series_exact", "operational form through finite N polynomials",
    _eval_op_rep_n, FNKP_GRID, _finite,
))
register(IdentityDescriptor(
    "op_rep_lag", "representation", "series_exact", "operational form through Laguerre polynomials",
    _eval_op_rep_lag, FNKP_GRID, _finite,
))
register(IdentityDescriptor(
    "op_rep_shift", "representation", "series_exact", "operational form as a power of 1 + A - D_w^-u",
    _eval_op_rep_shift, FNKP_GRID, _finite,
    variants=(Variant("multiply_first", "A = D_t^-1 t^-2, multiplication applied first (printed: t^-2 D_t^-1)"),),
    probe=_s_probe,
))


# ---------------------------------------------------------------------------
# Laplace transforms

LAP_AY = ((2.0, 1.0), (3.0, 1.5), (2.5, 0.8), (4.0, 0.5), (5.0, 2.0))
LAP_T0 = 2.0


def _lap_grid() -> list:
    out = []
    for p in (F(11), F(27, 2)):
        for q in (F(0), F(3, 4)):
            for u in (1, 2):
                for s in range(4):
                    for a, y in LAP_AY:
                        out.append(ParamSet(p=p, q=q, upsilon=u, s=s, a=a, y=y))
    return out


def _lap_ok(P: ParamSet) -> bool:
    return _finite(P) and P.a is not None and P.a > 0 and P.y is not None and abs(P.y / P.a) ** P.upsilon <= 0.5


def _lap_lhs(P: ParamSet) -> tuple:
    g = N(P.s, P.p, P.q, P.upsilon).scale_variable("w", P.y)
    series = laplace_termwise(g.times_monomial(0, P.q), "w", P.a)
    rule = gauss_laguerre_rule(64, float(P.q))
    x = np.asarray(rule.nodes) / P.a
    quad = float(np.dot(rule.weights, evaluate_array(g, LAP_T0, x))) * P.a ** (-float(P.q) - 1)
    return series, (series.evaluate(LAP_T0, 1.0), quad)


def _lap_r(P: ParamSet) -> float:
    u = P.upsilon
    return (P.a**u - P.y**u) / P.a**u


def _eval_laplace_1d(P: ParamSet, v) -> Evaluation:
    s, p, q = P.s, P.p, P.q
    lhs, oracle = _lap_lhs(P)
    r = _lap_r(P)
    pre = gamma_ratio(p - s, p - 2 * s) * P.a ** (-float(q) - 1)
    terms = {
        (s - k, 0): pre * float(pochhammer(-s, k)) / (math.factorial(k) * float(pochhammer(p - 2 * s, k))) * r ** (s - k)
        for k in range(s + 1)
    }
    return Evaluation(lhs, ExpSeries(terms), oracle=oracle, tol=1e-10)


def _eval_laplace_1d_n(P: ParamSet, v) -> Evaluation:
    lhs, oracle = _lap_lhs(P)
    rhs = finite_n(P.s, P.p).scale_variable("t", _lap_r(P)).scale(P.a ** (-float(P.q) - 1))
    return Evaluation(lhs, rhs, oracle=oracle, tol=1e-10)


def _eval_laplace_1d_lag(P: ParamSet, v) -> Evaluation:
    s = P.s
    lhs, oracle = _lap_lhs(P)
    L = substitute_reciprocal(laguerre(s, P.p - 2 * s - 1), "t").times_monomial(s, 0)
    rhs = L.scale_variable("t", _lap_r(P)).scale(math.factorial(s) * P.a ** (-float(P.q) - 1))
    return Evaluation(lhs, rhs, oracle=oracle, tol=1e-10)


for _id, _fn, _title in (
    ("laplace_1d", _eval_laplace_1d, "Laplace transform in w as a 1F1 in 1/(t r)"),
    ("laplace_1d_n", _eval_laplace_1d_n, "Laplace transform in w through finite N"),
    ("laplace_1d_lag", _eval_laplace_1d_lag, "Laplace transform in w through Laguerre"),
):
    register(IdentityDescriptor(_id, "transform", "series_exact", _title, _fn, _lap_grid, _lap_ok, tol=1e-10))

LAP2_PTS = ((2.0, 2.0, 1.0, 1.0), (3.0, 2.5, 0.7, 1.2), (2.5, 4.0, 1.5, 2.0), (4.0, 3.0, 0.5, 0.9), (5.0, 2.0, 2.0, 0.6))


def _lap2_grid() -> list:
    out = []
    for p in (F(11), F(27, 2)):
        for q in (F(0), F(3, 4)):
            for u in (1, 2):
                for s in range(4):
                    for a, b, y1, y2 in LAP2_PTS:
                        out.append(ParamSet(p=p, q=q, upsilon=u, s=s, a=a, b=b, y1=y1, y2=y2))
    return out


def _lap2_ok(P: ParamSet) -> bool:
    return (
        _finite(P)
        and None not in (P.a, P.b, P.y1, P.y2)
        and P.a >= 2
        and P.b >= 2
        and abs(P.y2 / P.b) <= 0.5
        and P.y1 > 0
    )


def _eval_laplace_2d(P: ParamSet, v) -> Evaluation:
    s, p, q, u = P.s, P.p, P.q, P.upsilon
    f = substitute_reciprocal(N(s, p, q, u), "t").scale_variable("t", P.y1).scale_variable("w", P.y2)
    f = f.times_monomial(p - s - 1, q)
    image = laplace_termwise(laplace_termwise(f, "t", P.a), "w", P.b)
    lhs = image.evaluate(1.0, 1.0)
    # the transformed terms merge into one constant, so measure them before merging
    f_abs = ExpSeries({k: abs(c) for k, c in f.items()})
    magnitude = laplace_termwise(laplace_termwise(f_abs, "t", P.a), "w", P.b).evaluate(1.0, 1.0)
    rhs = (
        gamma(p - s)
        * P.a ** (-float(p - s))
        * P.b ** (-float(q) - 1)
        * (P.a / P.y1 * (1 - P.y2**u / P.b**u) - 1) ** s
    )
    at = float(p - 2 * s - 1)
    h = f.times_monomial(-(p - 2 * s - 1), -q)
    rt, rw = gauss_laguerre_rule(64, at), gauss_laguerre_rule(64, float(q))
    T = np.asarray(rt.nodes)[:, None] / P.a
    W = np.asarray(rw.nodes)[None, :] / P.b
    quad = float(np.asarray(rt.weights) @ evaluate_array(h, T, W) @ np.asarray(rw.weights))
    quad *= P.a ** (-at - 1) * P.b ** (-float(q) - 1)
    # a, y1, y2 may make the closed form vanish; compare against the term magnitude
    return Evaluation(lhs, rhs, scale=magnitude, oracle=(lhs, quad), tol=1e-10)


register(IdentityDescriptor(
    "laplace_2d", "transform", "scalar", "2D Laplace transform of t^(p-s-1) w^q N(1/(y1 t), y2 w)",
    _eval_laplace_2d, _lap2_grid, _lap2_ok, tol=1e-10,
))


# ---------------------------------------------------------------------------
# fractional calculus

FRAC_T0, FRAC_DW, FRAC_DT = 2.0, 0.7, 1.3


def _quad_alg(f, lo_exp: float, tau: float) -> float:
    """int_0^1 u^lo_exp (1-u)^(tau-1) f(u) du via QAWS.

    QUADPACK flags roundoff near the requested 1e-12; the oracle comparison
    itself decides whether the value is good enough.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spi.IntegrationWarning)
        val, _ = spi.quad(f, 0.0, 1.0, weight="alg", wvar=(lo_exp, tau - 1.0), epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def _rl_numeric(series: ExpSeries, var: str, tau, point: tuple) -> float:
    """Riemann-Liouville integral of order tau in ``var`` by convolution quadrature.

    I^tau f(x) = (x-b)^tau / Gamma(tau) int_0^1 (1-u)^(tau-1) f(b + (x-b)u) du,
    with the algebraic endpoint behaviour handed to QUADPACK's QAWS.
    """
    i = 0 if var == "t" else 1
    base = series.shifts()[i]
    x0 = point[i] - base
    items = series.items()
    emin = min(float(k[i]) for k, _ in items)
    other = [point[1 - i] - series.shifts()[1 - i]]
    coef = []
    for k, c in items:
        e_own, e_other = float(k[i]), float(k[1 - i])
        coef.append((c * other[0] ** e_other * x0**e_own, e_own - emin))

    def h(uu: float) -> float:
        return math.fsum(c * uu**d for c, d in coef)

    tau = float(tau)
    val = _quad_alg(h, emin, tau)
    return val * x0**tau / gamma(tau)


def _rl_numeric_2d(series: ExpSeries, tau_t, tau_w, point: tuple) -> float:
    """I^tau_w I^tau_t by nested convolution quadrature."""
    at, aw = series.shifts()
    t0, w0 = point
    xt, xw = t0 - at, w0 - aw
    items = series.items()
    et_min = min(float(k[0]) for k, _ in items)
    ew_min = min(float(k[1]) for k, _ in items)
    coef = [(c * xt ** float(k[0]) * xw ** float(k[1]), float(k[0]) - et_min, float(k[1]) - ew_min) for k, c in items]
    tt, tw = float(tau_t), float(tau_w)

    def inner(ut: float) -> float:
        def g(uw: float) -> float:
            return math.fsum(c * ut**dt * uw**dw for c, dt, dw in coef)

        return _quad_alg(g, ew_min, tw)

    val = _quad_alg(inner, et_min, tt)
    return val * xt**tt * xw**tw / (gamma(tt) * gamma(tw))


def _frac_series(P: ParamSet, q) -> ExpSeries:
    g = N(P.s, P.p, q, P.upsilon).scale_variable("w", P.y).times_monomial(0, q)
    return g.with_shifts(0.0, P.b)


def _frac_point(P: ParamSet) -> tuple:
    return FRAC_T0, P.b + FRAC_DW


def _eval_frac_deriv(P: ParamSet, v) -> Evaluation:
    f = _frac_series(P, P.q)
    lhs = fractional_shift(f, "w", P.tau, "derivative", base=P.b)
    rhs = _frac_series(P, P.q - P.tau)
    pt = _frac_point(P)
    oracle = (f.evaluate(*pt), _rl_numeric(rhs, "w", P.tau, pt))
    return Evaluation(lhs, rhs, oracle=oracle)


def _eval_frac_int(P: ParamSet, v) -> Evaluation:
    f = _frac_series(P, P.q)
    lhs = fractional_shift(f, "w", P.tau, "integral", base=P.b)
    rhs = _frac_series(P, P.q + P.tau)
    pt = _frac_point(P)
    oracle = (rhs.evaluate(*pt), _rl_numeric(f, "w", P.tau, pt))
    return Evaluation(lhs, rhs, oracle=oracle)


FRAC_GRID = _grid(
    p=[F(11), F(27, 2)], q=[F(0), F(3, 4)], upsilon=[1, 2], tau=[F(1, 2), F(3, 2)], b=[0.5], y=[0.8], s=range(4)
)
register(IdentityDescriptor(
    "frac_deriv", "fractional", "series_exact", "Riemann-Liouville derivative in w lowers q",
    _eval_frac_deriv, FRAC_GRID, lambda P: _finite(P) and P.tau is not None and P.q + 1 > P.tau,
))
register(IdentityDescriptor(
    "frac_int", "fractional", "series_exact", "Riemann-Liouville integral in w raises q",
    _eval_frac_int, FRAC_GRID, lambda P: _finite(P) and P.tau is not None and P.tau > 0,
))


def _frac2_series(P: ParamSet, p, q, coeff: float = 1.0) -> ExpSeries:
    f = substitute_reciprocal(N(P.s, p, q, P.upsilon), "t").scale_variable("t", P.y1).scale_variable("w", P.y2)
    return f.times_monomial(p - P.s - 1, q, coeff).with_shifts(P.a, P.b)


def _frac2_point(P: ParamSet) -> tuple:
    return P.a + FRAC_DT, P.b + FRAC_DW


def _eval_frac_2d(direction: str) -> callable:
    sign = -1 if direction == "derivative" else 1

    def ev(P: ParamSet, v) -> Evaluation:
        p, q, s = P.p, P.q, P.s
        f = _frac2_series(P, p, q)
        lhs = fractional_shift(f, "t", P.mu, direction, base=P.a)
        lhs = fractional_shift(lhs, "w", P.lam, direction, base=P.b)
        p2, q2 = p + sign * P.mu, q + sign * P.lam
        rhs = _frac2_series(P, p2, q2, gamma_ratio(p - s, p2 - s))
        pt = _frac2_point(P)
        if direction == "derivative":
            oracle = (f.evaluate(*pt), _rl_numeric_2d(rhs, P.mu, P.lam, pt))
        else:
            oracle = (rhs.evaluate(*pt), _rl_numeric_2d(f, P.mu, P.lam, pt))
        return Evaluation(lhs, rhs, oracle=oracle)

    return ev


FRAC2_GRID = _grid(
    p=[F(11), F(27, 2)], q=[F(0), F(3, 4)], upsilon=[1, 2], mu=[F(1, 2), F(3, 2)], lam=[F(1, 2)],
    a=[0.3], b=[0.5], y1=[0.9], y2=[0.8], s=range(4),
)
register(IdentityDescriptor(
    "frac_2d_deriv", "fractional", "series_exact", "double fractional derivative shifts both parameters down",
    _eval_frac_2d("derivative"), FRAC2_GRID,
    lambda P: _finite(P) and P.mu is not None and P.p > P.mu + 2 * P.s + 1 and P.q + 1 > P.lam,
))
register(IdentityDescriptor(
    "frac_2d_int", "fractional", "series_exact", "double fractional integral shifts both parameters up",
    _eval_frac_2d("integral"), FRAC2_GRID,
    lambda P: _finite(P) and P.mu is not None and P.mu > 0 and P.lam > 0,
))


# ---------------------------------------------------------------------------
# Fourier pair

FOURIER_TOL = 1e-9


def _cpoch(z, k: int):
    out = np.ones_like(z)
    for j in range(k):
        out = out * (z + j)
    return out


def _psi1(x1, x2, P: ParamSet, powers: bool):
    s, u = P.s, P.upsilon
    p1, p2, q1, q2 = (float(v) for v in (P.p1, P.p2, P.q1, P.q2))
    alpha, beta = p1 + p2 + 1, q1 + q2 - 1
    out = 0
    for k in range(s + 1):
        for m in range(s - k + 1):
            c = float(pochhammer(-s, k + m)) / (
                math.factorial(k) * math.factorial(m) * float(pochhammer(alpha - 2 * s, k)) * float(pochhammer(beta + 1, u * m))
            )
            if powers:
                c *= 2.0 ** (k + u * m)
            out = out + c * _cpoch(p1 - s + 1j * x1, k) * _cpoch(q1 - 1j * x2, u * m)
    return out


def _psi2(x1, x2, P: ParamSet):
    n, u = P.n, P.upsilon
    p2, q2 = float(P.p2), float(P.q2)
    alpha = float(P.p1) + p2 + 1
    beta = float(P.q1) + q2 - 1
    hyp = 0
    for j in range(n + 1):
        hyp = hyp + float(pochhammer(-n, j)) * 2.0**j / (float(pochhammer(alpha - 2 * n, j)) * math.factorial(j)) * _cpoch(
            p2 - n + 1j * x1, j
        )
    wpart = 0
    for m in range(n + 1):
        for r in range(m + 1):
            inner = math.fsum((-1) ** l * math.comb(r, l) * float(pochhammer((l + 1 + beta) / u, m)) for l in range(r + 1))
            wpart = wpart + inner * 2.0**r / (math.factorial(m) * math.factorial(r)) * _cpoch(q2 - 1j * x2, r)
    return hyp * wpart


def _fourier_integrand(P: ParamSet):
    p1, p2, q1, q2 = (float(v) for v in (P.p1, P.p2, P.q1, P.q2))
    s, n = P.s, P.n

    def f(x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        varpi = (
            complex_gamma_array(p1 + 1j * x1)
            * complex_gamma_array(p2 - 1j * x1)
            * complex_gamma_array(q1 - 1j * x2)
            * complex_gamma_array(q2 + 1j * x2)
        )
        pre1 = 2.0 ** (p1 + q1 - s) / _cpoch(1 - p1 - 1j * x1, s)
        ups2 = 2.0 ** (p2 + q2 - n) / _cpoch(1 - p2 - 1j * x1, n) * _psi2(x1, x2, P)
        base = varpi * pre1 * np.conj(ups2)
        return np.stack([base * _psi1(x1, x2, P, False), base * _psi1(x1, x2, P, True)])

    return f


@lru_cache(maxsize=256)
def _fourier_integrals(P: ParamSet) -> tuple:
    """(without 2-powers, with 2-powers), both with the leading sign +1."""
    box = fourier_box(P, FOURIER_TOL)
    res = plane_integrate(_fourier_integrand(P), box, FOURIER_TOL)
    return res.values


def _fourier_diag(P: ParamSet, s: int) -> float:
    a = float(P.p1 + P.p2)
    return (
        (2 * math.pi) ** 2
        * math.factorial(s)
        * gamma(a + 1 - 2 * s) ** 2
        * gamma(float(P.q1 + P.q2))
        / ((a - 2 * s) * gamma(a + 1 - s))
    )


FOURIER_VARIANTS = (
    Variant("restore_powers", "2^k and 2^(u m) restored in the first sum, minus sign kept",
            (("powers", True), ("sign", -1))),
    Variant("drop_sign", "leading minus sign dropped, 2-powers still absent", (("powers", False), ("sign", 1))),
    Variant("both", "2^k, 2^(u m) restored and leading minus sign dropped (printed: -, no 2-powers)",
            (("powers", True), ("sign", 1))),
)
# The pairing cannot separate "drop_sign" from "both" on the diagonal; the
# image check below can, so the pairing only carries the variant it confirms.
FOURIER_PAIR_VARIANTS = FOURIER_VARIANTS[2:]

IMAGE_XI = ((0.0, 0.0), (0.7, -1.3), (-2.0, 0.5), (1.5, 2.0))
_T_NODES = np.linspace(-6.0, 60.0, 40001)
_W_NODES = np.linspace(-100.0, 6.5, 60001)


def _image_numeric(series: ExpSeries, p1: float, q1: float) -> np.ndarray:
    """Transform of exp(-p1 t + q1 w - (e^w + e^-t)/2) series(e^t, e^w), termwise trapezoid."""
    out = np.zeros(len(IMAGE_XI), complex)
    for (a, b), c in series.items():
        for i, (x1, x2) in enumerate(IMAGE_XI):
            ft = np.trapezoid(np.exp((float(a) - p1 - 1j * x1) * _T_NODES - np.exp(-_T_NODES) / 2), _T_NODES)
            fw = np.trapezoid(np.exp((q1 + float(b) - 1j * x2) * _W_NODES - np.exp(_W_NODES) / 2), _W_NODES)
            out[i] += c * ft * fw
    return out


def _image_gamma(series: ExpSeries, p1: float, q1: float) -> np.ndarray:
    out = np.zeros(len(IMAGE_XI), complex)
    for (a, b), c in series.items():
        for i, (x1, x2) in enumerate(IMAGE_XI):
            x, y = p1 - float(a) + 1j * x1, q1 + float(b) - 1j * x2
            out[i] += c * sps.gamma(x) * 2**x * sps.gamma(y) * 2**y
    return out


def _image_prefactor(p: float, q: float, s: int, x1, x2, sign: int):
    return (
        sign * (-1) ** s * 2.0 ** (p + q - s) * 2.0 ** (1j * (x1 - x2))
        / _cpoch(1 - p - 1j * x1, s) * complex_gamma_array(p + 1j * x1) * complex_gamma_array(q - 1j * x2)
    )


@lru_cache(maxsize=128)
def _image_sides(which: int, P: ParamSet) -> tuple:
    build = fnkp_first if which == 1 else fnkp_second
    series = build(P.s, P.p1 + P.p2 + 1, P.q1 + P.q2 - 1, P.upsilon)
    p1, q1 = float(P.p1), float(P.q1)
    return _image_numeric(series, p1, q1), _image_gamma(series, p1, q1)


def _eval_fourier_image(which: int):
    def ev(P: ParamSet, v) -> Evaluation:
        p1, q1 = float(P.p1), float(P.q1)
        alpha, beta = float(P.p1 + P.p2 + 1), float(P.q1 + P.q2 - 1)
        x1 = np.array([x for x, _ in IMAGE_XI])
        x2 = np.array([y for _, y in IMAGE_XI])
        s = P.s
        if which == 1:
            powers = v.get("powers") if v is not None else False
            sign = v.get("sign") if v is not None else -1
            closed = (
                gamma(alpha - s) / (gamma(beta + 1) * gamma(alpha - 2 * s))
                * _image_prefactor(p1, q1, s, x1, x2, sign)
                * _psi1(x1, x2, P, powers)
            )
        else:
            Q = P.replace(p1=P.p2, p2=P.p1, q1=P.q2, q2=P.q1, n=s)
            closed = gamma(alpha - s) / gamma(alpha - 2 * s) * _image_prefactor(p1, q1, s, x1, x2, 1) * _psi2(x1, x2, Q)
        numeric, reference = _image_sides(which, P)
        return Evaluation(closed, numeric, oracle=(reference, numeric), tol=1e-10)

    return ev


def _image_ok(P: ParamSet) -> bool:
    if None in (P.p1, P.p2, P.q1, P.q2):
        return False
    return P.p1 > P.s and P.p2 > 0 and P.q1 > 0 and P.q2 > 0 and 2 * P.s < P.p1 + P.p2


IMAGE_GRID = _grid(
    p1=[F(6), F(13, 2)], p2=[F(6)], q1=[F(1), F(1, 2)], q2=[F(1)], upsilon=[1, 2], s=range(3),
)

register(IdentityDescriptor(
    "fourier_image_1", "fourier", "pointwise", "Fourier image of the weighted first set in closed form",
    _eval_fourier_image(1), IMAGE_GRID, _image_ok, variants=FOURIER_VARIANTS, tol=1e-10,
))
register(IdentityDescriptor(
    "fourier_image_2", "fourier", "pointwise", "Fourier image of the weighted second set in closed form",
    _eval_fourier_image(2), IMAGE_GRID, _image_ok, tol=1e-10,
))


def _eval_fourier_biorth(P: ParamSet, v) -> Evaluation:
    powers = v.get("powers") if v is not None else False
    sign = v.get("sign") if v is not None else -1
    plain, with_powers = _fourier_integrals(P)
    lhs = sign * (with_powers if powers else plain)
    ds, dn = _fourier_diag(P, P.s), _fourier_diag(P, P.n)
    diagonal = P.s == P.n
    return Evaluation(lhs, ds if diagonal else 0.0, scale=min(ds, dn), tol=1e-5 if diagonal else 1e-6)


def _fourier_ok(P: ParamSet) -> bool:
    if None in (P.p1, P.p2, P.q1, P.q2):
        return False
    S = max(P.s, P.n)
    return P.p1 > S and P.p2 > S and P.q1 > 0 and P.q2 > 0 and 2 * S < P.p1 + P.p2


def _fourier_grid() -> list:
    out = []
    for p in (F(6), F(13, 2)):
        for u in (1, 2):
            for s in range(3):
                for n in range(3):
                    out.append(ParamSet(p1=p, p2=p, q1=1, q2=1, upsilon=u, s=s, n=n))
    return out


register(IdentityDescriptor(
    "fourier_biorth", "fourier", "scalar", "Fourier images biorthogonal against the Gamma weight",
    _eval_fourier_biorth, _fourier_grid, _fourier_ok,
    variants=FOURIER_PAIR_VARIANTS,
    probe=lambda P: [Q for Q in _fourier_grid() if Q.p1 == P.p1 and Q.upsilon == P.upsilon and Q.s == Q.n][:3]
    + [Q for Q in _fourier_grid() if Q.p1 == P.p1 and Q.upsilon == P.upsilon and Q.s != Q.n][:2],
))

XI = np.linspace(-6.0, 6.0, 13)


def _eval_fourier_weight_pos(P: ParamSet, v) -> Evaluation:
    p, q = float(P.p1), float(P.q1)
    x1, x2 = np.meshgrid(XI, XI)
    varpi = (
        complex_gamma_array(p + 1j * x1)
        * complex_gamma_array(p - 1j * x1)
        * complex_gamma_array(q - 1j * x2)
        * complex_gamma_array(q + 1j * x2)
    ).ravel()
    mods = (np.abs(complex_gamma_array(p + 1j * x1)) ** 2 * np.abs(complex_gamma_array(q + 1j * x2)) ** 2).ravel()
    if not np.all(mods > 0):
        varpi = np.full_like(varpi, np.nan)
    ref = np.exp(2 * np.real(sps.loggamma(p + 1j * x1)) + 2 * np.real(sps.loggamma(q + 1j * x2))).ravel()
    return Evaluation(varpi, mods, oracle=(mods, ref), tol=1e-12)


register(IdentityDescriptor(
    "fourier_weight_pos", "fourier", "pointwise", "Gamma weight is |Gamma|^2 |Gamma|^2 > 0 for equal parameters",
    _eval_fourier_weight_pos,
    _points(
        {"p1": F(6), "p2": F(6), "q1": F(1), "q2": F(1)},
        {"p1": F(13, 2), "p2": F(13, 2), "q1": F(1), "q2": F(1)},
        {"p1": F(3, 2), "p2": F(3, 2), "q1": F(1, 2), "q2": F(1, 2)},
    ),
    lambda P: None not in (P.p1, P.q1) and P.p1 == P.p2 and P.q1 == P.q2 and P.p1 > 0 and P.q1 > 0,
))
