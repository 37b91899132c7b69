"""Integration backends.

* :func:`gamma_moment_integral` integrates a weight times an ExpSeries
  exactly, term by term, through Gamma functions.
* :func:`integrate_biorthogonality` is the independent oracle: tensor
  generalized Gauss-Laguerre rules evaluated on the integrand pointwise.
* :func:`fourier_plane_integral` handles the complex-Gamma weighted
  integrals over the plane with nested adaptive Gauss-Kronrod panels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special as sp

from .errors import AccuracyError, DivergentMomentError, DomainError
from .exp_series import ExpSeries, as_fraction, evaluate_array
from .scalar_special import gamma, log_gamma_signed

WEIGHT_KINDS = ("laguerre_w", "reciprocal_t", "product_2d", "fourier_gamma")


@dataclass(frozen=True)
class WeightDescriptor:
    """Integration weight.

    laguerre_w:   w^alpha e^{-w} on (0, inf), params ``alpha`` (var ``w`` by default)
    reciprocal_t: t^{-p} e^{-1/t} on (0, inf), params ``p`` (var ``t`` by default)
    product_2d:   t^{-p} w^q e^{-w-1/t} on the quadrant, params ``p``, ``q``
    fourier_gamma: Gamma(p1+ix)Gamma(p2-ix)Gamma(q1-iy)Gamma(q2+iy) on the plane
    """

    kind: str
    params: tuple = field(default_factory=tuple)
    var: str = ""

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))
        if not self.var:
            object.__setattr__(self, "var", {"laguerre_w": "w", "reciprocal_t": "t"}.get(self.kind, ""))

    def get(self, name: str) -> float:
        return float(dict(self.params)[name])

    def exact(self, name: str) -> Fraction:
        """Parameter as an exact rational; floats convert without rounding."""
        v = dict(self.params)[name]
        return Fraction(v) if isinstance(v, float) else as_fraction(v)

    @classmethod
    def laguerre(cls, alpha, var: str = "w") -> "WeightDescriptor":
        return cls("laguerre_w", {"alpha": alpha}, var)

    @classmethod
    def reciprocal(cls, p, var: str = "t") -> "WeightDescriptor":
        return cls("reciprocal_t", {"p": p}, var)

    @classmethod
    def product(cls, p, q) -> "WeightDescriptor":
        return cls("product_2d", {"p": p, "q": q})

    @classmethod
    def fourier(cls, p1, p2, q1, q2) -> "WeightDescriptor":
        return cls("fourier_gamma", {"p1": p1, "p2": p2, "q1": q1, "q2": q2})


@dataclass(frozen=True)
class QuadRule:
    alpha: float
    n: int
    nodes: tuple
    weights: tuple

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(np.asarray(self.weights), f(np.asarray(self.nodes))))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "n": self.n, "nodes": list(self.nodes), "weights": list(self.weights)}


# ---------------------------------------------------------------------------
# exact termwise integration


def _gamma_arg_checked(x) -> float:
    if x <= 0:
        raise DivergentMomentError(f"Gamma-moment argument {x} <= 0: the integral diverges")
    return gamma(x)


def _gamma_factored(args: list, exact: bool = False) -> list:
    """Gamma(x) for each x as ``(base, ratio)`` with Gamma(x) = Gamma(base) * ratio.

    Arguments sharing a fractional part share the smallest one as base; the
    ratio is the exact rational Pochhammer symbol (base)_{x - base}.  Summing
    ratios before multiplying by Gamma(base) keeps Gamma rounding out of the
    cancellation between terms.
    """
    out = []
    bases: dict = {}
    for x in args:
        if x <= 0:
            raise DivergentMomentError(f"Gamma-moment argument {x} <= 0: the integral diverges")
        frac = x - math.floor(x)
        bases[frac] = min(bases.get(frac, x), x)
    for x in args:
        base = bases[x - math.floor(x)]
        ratio = Fraction(1)
        for j in range(int(x - base)):
            ratio *= base + j
        out.append((base, ratio if exact else float(ratio)))
    return out


def _moment_args(series: ExpSeries, weight: WeightDescriptor) -> list:
    """Per-term Gamma arguments, one tuple per term."""
    rows = []
    for (a, b), c in series.items():
        if weight.kind == "product_2d":
            p, q = weight.exact("p"), weight.exact("q")
            rows.append((c, (p - a - 1, b + q + 1)))
        elif weight.kind in ("laguerre_w", "reciprocal_t"):
            own, other = (b, a) if weight.var == "w" else (a, b)
            if other != 0:
                raise DomainError(f"series depends on the variable not integrated by a {weight.kind} weight")
            if weight.kind == "laguerre_w":
                rows.append((c, (own + weight.exact("alpha") + 1,)))
            else:
                rows.append((c, (weight.exact("p") - own - 1,)))
        else:
            raise ValueError("fourier_gamma weights are handled by fourier_plane_integral")
    return rows


def gamma_moment_integral(series: ExpSeries, weight: WeightDescriptor) -> float:
    """Exact integral of weight * series via Gamma(.) termwise."""
    if series.shifts() != (0.0, 0.0):
        raise DomainError("Gamma-moment integration needs an unshifted series")
    rows = _moment_args(series, weight)
    if not rows:
        return 0.0
    ndim = len(rows[0][1])
    factored = [_gamma_factored([r[1][i] for r in rows]) for i in range(ndim)]
    groups: dict = {}
    for j, (c, _) in enumerate(rows):
        key = tuple(factored[i][j][0] for i in range(ndim))
        term = c
        for i in range(ndim):
            term *= factored[i][j][1]
        groups.setdefault(key, []).append(term)
    total = []
    for key, terms in groups.items():
        g = 1.0
        for base in key:
            g *= _gamma_arg_checked(base)
        total.append(math.fsum(terms) * g)
    return math.fsum(total)


def multiply_terms(x: dict, y: dict) -> dict:
    """Exact product of two {(a, b): Fraction} term maps."""
    out: dict = {}
    for (a1, b1), c1 in x.items():
        for (a2, b2), c2 in y.items():
            k = (a1 + a2, b1 + b2)
            out[k] = out.get(k, Fraction(0)) + c1 * c2
    return {k: c for k, c in out.items() if c != 0}


def gamma_moment_exact(terms: dict, weight: WeightDescriptor) -> float:
    """Gamma-moment integral of a {(a, b): Fraction} term map against a product_2d weight.

    Each moment Gamma(p-a-1) Gamma(b+q+1) is Gamma(base_t) Gamma(base_w) times
    exact rational Pochhammer ratios, so the sum is rational until the final
    multiplication; no cancellation error survives.
    """
    if weight.kind != "product_2d":
        raise ValueError("exact moments are implemented for product_2d weights")
    p, q = weight.exact("p"), weight.exact("q")
    rows = [(c, (p - a - 1, b + q + 1)) for (a, b), c in sorted(terms.items())]
    if not rows:
        return 0.0
    ft = _gamma_factored([r[1][0] for r in rows], exact=True)
    fw = _gamma_factored([r[1][1] for r in rows], exact=True)
    groups: dict = {}
    for (c, _), (bt, rt), (bw, rw) in zip(rows, ft, fw):
        groups[(bt, bw)] = groups.get((bt, bw), Fraction(0)) + c * rt * rw
    return math.fsum(float(v) * _gamma_arg_checked(bt) * _gamma_arg_checked(bw) for (bt, bw), v in groups.items())


def laplace_termwise(series: ExpSeries, var: str, a: float) -> ExpSeries:
    """Integral over var in (0, inf) of e^{-a var} times the series, termwise."""
    i = 0 if var == "t" else 1

    def fn(e_t, e_w):
        e = (e_t, e_w)[i]
        lg = log_gamma_signed(_positive(float(e) + 1))
        f = lg.value() * a ** (-(float(e) + 1))
        return (0, e_w, f) if i == 0 else (e_t, 0, f)

    return series.map_exponents(fn)


def _positive(x: float) -> float:
    if x <= 0:
        raise DivergentMomentError(f"Laplace transform of a power with exponent {x - 1} diverges")
    return x


# ---------------------------------------------------------------------------
# Gauss-Laguerre


@lru_cache(maxsize=256)
def gauss_laguerre_rule(n: int, alpha: float) -> QuadRule:
    """n-point generalized Gauss-Laguerre rule for w^alpha e^{-w}.

    Nodes and weights come from the Golub-Welsch eigenproblem as solved by
    ``scipy.special.roots_genlaguerre``.
    """
    if not isinstance(n, (int, np.integer)) or n < 1 or n > 256:
        raise ValueError("rule size must satisfy 1 <= n <= 256")
    alpha = float(alpha)
    if not alpha > -1:
        raise ValueError("Gauss-Laguerre parameter must exceed -1")
    x, w = sp.roots_genlaguerre(int(n), alpha)
    order = np.argsort(x)
    return QuadRule(alpha, int(n), tuple(float(v) for v in x[order]), tuple(float(v) for v in w[order]))


def _min_max(series: ExpSeries, var: str) -> tuple:
    e = series.exponents(var)
    return (min(e), max(e)) if e else (0, 0)


def _axis_rule(kind: str, series_f: ExpSeries, series_g: ExpSeries, var: str, param: float, n: int):
    """Nodes (in the original variable), weights, and the absorbed-power factor."""
    lo_f, hi_f = _min_max(series_f, var)
    lo_g, hi_g = _min_max(series_g, var)
    if kind == "laguerre":
        lo = float(lo_f + lo_g)
        alpha = param + lo
        if not alpha > -1:
            raise DomainError(f"Laguerre parameter {alpha} <= -1 after absorbing the minimal exponent")
        rule = gauss_laguerre_rule(n, alpha)
        x = np.asarray(rule.nodes)
        return x, np.asarray(rule.weights), x ** (-lo)
    hi = float(hi_f + hi_g)
    alpha = param - 2 - hi
    if not alpha > -1:
        raise DomainError(f"u-exponent {alpha} <= -1 after the u = 1/t substitution")
    rule = gauss_laguerre_rule(n, alpha)
    u = np.asarray(rule.nodes)
    return 1.0 / u, np.asarray(rule.weights), u ** hi


def integrate_biorthogonality(f: ExpSeries, g: ExpSeries, weight: WeightDescriptor, n: int = 64) -> float:
    """Quadrature estimate of the weighted integral of f * g."""
    if weight.kind == "laguerre_w":
        x, wts, corr = _axis_rule("laguerre", f, g, weight.var, weight.get("alpha"), n)
        args = (x, 1.0) if weight.var == "t" else (1.0, x)
        vals = evaluate_array(f, *args) * evaluate_array(g, *args) * corr
        return float(np.dot(wts, vals))
    if weight.kind == "reciprocal_t":
        x, wts, corr = _axis_rule("reciprocal", f, g, weight.var, weight.get("p"), n)
        args = (x, 1.0) if weight.var == "t" else (1.0, x)
        vals = evaluate_array(f, *args) * evaluate_array(g, *args) * corr
        return float(np.dot(wts, vals))
    if weight.kind == "product_2d":
        n = min(n, 128)
        xt, wt, ct = _axis_rule("reciprocal", f, g, "t", weight.get("p"), n)
        xw, ww, cw = _axis_rule("laguerre", f, g, "w", weight.get("q"), n)
        T, W = xt[:, None], xw[None, :]
        vals = evaluate_array(f, T, W) * evaluate_array(g, T, W) * ct[:, None] * cw[None, :]
        return float(wt @ vals @ ww)
    raise ValueError(f"weight kind {weight.kind} is not a Gauss-Laguerre kind")


# ---------------------------------------------------------------------------
# adaptive plane integration

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15 table).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 nodes, increasing
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def _adaptive(func, a: float, b: float, abs_tol: float, panels: int = 8, max_panels: int = 4000):
    """Vector-valued adaptive GK15 on [a, b].

    ``func(x)`` takes shape (k,) and returns shape (k, M).  Returns
    (integral (M,), error estimate).
    """
    edges = np.linspace(a, b, panels + 1)
    todo = list(zip(edges[:-1], edges[1:]))
    total = None
    err_total = 0.0
    used = 0
    while todo:
        lo = np.array([p[0] for p in todo])
        hi = np.array([p[1] for p in todo])
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        x = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
        vals = np.asarray(func(x))
        vals = vals.reshape(len(todo), 15, -1)
        k15 = np.einsum("pnm,n->pm", vals, _WK) * half[:, None]
        g7 = np.einsum("pnm,n->pm", vals, _WG15) * half[:, None]
        err = np.max(np.abs(k15 - g7), axis=1)
        allowed = abs_tol * (hi - lo) / (b - a)
        ok = err <= allowed
        used += len(todo)
        acc = k15[ok].sum(axis=0)
        total = acc if total is None else total + acc
        err_total += float(err[ok].sum())
        nxt = []
        for i in np.nonzero(~ok)[0]:
            nxt.append((lo[i], mid[i]))
            nxt.append((mid[i], hi[i]))
        if used + len(nxt) > max_panels:
            total = total + k15[~ok].sum(axis=0)
            err_total += float(err[~ok].sum())
            return total, err_total, False
        todo = nxt
    return total, err_total, True


def tail_cutoff(degree: float, tol: float) -> float:
    """T with int_T^inf x^D e^{-pi x} dx below tol/10 of the full integral."""
    d = max(float(degree), 0.0) + 1.0
    return float(sp.gammainccinv(d, tol / 10.0) / math.pi) * 1.1 + 1.0


@dataclass
class PlaneIntegral:
    value: complex
    error: float
    scale: float
    box: tuple
    values: tuple = ()


def plane_integrate(integrand: Callable, box: tuple, tol: float) -> PlaneIntegral:
    """Nested adaptive integral of a vectorised integrand(x1, x2) over a box.

    The integrand may return extra leading axes (several integrands sharing
    one pass); ``values`` then holds all of them and ``value`` the first.
    ``tol`` is relative to the largest L1 mass, estimated from a coarse pass.
    """
    T1, T2 = box
    xs1 = np.linspace(-T1, T1, 161)
    xs2 = np.linspace(-T2, T2, 161)
    coarse = np.abs(np.asarray(integrand(xs1[:, None], xs2[None, :])))
    coarse = coarse.reshape(-1, 161, 161)
    nout = coarse.shape[0]
    scale = float(max(np.trapezoid(np.trapezoid(c, xs2, axis=1), xs1) for c in coarse))
    if scale == 0.0:
        return PlaneIntegral(0j, 0.0, 0.0, box, (0j,) * nout)
    abs_tol = tol * scale

    inner_ok = [True]

    def outer(x1):
        def inner(x2):
            v = np.asarray(integrand(x1[None, :], x2[:, None])).reshape(nout, len(x2), len(x1))
            return np.moveaxis(v, 1, 0).reshape(len(x2), nout * len(x1))

        val, _err, ok = _adaptive(inner, -T2, T2, abs_tol / (4.0 * T1))
        inner_ok[0] = inner_ok[0] and ok
        return val.reshape(nout, len(x1)).T

    val, err, ok = _adaptive(outer, -T1, T1, abs_tol / 2.0)
    values = tuple(complex(v) for v in val)
    if not (ok and inner_ok[0]):
        raise AccuracyError("plane integral did not reach the requested tolerance", values[0], float(err))
    return PlaneIntegral(values[0], float(err), scale, box, values)


def fourier_box(params, tol: float) -> tuple:
    """Truncation box for the Gamma-decaying integrands of the Fourier pair.

    D collects the Gamma-line growth of the two factors on each axis and the
    polynomial degree of the Pochhammer sums; ``params`` needs ``p1, p2, q1,
    q2, upsilon, s, n``.
    """
    d1 = float(params.p1 + params.p2) - 1.0
    d2 = float(params.q1 + params.q2) - 1.0 + params.upsilon * params.s + params.n
    return tail_cutoff(d1, tol), tail_cutoff(d2, tol)


def fourier_plane_integral(integrand: Callable, params, tol: float = 1e-6) -> complex:
    """Integral over the plane of a Gamma-decaying integrand(xi1, xi2)."""
    return plane_integrate(integrand, fourier_box(params, tol), tol).value
