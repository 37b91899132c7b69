"""Finite bivariate generalized-power sums with exact rational exponents.

An :class:`ExpSeries` is a map ``(a, b) -> c`` standing for
``sum c * (t - shift_t)**a * (w - shift_w)**b``.  Exponents are
``fractions.Fraction`` so that terms like ``w**(q + upsilon*m)`` merge
exactly; coefficients are binary64.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import DomainError, LogarithmicCaseError, ShiftMismatchError, TermCountError
from .scalar_special import gamma_ratio, is_nonpositive_integer

Exponent = Fraction
Key = tuple  # (Fraction, Fraction)
VARS = ("t", "w")
DEFAULT_TERM_CAP = 10**6


def as_fraction(x: Union[int, float, str, Fraction], max_den: int = 10**6) -> Fraction:
    """Exact rational from an int, Fraction, ``"3/4"`` string or decimal."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational number: {x!r}") from exc
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"not a finite number: {x!r}")
        return Fraction(x).limit_denominator(max_den)
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


def _check_var(var: str) -> int:
    if var not in VARS:
        raise ValueError(f"variable must be 't' or 'w', got {var!r}")
    return VARS.index(var)


class ExpSeries:
    """Immutable sum of monomials c * t**a * w**b."""

    __slots__ = ("_terms", "shift_t", "shift_w")

    def __init__(self, terms: Mapping | Iterable = (), shift_t: float = 0.0, shift_w: float = 0.0):
        merged: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for (a, b), c in items:
            key = (as_fraction(a), as_fraction(b))
            merged[key] = merged.get(key, 0.0) + float(c)
        self._terms = {k: v for k, v in merged.items() if v != 0.0}
        self.shift_t = float(shift_t)
        self.shift_w = float(shift_w)

    # -- constructors
    @classmethod
    def constant(cls, c: float) -> "ExpSeries":
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, c: float, a=0, b=0, shift_t: float = 0.0, shift_w: float = 0.0) -> "ExpSeries":
        return cls({(a, b): c}, shift_t, shift_w)

    @classmethod
    def zero(cls) -> "ExpSeries":
        return cls()

    # -- introspection
    @property
    def terms(self) -> Mapping:
        return MappingProxyType(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms.items()))

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coeff(self, a=0, b=0) -> float:
        return self._terms.get((as_fraction(a), as_fraction(b)), 0.0)

    def items(self) -> list:
        """Terms sorted lexicographically by (a, b)."""
        return sorted(self._terms.items())

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def exponents(self, var: str) -> list:
        i = _check_var(var)
        return sorted({k[i] for k in self._terms})

    def shifts(self) -> tuple:
        return (self.shift_t, self.shift_w)

    def __repr__(self) -> str:
        body = " + ".join(f"{c:.6g}*t^{a}*w^{b}" for (a, b), c in self.items()) or "0"
        if self.shift_t or self.shift_w:
            body += f" [shift_t={self.shift_t}, shift_w={self.shift_w}]"
        return f"ExpSeries({body})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExpSeries):
            return NotImplemented
        return self._terms == other._terms and self.shifts() == other.shifts()

    __hash__ = None  # type: ignore[assignment]

    # -- arithmetic
    def _same_shift(self, other: "ExpSeries") -> None:
        if self.shifts() != other.shifts():
            raise ShiftMismatchError(f"shift mismatch: {self.shifts()} vs {other.shifts()}")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = ExpSeries.constant(other).with_shifts(self.shift_t, self.shift_w)
        return series_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = ExpSeries.constant(other).with_shifts(self.shift_t, self.shift_w)
        return series_add(self, other, 1.0, -1.0)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self.scale(-1.0)

    def __mul__(self, other):
        if isinstance(other, ExpSeries):
            return series_mul(self, other)
        return self.scale(float(other))

    def __rmul__(self, other):
        return self.scale(float(other))

    def __truediv__(self, other):
        return self.scale(1.0 / float(other))

    def scale(self, c: float) -> "ExpSeries":
        return ExpSeries({k: c * v for k, v in self._terms.items()}, self.shift_t, self.shift_w)

    def with_shifts(self, shift_t: float = 0.0, shift_w: float = 0.0) -> "ExpSeries":
        """Same terms reinterpreted about new base points."""
        return ExpSeries(self._terms, shift_t, shift_w)

    def times_monomial(self, a=0, b=0, c: float = 1.0) -> "ExpSeries":
        da, db = as_fraction(a), as_fraction(b)
        return ExpSeries({(k[0] + da, k[1] + db): c * v for k, v in self._terms.items()}, self.shift_t, self.shift_w)

    def map_exponents(self, fn) -> "ExpSeries":
        """Apply ``fn(a, b) -> (a', b', factor)`` to every term."""
        out: dict = {}
        for (a, b), c in self._terms.items():
            a2, b2, f = fn(a, b)
            key = (as_fraction(a2), as_fraction(b2))
            out[key] = out.get(key, 0.0) + c * f
        return ExpSeries(out, self.shift_t, self.shift_w)

    def at_zero(self, var: str) -> "ExpSeries":
        """Restriction to var = 0 (terms with zero exponent in var)."""
        i = _check_var(var)
        for k in self._terms:
            if k[i] < 0:
                raise DomainError(f"negative {var}-exponent, cannot restrict to {var}=0")
        return ExpSeries({k: v for k, v in self._terms.items() if k[i] == 0}, self.shift_t, self.shift_w)

    def scale_variable(self, var: str, c: float) -> "ExpSeries":
        """x(c*t) (or x(c*w)); c must be positive for fractional exponents."""
        i = _check_var(var)

        def fn(a, b):
            e = (a, b)[i]
            return a, b, _real_power(c, e)

        return self.map_exponents(fn)

    # -- evaluation and serialisation
    def evaluate(self, t: float = 1.0, w: float = 1.0) -> float:
        return evaluate(self, t, w)

    def __call__(self, t: float = 1.0, w: float = 1.0) -> float:
        return evaluate(self, t, w)

    def to_dict(self) -> dict:
        return {
            "shift_t": self.shift_t,
            "shift_w": self.shift_w,
            "terms": [
                {"a_num": a.numerator, "a_den": a.denominator, "b_num": b.numerator, "b_den": b.denominator, "coeff": c}
                for (a, b), c in self.items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExpSeries":
        terms = {
            (Fraction(r["a_num"], r["a_den"]), Fraction(r["b_num"], r["b_den"])): float(r["coeff"])
            for r in data["terms"]
        }
        return cls(terms, data.get("shift_t", 0.0), data.get("shift_w", 0.0))

    @classmethod
    def from_json(cls, text: str) -> "ExpSeries":
        return cls.from_dict(json.loads(text))


def _real_power(base: float, e: Fraction) -> float:
    if e == 0:
        return 1.0
    if base < 0 and e.denominator != 1:
        raise DomainError(f"negative base {base} with fractional exponent {e}")
    if base == 0 and e < 0:
        raise DomainError(f"zero base with negative exponent {e}")
    if e.denominator == 1:
        return float(base) ** int(e)
    return float(base) ** float(e)


def series_add(x: ExpSeries, y: ExpSeries, cx: float = 1.0, cy: float = 1.0) -> ExpSeries:
    x._same_shift(y)
    out = {k: cx * v for k, v in x.terms.items()}
    for k, v in y.terms.items():
        out[k] = out.get(k, 0.0) + cy * v
    return ExpSeries(out, x.shift_t, x.shift_w)


def series_sum(items: Iterable[ExpSeries], shift_t: float = 0.0, shift_w: float = 0.0) -> ExpSeries:
    """Sum of many series with fsum-accumulated coefficients."""
    buckets: dict = {}
    shifts = None
    for s in items:
        if shifts is None:
            shifts = s.shifts()
        elif s.shifts() != shifts:
            raise ShiftMismatchError(f"shift mismatch: {shifts} vs {s.shifts()}")
        for k, v in s.terms.items():
            buckets.setdefault(k, []).append(v)
    if shifts is None:
        shifts = (shift_t, shift_w)
    return ExpSeries({k: math.fsum(v) for k, v in buckets.items()}, *shifts)


def series_mul(x: ExpSeries, y: ExpSeries, cap: int = DEFAULT_TERM_CAP) -> ExpSeries:
    x._same_shift(y)
    if len(x) * len(y) > cap:
        raise TermCountError(f"product of {len(x)} x {len(y)} terms exceeds cap {cap}")
    buckets: dict = {}
    for (a1, b1), c1 in x.terms.items():
        for (a2, b2), c2 in y.terms.items():
            buckets.setdefault((a1 + a2, b1 + b2), []).append(c1 * c2)
    return ExpSeries({k: math.fsum(v) for k, v in buckets.items()}, x.shift_t, x.shift_w)


def falling_factor(e: Fraction, m: int) -> Fraction:
    out = Fraction(1)
    for i in range(m):
        out *= e - i
    return out


def rising_factor(e: Fraction, m: int) -> Fraction:
    out = Fraction(1)
    for i in range(1, m + 1):
        out *= e + i
    return out


def _d_monomial(e: Fraction, m: int) -> tuple:
    """D^m e -> (new exponent, factor); m < 0 means antiderivative."""
    if m >= 0:
        return e - m, falling_factor(e, m)
    k = -m
    f = rising_factor(e, k)
    if f == 0:
        raise LogarithmicCaseError("antiderivative hits exponent -1")
    return e + k, 1 / f


def differentiate(x: ExpSeries, var: str, m: int = 1) -> ExpSeries:
    if m < 1:
        raise ValueError("order must be a positive integer")
    i = _check_var(var)

    def fn(a, b):
        e = (a, b)[i]
        e2, f = _d_monomial(e, m)
        return (e2, b, float(f)) if i == 0 else (a, e2, float(f))

    return x.map_exponents(fn)


def antidifferentiate(x: ExpSeries, var: str, m: int = 1) -> ExpSeries:
    """m-fold integral from 0 (or from the base point of a shifted series)."""
    if m < 1:
        raise ValueError("order must be a positive integer")
    i = _check_var(var)

    def fn(a, b):
        e = (a, b)[i]
        for j in range(1, m + 1):
            if e + j == 0:
                raise LogarithmicCaseError(f"antiderivative hits exponent -1 in {var}")
        e2, f = _d_monomial(e, -m)
        return (e2, b, float(f)) if i == 0 else (a, e2, float(f))

    return x.map_exponents(fn)


def substitute_reciprocal(x: ExpSeries, var: str) -> ExpSeries:
    i = _check_var(var)
    if x.shifts()[i] != 0:
        raise ShiftMismatchError(f"cannot substitute 1/{var} in a shifted series")
    return x.map_exponents(lambda a, b: (-a, b, 1.0) if i == 0 else (a, -b, 1.0))


def fractional_shift(x: ExpSeries, var: str, tau, direction: str, base: float = 0.0) -> ExpSeries:
    """Riemann-Liouville integral or derivative of order tau, termwise.

    (var-base)^a -> Gamma(a+1)/Gamma(a+1+-tau) (var-base)^(a+-tau).
    """
    i = _check_var(var)
    if direction not in ("integral", "derivative"):
        raise ValueError("direction must be 'integral' or 'derivative'")
    if x.shifts()[i] != float(base):
        raise ShiftMismatchError(f"series is centred at {x.shifts()[i]}, not {base}")
    tau = as_fraction(tau)
    if tau < 0:
        raise ValueError("fractional order must be non-negative")
    if tau == 0:
        return x
    sign = 1 if direction == "integral" else -1

    def fn(a, b):
        e = (a, b)[i]
        if e <= -1:
            raise DomainError(f"exponent {e} <= -1: the fractional integral diverges at the base point")
        if direction == "derivative" and e - tau <= -1:
            raise DomainError(f"exponent {e} - {tau} <= -1 in fractional derivative")
        if tau.denominator == 1:
            k = int(tau)
            f = float(1 / rising_factor(e, k)) if sign > 0 else float(falling_factor(e, k))
        elif is_nonpositive_integer(e + 1 + sign * tau):
            f = 0.0
        else:
            f = gamma_ratio(e + 1, e + 1 + sign * tau)
        e2 = e + sign * tau
        return (e2, b, f) if i == 0 else (a, e2, f)

    return x.map_exponents(fn)


def evaluate(x: ExpSeries, t: float = 1.0, w: float = 1.0) -> float:
    """Literal sum, compensated, largest contributions first."""
    tt = float(t) - x.shift_t
    ww = float(w) - x.shift_w
    vals = [c * _real_power(tt, a) * _real_power(ww, b) for (a, b), c in x.terms.items()]
    vals.sort(key=abs, reverse=True)
    return math.fsum(vals)


def evaluate_array(x: ExpSeries, t, w) -> np.ndarray:
    """Vectorised evaluation on broadcastable arrays (positive bases)."""
    tt = np.asarray(t, dtype=float) - x.shift_t
    ww = np.asarray(w, dtype=float) - x.shift_w
    out = np.zeros(np.broadcast(tt, ww).shape)
    for (a, b), c in x.terms.items():
        out = out + c * _array_power(tt, a) * _array_power(ww, b)
    return out


def _array_power(base: np.ndarray, e: Fraction) -> np.ndarray:
    if e == 0:
        return np.ones_like(base)
    if e.denominator == 1:
        return base ** int(e)
    return base ** float(e)


def series_residual(lhs: ExpSeries, rhs: ExpSeries) -> float:
    """max |lhs - rhs| over merged support, relative to the largest coefficient."""
    lhs._same_shift(rhs)
    keys = set(lhs.terms) | set(rhs.terms)
    if not keys:
        return 0.0
    scale = max(lhs.max_abs(), rhs.max_abs())
    diff = max(abs(lhs.coeff(*k) - rhs.coeff(*k)) for k in keys)
    return diff / scale


# ---------------------------------------------------------------------------
# operator polynomials


def _merge(ops: tuple, new: tuple) -> tuple:
    """Append primitive ``new`` to a per-variable op word, merging neighbours."""
    if ops:
        last = ops[-1]
        if last[0] == new[0] == "M":
            r = last[1] + new[1]
            return ops[:-1] + ((("M", r),) if r != 0 else ())
        if last[0] == new[0] == "D" and (last[1] > 0) == (new[1] > 0):
            return ops[:-1] + (("D", last[1] + new[1]),)
    return ops + (new,)


def _concat(left: tuple, right: tuple) -> tuple:
    out = left
    for op in right:
        out = _merge(out, op)
    return out


class OperatorExpr:
    """Formal polynomial in D_t, D_w, their inverses and multiplications.

    Operators acting on t commute with those acting on w, so each word is
    stored as a pair ``(t_ops, w_ops)``; each entry is ``("D", m)`` (m > 0
    derivative, m < 0 antiderivative from 0) or ``("M", r)`` (multiply by
    var**r).  Words are applied right to left, so ``A * B`` means "B first".
    """

    __slots__ = ("words",)

    def __init__(self, words: Mapping | None = None):
        self.words = {k: v for k, v in (words or {}).items() if v != 0}

    @classmethod
    def identity(cls, c: float = 1.0) -> "OperatorExpr":
        return cls({((), ()): c})

    @classmethod
    def d(cls, var: str, m: int = 1) -> "OperatorExpr":
        if m == 0:
            return cls.identity()
        op = (("D", m),)
        return cls({(op, ()) if _check_var(var) == 0 else ((), op): 1.0})

    @classmethod
    def integ(cls, var: str, m: int = 1) -> "OperatorExpr":
        return cls.d(var, -m)

    @classmethod
    def mul(cls, var: str, r=1) -> "OperatorExpr":
        r = as_fraction(r)
        if r == 0:
            return cls.identity()
        op = (("M", r),)
        return cls({(op, ()) if _check_var(var) == 0 else ((), op): 1.0})

    def __add__(self, other):
        if not isinstance(other, OperatorExpr):
            other = OperatorExpr.identity(float(other))
        out = dict(self.words)
        for k, v in other.words.items():
            out[k] = out.get(k, 0.0) + v
        return OperatorExpr(out)

    __radd__ = __add__

    def __neg__(self):
        return OperatorExpr({k: -v for k, v in self.words.items()})

    def __sub__(self, other):
        if not isinstance(other, OperatorExpr):
            other = OperatorExpr.identity(float(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, OperatorExpr):
            return OperatorExpr({k: v * float(other) for k, v in self.words.items()})
        out: dict = {}
        for (lt, lw), cl in self.words.items():
            for (rt, rw), cr in other.words.items():
                key = (_concat(lt, rt), _concat(lw, rw))
                out[key] = out.get(key, 0.0) + cl * cr
        return OperatorExpr(out)

    def __rmul__(self, other):
        return OperatorExpr({k: v * float(other) for k, v in self.words.items()})

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative operator power")
        out = OperatorExpr.identity()
        for _ in range(n):
            out = out * self
        return out

    def __len__(self) -> int:
        return len(self.words)

    def apply(self, x: ExpSeries) -> ExpSeries:
        return operator_apply(self, x)


class OperatorExp:
    """exp(generator), expanded lazily to a truncation order."""

    def __init__(self, generator: OperatorExpr):
        self.generator = generator

    def expand(self, order: int) -> OperatorExpr:
        out = OperatorExpr.identity()
        power = OperatorExpr.identity()
        for k in range(1, order + 1):
            power = power * self.generator
            out = out + power * (1.0 / math.factorial(k))
        return out


def _apply_word(ops: tuple, e: Fraction) -> tuple:
    f = Fraction(1)
    for kind, v in reversed(ops):
        if kind == "M":
            e = e + v
        else:
            if v < 0:
                for j in range(1, -v + 1):
                    if e + j == 0:
                        raise LogarithmicCaseError("operator antiderivative hits exponent -1")
            e, g = _d_monomial(e, v)
            f *= g
            if f == 0:
                return e, f
    return e, f


def operator_apply(op, x: ExpSeries, truncation: int | None = None) -> ExpSeries:
    """Apply an OperatorExpr (or a truncated OperatorExp) to a series."""
    if isinstance(op, OperatorExp):
        if truncation is None:
            raise ValueError("an operator exponential needs a truncation order")
        op = op.expand(truncation)
    buckets: dict = {}
    for (a, b), c in x.terms.items():
        for (tops, wops), cw in op.words.items():
            a2, fa = _apply_word(tops, a)
            if fa == 0:
                continue
            b2, fb = _apply_word(wops, b)
            if fb == 0:
                continue
            buckets.setdefault((a2, b2), []).append(c * cw * float(fa * fb))
    return ExpSeries({k: math.fsum(v) for k, v in buckets.items()}, x.shift_t, x.shift_w)


__all__ = [
    "ExpSeries",
    "OperatorExpr",
    "OperatorExp",
    "as_fraction",
    "series_add",
    "series_sum",
    "series_mul",
    "differentiate",
    "antidifferentiate",
    "substitute_reciprocal",
    "fractional_shift",
    "operator_apply",
    "evaluate",
    "evaluate_array",
    "series_residual",
]
