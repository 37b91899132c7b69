"""Verification engine: descriptors, comparison, variant search, grids."""

from __future__ import annotations

import dataclasses
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from ..errors import ConstraintError, NKError, UnknownIdentityError
from ..exp_series import ExpSeries, series_mul, series_residual
from ..families import ParamSet

KINDS = (
    "orthogonality",
    "recurrence",
    "pde",
    "generating_function",
    "representation",
    "transform",
    "fractional",
    "fourier",
)
MODES = ("series_exact", "pointwise", "scalar")
STATUSES = ("exact_pass", "tol_pass", "discrepancy_corrected", "fail", "infra_fail")

EXACT_TOL = 1e-12
VARIANT_TOL = 1e-10
ORACLE_TOL = 1e-8


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class Variant:
    """A declared correction of a printed display.

    ``knobs`` is read by the descriptor's evaluator; ``label`` is what the
    report shows.
    """

    name: str
    label: str
    knobs: tuple = ()

    def get(self, key, default=None):
        return dict(self.knobs).get(key, default)


@dataclass
class Evaluation:
    """Both sides of one identity instance.

    ``lhs``/``rhs`` are ExpSeries, lists of them or an XSeries
    (series_exact), equal-length sequences of scalars (pointwise) or scalars.
    ``scale`` normalizes residuals when the expected value is zero.
    ``oracle`` is a pair ``(reference, independent)`` of the same quantity
    from two different methods, e.g. Gamma moments against Gauss-Laguerre;
    their disagreement beyond ``oracle_tol`` marks the infrastructure failed.
    """

    lhs: object
    rhs: object
    scale: Optional[float] = None
    oracle: Optional[object] = None
    oracle_tol: float = ORACLE_TOL
    tol: float = EXACT_TOL
    extra: dict = field(default_factory=dict)

    @property
    def mode_scalar(self) -> bool:
        return not isinstance(self.lhs, (ExpSeries, XSeries, list, tuple))


@dataclass(frozen=True)
class IdentityDescriptor:
    id: str
    kind: str
    mode: str
    title: str
    evaluate: Callable[[ParamSet, Optional[Variant]], Evaluation]
    grid: Callable[[], list]
    constraint: Callable[[ParamSet], bool] = lambda P: True
    variants: tuple = ()
    probe: Optional[Callable[[ParamSet], list]] = None
    tol: float = EXACT_TOL
    predicted: Optional[Callable[[], Optional[str]]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown identity kind {self.kind!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown comparison mode {self.mode!r}")

    def summary(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "mode": self.mode,
            "title": self.title,
            "variants": [v.name for v in self.variants],
        }

    def variant(self, name: str) -> Variant:
        for v in self.variants:
            if v.name == name:
                return v
        raise KeyError(f"{self.id} declares no variant {name!r}")


@dataclass
class IdentityResult:
    id: str
    params: dict
    status: str
    residual: float
    variant: Optional[str] = None
    printed_residual: Optional[float] = None
    oracle_residual: Optional[float] = None
    chain_consistent: Optional[bool] = None
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "params": self.params,
            "status": self.status,
            "residual": self.residual,
            "variant": self.variant,
            "printed_residual": self.printed_residual,
            "oracle_residual": self.oracle_residual,
            "chain_consistent": self.chain_consistent,
            "message": self.message,
        }


@dataclass
class VerificationReport:
    suite: str
    timestamp: str
    results: list
    environment: dict

    @property
    def summary(self) -> dict:
        counts = {k: 0 for k in STATUSES}
        for r in self.results:
            counts[r.status] += 1
        return counts

    def discrepancies(self) -> list:
        """One entry per identity whose printed form failed somewhere."""
        out: dict = {}
        for r in self.results:
            if r.status != "discrepancy_corrected":
                continue
            e = out.setdefault(
                r.id,
                {"id": r.id, "variant": r.variant, "points": 0, "max_printed_residual": 0.0,
                 "max_corrected_residual": 0.0, "chain_consistent": r.chain_consistent},
            )
            e["points"] += 1
            e["max_printed_residual"] = max(e["max_printed_residual"], r.printed_residual or 0.0)
            e["max_corrected_residual"] = max(e["max_corrected_residual"], r.residual)
            if e["variant"] != r.variant:
                e["variant"] = "inconsistent"
        return [out[k] for k in sorted(out)]

    def identity_ids(self) -> list:
        return sorted({r.id for r in self.results})

    def ok(self) -> bool:
        s = self.summary
        return s["fail"] == 0 and s["infra_fail"] == 0

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "timestamp": self.timestamp,
            "environment": self.environment,
            "results": [r.to_dict() for r in self.results],
            "summary": self.summary,
            "discrepancies": self.discrepancies(),
        }


# ---------------------------------------------------------------------------
# registry

_REGISTRY: dict = {}


def register(desc: IdentityDescriptor) -> IdentityDescriptor:
    if desc.id in _REGISTRY:
        raise ValueError(f"duplicate identity id {desc.id}")
    _REGISTRY[desc.id] = desc
    return desc


def _ensure_catalog() -> None:
    if not _REGISTRY:
        from . import catalog  # noqa: F401  (registers on import)


def lookup(identity_id: str) -> IdentityDescriptor:
    _ensure_catalog()
    try:
        return _REGISTRY[identity_id]
    except KeyError:
        raise UnknownIdentityError(identity_id) from None


def list_identities() -> list:
    _ensure_catalog()
    return [_REGISTRY[k] for k in _REGISTRY]


def identity_ids() -> list:
    return [d.id for d in list_identities()]


# ---------------------------------------------------------------------------
# comparison


def _as_array(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=complex if np.iscomplexobj(x) else float))


def _series_list(x) -> list:
    if isinstance(x, XSeries):
        return list(x.coeffs)
    if isinstance(x, ExpSeries):
        return [x]
    return list(x)


def residual_of(mode: str, ev: Evaluation) -> float:
    if mode == "series_exact":
        pairs = list(zip(_series_list(ev.lhs), _series_list(ev.rhs)))
        if ev.scale is not None:
            diff = max((a - b).max_abs() for a, b in pairs)
            return diff / ev.scale if ev.scale > 0 else diff
        return max(series_residual(a, b) for a, b in pairs)
    lhs, rhs = _as_array(ev.lhs), _as_array(ev.rhs)
    if lhs.shape != rhs.shape:
        raise ValueError("pointwise sides differ in length")
    scale = ev.scale if ev.scale is not None else float(np.max(np.abs(rhs))) if rhs.size else 0.0
    diff = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
    if scale == 0.0:
        return diff
    return diff / scale


def oracle_residual(ev: Evaluation) -> Optional[float]:
    if ev.oracle is None:
        return None
    a, b = (_as_array(x) for x in ev.oracle)
    scale = max(float(np.max(np.abs(a))), 1e-300)
    if ev.scale is not None and ev.mode_scalar:
        scale = ev.scale
    return float(np.max(np.abs(a - b))) / scale


def _evaluate(desc: IdentityDescriptor, P: ParamSet, variant: Optional[Variant]) -> tuple:
    ev = desc.evaluate(P, variant)
    return residual_of(desc.mode, ev), ev


def check_identity(identity_id: str, params: ParamSet, variant: Optional[str] = None,
                   search: bool = True) -> IdentityResult:
    """Evaluate one identity at one parameter point and classify it."""
    desc = lookup(identity_id)
    if not desc.constraint(params):
        raise ConstraintError(f"{identity_id}: parameters outside the identity's domain ({params.label()})")
    var = desc.variant(variant) if variant else None
    pdict = params.as_dict()
    try:
        res, ev = _evaluate(desc, params, var)
    except NKError as exc:
        return IdentityResult(identity_id, pdict, "infra_fail", math.inf, message=f"{type(exc).__name__}: {exc}")
    ores = oracle_residual(ev)
    tol = max(desc.tol, ev.tol)
    if ores is not None and not ores <= ev.oracle_tol:
        return IdentityResult(identity_id, pdict, "infra_fail", res, oracle_residual=ores,
                              message="independent oracles disagree")
    if res <= EXACT_TOL:
        return IdentityResult(identity_id, pdict, "exact_pass", res, variant, oracle_residual=ores)
    if res <= tol:
        return IdentityResult(identity_id, pdict, "tol_pass", res, variant, oracle_residual=ores)
    if variant is None and search and desc.variants:
        found = variant_search(identity_id, params)
        if found is not None:
            name, vres = found
            chain = None
            if desc.predicted is not None:
                pred = desc.predicted()
                chain = pred == name if pred is not None else None
            return IdentityResult(identity_id, pdict, "discrepancy_corrected", vres, name,
                                  printed_residual=res, oracle_residual=ores, chain_consistent=chain,
                                  message=desc.variant(name).label)
    return IdentityResult(identity_id, pdict, "fail", res, variant, oracle_residual=ores,
                          message="no declared variant passes" if desc.variants else "")


def _default_probe(desc: IdentityDescriptor, P: ParamSet) -> list:
    pts = [g for g in desc.grid() if desc.constraint(g)]
    pts = [P] + [g for g in pts if g != P]
    return pts[:5]


def variant_search(identity_id: str, params: ParamSet) -> Optional[tuple]:
    """The unique declared variant passing at ``params`` and the probe points.

    Returns ``(name, residual at params)`` or None when zero or several
    variants pass.  The pass threshold is 1e-10, or the point's own
    tolerance for quadrature-backed identities whose accuracy is coarser.
    """
    desc = lookup(identity_id)
    probe = desc.probe(params) if desc.probe is not None else _default_probe(desc, params)
    if params not in probe:
        probe = [params] + list(probe)
    passing = []
    for v in desc.variants:
        worst = 0.0
        here = None
        try:
            for Q in probe:
                r, ev = _evaluate(desc, Q, v)
                if oracle_residual(ev) is not None and not oracle_residual(ev) <= ev.oracle_tol:
                    r = math.inf
                if Q == params:
                    here = r
                limit = max(VARIANT_TOL, ev.tol, desc.tol)
                if not r <= limit:
                    worst = math.inf
                    break
                worst = max(worst, r / limit * VARIANT_TOL)
        except NKError:
            continue
        if worst <= VARIANT_TOL:
            passing.append((v.name, here))
    if len(passing) == 1:
        return passing[0]
    return None


# ---------------------------------------------------------------------------
# grids and suites


def expand_grid(desc: IdentityDescriptor, overrides: Optional[Mapping] = None) -> list:
    """Default grid with overridden parameters swept, filtered by the constraint."""
    base = desc.grid()
    if overrides:
        names = [k for k in overrides if k in {f.name for f in dataclasses.fields(ParamSet)}]
        pts = []
        for P in base:
            combos = [P]
            for k in names:
                combos = [Q.replace(**{k: v}) for Q in combos for v in overrides[k]]
            pts.extend(combos)
        base = pts
    seen, out = set(), []
    for P in base:
        try:
            P = ParamSet(**{f.name: getattr(P, f.name) for f in dataclasses.fields(P)})
        except ConstraintError:
            continue
        if P in seen or not desc.constraint(P):
            continue
        seen.add(P)
        out.append(P)
    return out


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = float(epoch) if epoch else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def environment() -> dict:
    from .. import __version__

    return {
        "version": __version__,
        "precision": "binary64",
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def _check_job(job: tuple) -> dict:
    identity_id, pdict = job
    return check_identity(identity_id, ParamSet(**pdict)).to_dict()


def _param_kwargs(P: ParamSet) -> dict:
    return {f.name: getattr(P, f.name) for f in dataclasses.fields(P) if getattr(P, f.name) is not None}


def run_grid(suite: Mapping, jobs: int = 1) -> VerificationReport:
    """Run a suite ``{"name", "identities", "grids", "tolerances"}``.

    ``identities`` is a list of ids or "all"; ``grids`` maps parameter names
    to value lists overriding each identity's default grid.
    """
    ids = suite.get("identities", [])
    if ids == "all" or ids == ["all"]:
        ids = identity_ids()
    descs = [lookup(i) for i in ids]
    overrides = suite.get("grids") or {}
    work = []
    for d in descs:
        for P in expand_grid(d, overrides):
            work.append((d.id, _param_kwargs(P)))
    if jobs > 1 and len(work) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            dicts = list(ex.map(_check_job, work, chunksize=4))
        results = [IdentityResult(**d) for d in dicts]
    else:
        results = [check_identity(i, ParamSet(**kw)) for i, kw in work]
    tol = suite.get("tolerances") or {}
    if tol:
        results = [_retolerance(r, tol) for r in results]
    return VerificationReport(suite.get("name", "custom"), _timestamp(), results, environment())


def _retolerance(r: IdentityResult, tol: Mapping) -> IdentityResult:
    """Apply per-identity (or '*') tolerance overrides to a tol_pass/fail result."""
    limit = tol.get(r.id, tol.get("*"))
    if limit is None or r.status not in ("tol_pass", "fail"):
        return r
    if r.status == "fail" and r.residual <= limit:
        return dataclasses.replace(r, status="tol_pass")
    if r.status == "tol_pass" and r.residual > limit:
        return dataclasses.replace(r, status="fail")
    return r


# ---------------------------------------------------------------------------
# truncated power series in x with ExpSeries coefficients


class XSeries:
    """sum_{n<=order} c_n(t, w) x^n, truncated at a fixed order."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Sequence, order: int):
        cs = [c if isinstance(c, ExpSeries) else ExpSeries.constant(float(c)) for c in coeffs][: order + 1]
        cs += [ExpSeries() for _ in range(order + 1 - len(cs))]
        self.coeffs = cs
        self.order = order

    @classmethod
    def from_scalars(cls, values: Iterable[float], order: int, monomial: tuple = (0, 0)) -> "XSeries":
        """sum_n v_n (t^a w^b)^n x^n for ``monomial = (a, b)``."""
        a, b = monomial
        out = []
        for n, v in enumerate(values):
            if n > order:
                break
            out.append(ExpSeries.monomial(float(v), a * n, b * n))
        return cls(out, order)

    @classmethod
    def x(cls, order: int, coeff: ExpSeries | float = 1.0) -> "XSeries":
        return cls([ExpSeries(), coeff], order)

    def __add__(self, other: "XSeries") -> "XSeries":
        return XSeries([a + b for a, b in zip(self.coeffs, other.coeffs)], self.order)

    def scale(self, c) -> "XSeries":
        if isinstance(c, ExpSeries):
            return XSeries([series_mul(x, c) for x in self.coeffs], self.order)
        return XSeries([x.scale(float(c)) for x in self.coeffs], self.order)

    def __mul__(self, other: "XSeries") -> "XSeries":
        out = [ExpSeries() for _ in range(self.order + 1)]
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j in range(self.order + 1 - i):
                b = other.coeffs[j]
                if b:
                    out[i + j] = out[i + j] + series_mul(a, b)
        return XSeries(out, self.order)

    def valuation(self) -> int:
        for i, c in enumerate(self.coeffs):
            if c:
                return i
        return self.order + 1

    def powers(self, kmax: int) -> list:
        out = [XSeries([ExpSeries.constant(1.0)], self.order)]
        for _ in range(kmax):
            out.append(out[-1] * self)
        return out


def compose(coeffs: Sequence[float], z: XSeries) -> XSeries:
    """sum_k coeffs[k] z^k for z with zero constant term."""
    if z.coeffs[0]:
        raise ValueError("composition needs an argument without constant term")
    kmax = min(len(coeffs) - 1, z.order // max(z.valuation(), 1))
    pw = z.powers(kmax)
    out = XSeries([], z.order)
    for k in range(kmax + 1):
        if coeffs[k] != 0:
            out = out + pw[k].scale(coeffs[k])
    return out


def compose_double(coeff: Callable[[int, int], float], z1: XSeries, z2: XSeries) -> XSeries:
    """sum_{m,r} coeff(m, r) z1^m z2^r, both arguments without constant term."""
    order = z1.order
    v1, v2 = max(z1.valuation(), 1), max(z2.valuation(), 1)
    p1, p2 = z1.powers(order // v1), z2.powers(order // v2)
    out = XSeries([], order)
    for m in range(len(p1)):
        for r in range(len(p2)):
            if m * v1 + r * v2 > order:
                continue
            c = coeff(m, r)
            if c != 0:
                out = out + (p1[m] * p2[r]).scale(c)
    return out


def xseries_residual(lhs: XSeries, rhs: XSeries) -> float:
    """Worst coefficient-wise residual across x-powers."""
    return max(series_residual(a, b) for a, b in zip(lhs.coeffs, rhs.coeffs))


__all__ = [
    "Variant",
    "Evaluation",
    "IdentityDescriptor",
    "IdentityResult",
    "VerificationReport",
    "XSeries",
    "compose",
    "compose_double",
    "xseries_residual",
    "register",
    "lookup",
    "list_identities",
    "identity_ids",
    "check_identity",
    "variant_search",
    "expand_grid",
    "run_grid",
    "residual_of",
    "STATUSES",
    "KINDS",
    "MODES",
    "EXACT_TOL",
]
