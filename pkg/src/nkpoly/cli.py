"""Command line entry point: ``nkpoly {eval,coeffs,verify,quad}``."""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import ConfigError, NKError, UnknownIdentityError
from .exp_series import as_fraction, evaluate
from .families import FAMILY_ALIASES, Construction, Family, FamilySpec, ParamSet, build_family

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONFIG, EXIT_INFRA = 0, 1, 2, 3, 4

SUITE_ENV = "NK_SUITE_PATH"
DEFAULT_SUITE = {"name": "default", "identities": "all", "grids": {}, "tolerances": {}, "output": None, "format": "json"}


# ---------------------------------------------------------------------------
# formatting


def fmt17(x: float) -> str:
    """17 significant digits, positional for moderate magnitudes.

    The digits come from ``%.16e`` so rounding happens exactly once.
    """
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    mant, exp = f"{x:.16e}".split("e")
    exp = int(exp)
    if not -5 <= exp < 17:
        return f"{mant}e{exp:+03d}"
    sign = "-" if mant.startswith("-") else ""
    digits = mant.lstrip("-").replace(".", "")
    if exp >= 0:
        head, tail = digits[: exp + 1], digits[exp + 1:]
    else:
        head, tail = "0", "0" * (-exp - 1) + digits
    return f"{sign}{head}.{tail or '0'}"


def _json_value(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return fmt17(v) if math.isfinite(v) else "null"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(str(v))


def dump_json(obj) -> str:
    """JSON with every float at 17 significant digits; non-finite floats become null."""
    return _json_value(obj) + "\n"


def dump_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt17(v) if isinstance(v, float) else ("" if v is None else v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# suite configuration


@dataclass
class SuiteConfig:
    name: str = "default"
    identities: object = "all"
    grids: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    output: Optional[str] = None
    format: str = "json"

    KEYS = ("name", "identities", "grids", "tolerances", "output", "format")

    @classmethod
    def from_mapping(cls, data) -> "SuiteConfig":
        if not isinstance(data, dict):
            raise ConfigError("suite config must be a table/object")
        unknown = sorted(set(data) - set(cls.KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**copy.deepcopy({**DEFAULT_SUITE, **data}))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "SuiteConfig":
        """TOML first, JSON as fallback."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as toml_exc:
            try:
                data = json.loads(text)
            except json.JSONDecodeError:
                raise ConfigError(f"{path}: neither TOML nor JSON ({toml_exc})") from None
        return cls.from_mapping(data)

    def validate(self) -> None:
        from .identities import identity_ids

        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        ids = self.identities
        if isinstance(ids, str):
            ids = [ids]
        if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
            raise ConfigError("identities must be 'all' or a list of ids")
        if ids != ["all"]:
            known = set(identity_ids())
            bad = [i for i in ids if i not in known]
            if bad:
                raise ConfigError(f"unknown identities: {', '.join(bad)}")
        self.identities = "all" if ids == ["all"] else ids
        if not isinstance(self.grids, dict) or not all(isinstance(v, list) for v in self.grids.values()):
            raise ConfigError("grids must map parameter names to value lists")
        fields = set(ParamSet.__dataclass_fields__)
        bad = sorted(set(self.grids) - fields)
        if bad:
            raise ConfigError(f"unknown grid parameters: {', '.join(bad)}")
        if not isinstance(self.tolerances, dict) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in self.tolerances.values()
        ):
            raise ConfigError("tolerances must map ids (or '*') to positive numbers")

    def suite(self) -> dict:
        return {"name": self.name, "identities": self.identities, "grids": self.grids, "tolerances": self.tolerances}


def _grid_value(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    if "/" in text:
        return as_fraction(text)
    return float(text)


def parse_grid_override(spec: str) -> tuple:
    """``name=v1,v2,...`` to ``(name, [values])``."""
    name, sep, values = spec.partition("=")
    if not sep or not name.strip() or not values.strip():
        raise ConfigError(f"grid override must look like name=v1,v2 (got {spec!r})")
    try:
        return name.strip(), [_grid_value(v) for v in values.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad grid value in {spec!r}: {exc}") from None


def resolve_config(path: Optional[str]) -> SuiteConfig:
    if path is None:
        path = os.environ.get(SUITE_ENV) or None
    if path is None:
        return SuiteConfig.from_mapping({})
    return SuiteConfig.load(path)


# ---------------------------------------------------------------------------
# commands


def _family(name: str) -> Family:
    if name in FAMILY_ALIASES:
        return FAMILY_ALIASES[name]
    try:
        return Family(name)
    except ValueError:
        raise ConfigError(f"unknown family {name!r}") from None


def _params(args) -> ParamSet:
    return ParamSet(p=args.p, q=args.q, upsilon=args.nu, s=args.s, chi=args.chi)


def _series(args):
    spec = FamilySpec(_family(args.family), Construction(args.construction))
    return build_family(spec, _params(args))


def cmd_eval(args) -> int:
    value = evaluate(_series(args), args.t, args.w)
    print(fmt17(value))
    return EXIT_OK


def cmd_coeffs(args) -> int:
    series = _series(args)
    if args.format == "csv":
        rows = [(a.numerator, a.denominator, b.numerator, b.denominator, c) for (a, b), c in series.items()]
        text = dump_csv(("a_num", "a_den", "b_num", "b_den", "coeff"), rows)
    else:
        text = dump_json(series.to_dict())
    _emit(text, args.output)
    return EXIT_OK


def cmd_quad(args) -> int:
    from .quadrature import gauss_laguerre_rule

    if not 1 <= args.n <= 256:
        raise _UsageError(f"rule size n must satisfy 1 <= n <= 256 (got {args.n})")
    if not args.alpha > -1:
        raise _UsageError(f"alpha must exceed -1 (got {args.alpha})")
    rule = gauss_laguerre_rule(args.n, args.alpha)
    # zeroth moment: sum of weights against Gamma(alpha + 1)
    exact = math.gamma(args.alpha + 1)
    moment_error = abs(math.fsum(rule.weights) - exact) / exact
    if args.format == "csv":
        text = dump_csv(("i", "node", "weight"), [(i, x, w) for i, (x, w) in enumerate(zip(rule.nodes, rule.weights))])
    else:
        text = dump_json({**rule.to_dict(), "moment_self_test": moment_error})
    _emit(text, args.output)
    return EXIT_OK


REPORT_COLUMNS = ("id", "params", "status", "residual", "variant", "printed_residual", "oracle_residual",
                  "chain_consistent", "message")


def report_csv(report) -> str:
    rows = []
    for r in report.results:
        d = r.to_dict()
        d["params"] = ";".join(f"{k}={v}" for k, v in d["params"].items())
        d["chain_consistent"] = "" if d["chain_consistent"] is None else str(d["chain_consistent"]).lower()
        rows.append([d[c] for c in REPORT_COLUMNS])
    return dump_csv(REPORT_COLUMNS, rows)


def summary_table(report) -> str:
    """Per-identity status counts, sorted by id."""
    from .identities import STATUSES

    per: dict = {}
    for r in report.results:
        row = per.setdefault(r.id, {k: 0 for k in STATUSES} | {"variant": ""})
        row[r.status] += 1
        if r.variant and r.variant not in row["variant"].split(" | "):
            row["variant"] = r.variant if not row["variant"] else f"{row['variant']} | {r.variant}"
    width = max([len("identity")] + [len(i) for i in per])
    short = ("exact", "tol", "corr", "fail", "infra")
    lines = [f"{'identity':<{width}}  " + "  ".join(f"{h:>5}" for h in short) + "  variant"]
    for i in sorted(per):
        row = per[i]
        lines.append(f"{i:<{width}}  " + "  ".join(f"{row[k]:>5}" for k in STATUSES) + f"  {row['variant']}".rstrip())
    total = report.summary
    lines.append(f"{'total':<{width}}  " + "  ".join(f"{total[k]:>5}" for k in STATUSES))
    return "\n".join(lines) + "\n"


def cmd_verify(args) -> int:
    from .identities import run_grid

    cfg = resolve_config(args.config)
    if args.identity:
        cfg.identities = list(args.identity)
    for spec in args.grid or ():
        name, values = parse_grid_override(spec)
        cfg.grids[name] = values
    if args.format:
        cfg.format = args.format
    if args.output:
        cfg.output = args.output
    cfg.validate()
    report = run_grid(cfg.suite(), jobs=args.jobs)
    text = report_csv(report) if cfg.format == "csv" else dump_json(report.to_dict())
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8", newline="")
    sys.stdout.write(summary_table(report))
    led = report.discrepancies()
    if led:
        sys.stdout.write("discrepancies:\n")
        for e in led:
            sys.stdout.write(f"  {e['id']}: printed form fails, variant {e['variant']} passes ({e['points']} points)\n")
    s = report.summary
    if s["infra_fail"]:
        return EXIT_INFRA
    if s["fail"]:
        return EXIT_FAIL
    return EXIT_OK


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


class _UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parser


def _rational(text: str):
    try:
        return as_fraction(text if "/" in text else float(text) if any(c in text for c in ".eE") else int(text))
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _family_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", required=True, help="fnkp1, fnkp2, kz, ky, finite_n, laguerre, lk1, lk2, genlk")
    p.add_argument("--construction", default="direct", choices=[c.value for c in Construction])
    p.add_argument("--p", type=_rational, default=0)
    p.add_argument("--q", type=_rational, default=0)
    p.add_argument("--chi", type=_rational, default=0)
    p.add_argument("--nu", type=int, default=1, help="Konhauser index upsilon")
    p.add_argument("--s", type=int, default=0, help="degree")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nkpoly", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eval", help="evaluate a family member at (t, w)")
    _family_args(pe)
    pe.add_argument("--t", type=float, default=1.0)
    pe.add_argument("--w", type=float, default=1.0)
    pe.set_defaults(func=cmd_eval)

    pc = sub.add_parser("coeffs", help="dump exponent/coefficient table")
    _family_args(pc)
    pc.add_argument("--format", choices=("json", "csv"), default="json")
    pc.add_argument("--output")
    pc.set_defaults(func=cmd_coeffs)

    pv = sub.add_parser("verify", help="run an identity verification suite")
    pv.add_argument("--config", help=f"TOML or JSON suite file (default: ${SUITE_ENV}, else the embedded suite)")
    pv.add_argument("--identity", action="append", help="identity id; repeatable; overrides the config list")
    pv.add_argument("--grid", action="append", metavar="NAME=V1,V2", help="override one grid axis")
    pv.add_argument("--format", choices=("json", "csv"))
    pv.add_argument("--output")
    pv.add_argument("--jobs", type=int, default=1)
    pv.set_defaults(func=cmd_verify)

    pq = sub.add_parser("quad", help="generalized Gauss-Laguerre nodes and weights")
    pq.add_argument("--n", type=int, required=True)
    pq.add_argument("--alpha", type=float, default=0.0)
    pq.add_argument("--format", choices=("json", "csv"), default="json")
    pq.add_argument("--output")
    pq.set_defaults(func=cmd_quad)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    verify = args.command == "verify"
    try:
        return args.func(args)
    except (ConfigError, UnknownIdentityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if verify else EXIT_USAGE
    except (NKError, _UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if verify else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
